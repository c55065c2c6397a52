#include "blimp/environment.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace blimp;
using namespace blimp::env;
using doctest::Approx;

TEST_CASE("compass from-direction to ENU") {
    WindConfig c;
    c.speed = 1.5;
    c.from_deg = 135.0;
    const Vec3 w = mean_wind(c);
    CHECK(w.x() == Approx(-1.0607).epsilon(1e-4));
    CHECK(w.y() == Approx(1.0607).epsilon(1e-4));
    CHECK(w.z() == 0.0);
    c.speed = 2.0;
    c.from_deg = 0.0;
    CHECK((mean_wind(c) - Vec3(0, -2, 0)).norm() < 1e-15);
    c.speed = 0.0;
    CHECK(mean_wind(c).norm() == 0.0);
}

TEST_CASE("zero magnitude gives no gusts") {
    WindConfig c;
    c.speed = 1.5;
    c.from_deg = 135.0;
    Wind w(c);
    for (int i = 0; i < 1000; ++i) CHECK((w.advance(0.001) - mean_wind(c)).norm() == 0.0);
}

TEST_CASE("gust sequence is a function of the seed") {
    WindConfig c;
    c.magnitude = 3.0;
    c.seed = 42;
    Wind a(c), b(c);
    c.seed = 43;
    Wind other(c);
    bool differs = false;
    for (int i = 0; i < 5000; ++i) {
        const Vec3 x = a.advance(0.01);
        CHECK(x == b.advance(0.01));
        differs = differs || x != other.advance(0.01);
    }
    CHECK(differs);
}

TEST_CASE("low-altitude intensities and scales") {
    // oracle in feet, as the standard states it
    const double h = 50.0 * 3.28083989501312;
    const double w20 = 3.0 * 3.0 * 0.514444444444444;
    const DrydenScales s = dryden_scales(50.0, 3.0, 3.0);
    CHECK(s.sigma_w == Approx(0.1 * w20).epsilon(1e-12));
    CHECK(s.sigma_u == Approx(0.1 * w20 / std::pow(0.177 + 0.000823 * h, 0.4)).epsilon(1e-12));
    CHECK(s.sigma_v == s.sigma_u);
    CHECK(s.length_w == Approx(50.0).epsilon(1e-12));
    CHECK(s.length_u == Approx(h / std::pow(0.177 + 0.000823 * h, 1.2) / 3.28083989501312).epsilon(1e-12));
}

TEST_CASE("short gust run has the expected spread") {
    WindConfig c;
    c.magnitude = 3.0;
    c.seed = 11;
    DrydenTurbulence d(c.seed);
    const DrydenScales s = dryden_scales(50.0, 3.0, 3.0);
    const int n = 200000;
    double sw = 0.0, sww = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = d.step(0.1, 2.0, 50.0, c).z();
        sw += w;
        sww += w * w;
    }
    const double sd = std::sqrt(sww / n - (sw / n) * (sw / n));
    CHECK(sd == Approx(s.sigma_w).epsilon(0.1));
}

TEST_CASE("buoyancy force") {
    BuoyancySection sec;
    sec.volume = 5.0;
    sec.coefficient = 1.0;
    BodyState st;
    st.position = {1, 2, 3};
    const Wrench w = buoyancy_wrench(sec, BodyId{0}, st, 1.225);
    CHECK(w.force.z() == Approx(60.08625).epsilon(1e-12));
    CHECK(w.force.x() == 0.0);
    CHECK(w.torque.norm() == 0.0);

    sec.coefficient = 0.0;
    CHECK(buoyancy_wrench(sec, BodyId{0}, st).force.norm() == 0.0);

    sec.coefficient = 0.95;
    CHECK(buoyancy_wrench(sec, BodyId{0}, st).force.z() == 0.95 * 5.0 * 1.225 * kGravity);

    // offset centre of buoyancy yields a restoring torque
    sec.coefficient = 1.0;
    sec.center = {0.5, 0, 0};
    st.orientation = Quat(Eigen::AngleAxisd(0.2, Vec3::UnitY()));
    CHECK(buoyancy_wrench(sec, BodyId{0}, st).torque.y() != 0.0);
}
