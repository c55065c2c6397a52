#include "blimp/aero.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace blimp;
using namespace blimp::aero;
using doctest::Approx;

TEST_CASE("cylindrical flow rotation") {
    RotatedFlow r = rotate_cylindrical_flow({1, 2, -3});
    CHECK(r.flow == Vec3(1, 0, 5));
    CHECK(r.phi == Approx(std::atan2(2.0, -3.0)));
    CHECK(rotate_cylindrical_flow({1, 0, 0}).flow == Vec3(1, 0, 0));
    CHECK(rotate_cylindrical_flow({0, -2, 0}).flow == Vec3(0, 0, 2));
}

TEST_CASE("angle of attack") {
    CHECK(angle_of_attack({1, 0, 1}) == Approx(kPi / 4));
    CHECK(angle_of_attack({1, 0, 0}) == 0.0);
    CHECK(angle_of_attack({0, 0, -2}) == -kPi / 2);
    CHECK(angle_of_attack({0, 0, 0}) == 0.0);
}

TEST_CASE("coefficient curves") {
    AeroPrimitive p;
    p.c_l0 = 1.2;
    p.alpha_stall = 0.3;
    p.c_d0 = 0.05;
    p.c_d1 = 1.0;
    CHECK(lift_coefficient(0.15, p) == Approx(0.6).epsilon(1e-12));
    CHECK(lift_coefficient(0.3, p) == 1.2);
    CHECK(lift_coefficient(0.0, p) == 0.0);
    CHECK(lift_coefficient(kPi / 2, p) == Approx(0.0).epsilon(1e-15));
    CHECK(drag_coefficient(kPi / 4, p) == Approx(0.525).epsilon(1e-12));
    CHECK(drag_coefficient(0.0, p) == 0.05);
    CHECK(drag_coefficient(-kPi / 2, p) == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("coefficients are even in alpha and lift peaks at stall") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        AeroPrimitive p;
        p.c_l0 = 2.0 * u(rng);
        p.c_d0 = 0.2 * u(rng);
        p.c_d1 = p.c_d0 + u(rng);
        p.alpha_stall = 0.05 + 1.4 * u(rng);
        const double a = kPi / 2 * u(rng);
        CHECK(lift_coefficient(-a, p) == lift_coefficient(a, p));
        CHECK(std::abs(lift_coefficient(a, p)) <= p.c_l0 + 1e-15);
        CHECK(drag_coefficient(-a, p) == drag_coefficient(a, p));
        CHECK(drag_coefficient(a, p) <= drag_coefficient(std::min(a + 0.01, kPi / 2), p) + 1e-15);
    }
}

TEST_CASE("forward motion in still air gives pure drag") {
    AeroPrimitive p;
    p.area = 1.0;
    p.c_d0 = 0.1;
    p.c_d1 = 1.0;
    p.c_l0 = 1.0;
    const AeroResult r = aero_force(p, {-5, 0, 0});
    CHECK(r.drag.x() == Approx(-0.6125 * 25 * 0.1).epsilon(1e-12));
    CHECK(r.drag.y() == 0.0);
    CHECK(r.drag.z() == 0.0);
    CHECK(r.lift.norm() == 0.0);
    CHECK(aero_force(p, Vec3::Zero()).total().norm() == 0.0);
}

TEST_CASE("climbing flow pushes the primitive down") {
    AeroPrimitive p;
    p.area = 0.5;
    p.c_l0 = 1.2;
    p.c_d0 = 0.05;
    p.c_d1 = 1.0;
    p.alpha_stall = 0.3;
    const Vec3 f(-5, 0, -0.5);
    const AeroResult r = aero_force(p, f);
    // scalar oracle
    const double alpha = std::atan(0.5 / 5.0);
    const double q = 0.5 * 1.225 * 25.25;
    const double cl = 1.2 * alpha / 0.3;
    const double n = std::sqrt(25.25);
    CHECK(r.alpha == Approx(alpha));
    CHECK(r.lift.x() == Approx(q * 0.5 * cl * 0.5 / n).epsilon(1e-12));
    CHECK(r.lift.z() == Approx(q * 0.5 * cl * -5.0 / n).epsilon(1e-12));
    CHECK(r.lift.z() < 0.0);
}

TEST_CASE("signed lift flips with the angle of attack") {
    AeroPrimitive p;
    p.c_l0 = 1.2;
    p.c_d0 = 0.05;
    p.c_d1 = 1.0;
    for (double fz : {0.1, 0.7, 2.0, 6.0}) {
        const AeroResult up = aero_force(p, {-3, 0, fz});
        const AeroResult down = aero_force(p, {-3, 0, -fz});
        CHECK(up.alpha == -down.alpha);
        CHECK(up.lift.z() == doctest::Approx(-down.lift.z()));
        CHECK(up.lift.x() == doctest::Approx(down.lift.x()));
        CHECK(up.lift.z() > 0.0);
    }
}

TEST_CASE("lift is orthogonal to drag and forces scale with area and speed squared") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (Kind kind : {Kind::QuasiPlanar, Kind::QuasiCylindrical}) {
        AeroPrimitive p;
        p.kind = kind;
        p.c_l0 = 1.0;
        p.c_d0 = 0.1;
        p.c_d1 = 0.9;
        for (int i = 0; i < 500; ++i) {
            const Vec3 f(u(rng), u(rng), u(rng));
            const AeroResult r = aero_force(p, f);
            CHECK(std::abs(r.lift.dot(r.drag)) <= 1e-9 * (1.0 + r.lift.norm() * r.drag.norm()));
            const AeroResult r2 = aero_force(p, 2.0 * f);
            CHECK((r2.total() - 4.0 * r.total()).norm() <= 1e-12 * (1.0 + r2.total().norm()));
            AeroPrimitive big = p;
            big.area = 3.0;
            CHECK((aero_force(big, f).total() - 3.0 * r.total()).norm() <= 1e-12 * (1.0 + r.total().norm()));
        }
    }
}

TEST_CASE("hull drag distribution") {
    const std::vector<double> one = distribute_hull_drag(0.3, std::vector<double>{1.0});
    CHECK(one[0] == Approx(0.3));
    const std::vector<double> w{1.0, 0.1, 1.0};
    const std::vector<double> three = distribute_hull_drag(0.21, w);
    CHECK(three[0] == Approx(0.1).epsilon(1e-12));
    CHECK(three[1] == Approx(0.01).epsilon(1e-12));
    CHECK(three[2] == Approx(0.1).epsilon(1e-12));
    CHECK(std::abs(three[0] + three[1] + three[2] - 0.21) < 1e-12);
    CHECK_THROWS_AS(distribute_hull_drag(0.2, std::vector<double>{0.0, 0.0}), AllZeroWeights);
}

TEST_CASE("coefficient validation") {
    AeroPrimitive p;
    p.alpha_stall = kPi / 2;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.alpha_stall = 0.3;
    p.area = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
