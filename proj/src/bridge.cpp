#include "blimp/bridge.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <csignal>
#include <deque>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

namespace blimp::bridge {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;
using Clock = std::chrono::steady_clock;
using Message = std::shared_ptr<const std::string>;

namespace {

// Frames queued for one client beyond this are dropped; acks never are.
constexpr std::size_t kMaxPendingFrames = 8;
// Longest stretch of stepping before commands and frames get serviced.
constexpr auto kBatchBudget = std::chrono::milliseconds(20);

Clock::time_point after(Clock::time_point base, double seconds) {
    return base + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
}

Message make_message(const json& j) { return std::make_shared<const std::string>(j.dump()); }

json ack(bool ok, const std::string& detail, const json& id, const std::string& command = {}) {
    json j = {{"type", "ack"}, {"ok", ok}, {"detail", detail}, {"clamped", false}};
    if (!command.empty()) j["command"] = command;
    if (!id.is_null()) j["id"] = id;
    return j;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

class Session;

struct Inbound {
    scenario::ParsedCommand parsed;
    std::string type;
    json id;
    std::weak_ptr<Session> origin;
};

struct Server::Impl {
    Impl(const scenario::ScenarioSpec& s, ServeOptions o);

    // Network side, io thread only.
    void accept();
    void join(const std::shared_ptr<Session>& s);
    void leave(Session* s);
    void on_message(const std::shared_ptr<Session>& s, const std::string& text);

    // Simulation side.
    void loop();
    bool drain();
    void apply(Inbound& in);
    void broadcast(Message m);
    void reply(const std::weak_ptr<Session>& to, Message m);
    void shutdown();

    scenario::ScenarioSpec spec;
    ServeOptions opts;
    scenario::Simulation sim;
    std::string hello;

    net::io_context ioc;
    tcp::acceptor acceptor{ioc};
    net::signal_set signals{ioc};
    std::set<std::shared_ptr<Session>> sessions;
    std::atomic<std::size_t> clients{0};
    std::thread io_thread;

    std::mutex mu;
    std::condition_variable cv;
    std::deque<Inbound> queue;
    std::atomic<bool> stopping{false};
    std::atomic<double> now_sim{0.0};

    // Loop state.
    bool paused = false;
    double timescale = 1.0;
    Clock::time_point anchor_wall;
    std::uint64_t anchor_step = 0;
};

class Session : public std::enable_shared_from_this<Session> {
public:
    Session(tcp::socket socket, Server::Impl& hub) : ws_(std::move(socket)), hub_(hub) {}

    void start() {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(beast::bind_front_handler(&Session::on_accept, shared_from_this()));
    }

    void send(Message m, bool droppable) {
        if (closed_ || closing_) return;
        if (droppable && queue_.size() >= kMaxPendingFrames) return;
        queue_.push_back(std::move(m));
        if (queue_.size() == 1) write();
    }

    /// Flushes queued messages first.
    void close() {
        closing_ = true;
        if (queue_.empty()) hard_close();
    }

private:
    void hard_close() {
        if (closed_) return;
        closed_ = true;
        beast::error_code ec;
        beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
        beast::get_lowest_layer(ws_).socket().close(ec);
    }

    void on_accept(beast::error_code ec) {
        if (ec) return;
        ws_.text(true);
        hub_.join(shared_from_this());
        read();
    }

    void read() {
        ws_.async_read(buffer_, beast::bind_front_handler(&Session::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) return drop();
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        hub_.on_message(shared_from_this(), text);
        read();
    }

    void write() {
        ws_.async_write(net::buffer(*queue_.front()),
                        beast::bind_front_handler(&Session::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        if (ec) return drop();
        queue_.pop_front();
        if (!queue_.empty())
            write();
        else if (closing_)
            hard_close();
    }

    void drop() {
        hard_close();
        queue_.clear();
        hub_.leave(this);
    }

    websocket::stream<beast::tcp_stream> ws_;
    Server::Impl& hub_;
    beast::flat_buffer buffer_;
    std::deque<Message> queue_;
    bool closing_ = false;
    bool closed_ = false;
};

Server::Impl::Impl(const scenario::ScenarioSpec& s, ServeOptions o)
    : spec(s), opts(std::move(o)), sim(spec, vehicle::load_vehicle_file(spec.vehicle_path)), timescale(opts.timescale) {
    if (!(opts.frame_rate > 0.0)) throw std::invalid_argument("frame rate must be positive");
    if (!(opts.timescale >= 0.01 && opts.timescale <= 100.0))
        throw std::invalid_argument("time scale must lie in [0.01, 100]");
    if (opts.queue_capacity == 0) throw std::invalid_argument("command queue capacity must be positive");

    json waypoints = json::array();
    for (const Vec3& w : spec.path.waypoints) waypoints.push_back(vec_json(w));
    hello = json{{"type", "hello"},
                 {"scenario", spec.name},
                 {"mode", scenario::mode_name(spec.mode)},
                 {"hold", vec_json(spec.loiter.hold)},
                 {"waypoints", waypoints},
                 {"physics_dt", sim.physics_dt()},
                 {"control_period", sim.control_period()},
                 {"frame_rate", opts.frame_rate},
                 {"timescale", opts.timescale}}
                .dump();

    try {
        const tcp::endpoint ep(net::ip::make_address(opts.address), opts.port);
        acceptor.open(ep.protocol());
        acceptor.set_option(net::socket_base::reuse_address(true));
        acceptor.bind(ep);
        acceptor.listen(net::socket_base::max_listen_connections);
    } catch (const boost::system::system_error& e) {
        throw BindError("cannot listen on " + opts.address + ":" + std::to_string(opts.port) + ": " + e.what());
    }
}

void Server::Impl::accept() {
    acceptor.async_accept(ioc, [this](beast::error_code ec, tcp::socket socket) {
        if (ec) return;   // acceptor closed
        std::make_shared<Session>(std::move(socket), *this)->start();
        accept();
    });
}

void Server::Impl::join(const std::shared_ptr<Session>& s) {
    sessions.insert(s);
    clients = sessions.size();
    s->send(std::make_shared<const std::string>(hello), false);
}

void Server::Impl::leave(Session* s) {
    for (auto it = sessions.begin(); it != sessions.end(); ++it)
        if (it->get() == s) {
            sessions.erase(it);
            break;
        }
    clients = sessions.size();
}

void Server::Impl::on_message(const std::shared_ptr<Session>& s, const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        s->send(make_message(ack(false, std::string("malformed JSON: ") + e.what(), nullptr)), false);
        return;
    }
    Inbound in;
    in.origin = s;
    if (doc.is_object()) {
        if (auto it = doc.find("id"); it != doc.end()) {
            in.id = *it;
            doc.erase(it);
        }
        if (auto it = doc.find("type"); it != doc.end() && it->is_string()) in.type = it->get<std::string>();
    }
    try {
        in.parsed = scenario::parse_command(doc);
    } catch (const SchemaError& e) {
        s->send(make_message(ack(false, e.what(), in.id, in.type)), false);
        return;
    }
    {
        std::lock_guard lk(mu);
        if (queue.size() >= opts.queue_capacity) {
            s->send(make_message(ack(false, "command queue full", in.id, in.type)), false);
            return;
        }
        queue.push_back(std::move(in));
    }
    cv.notify_one();
}

void Server::Impl::broadcast(Message m) {
    net::post(ioc, [this, m = std::move(m)] {
        for (const auto& s : sessions) s->send(m, true);
    });
}

void Server::Impl::reply(const std::weak_ptr<Session>& to, Message m) {
    net::post(ioc, [to, m = std::move(m)] {
        if (auto s = to.lock()) s->send(m, false);
    });
}

void Server::Impl::apply(Inbound& in) {
    json a = ack(true, in.parsed.detail, in.id, in.type);
    a["clamped"] = in.parsed.clamped;
    a["t"] = sim.time();
    a["step"] = sim.step_count();
    const scenario::Command& c = in.parsed.command;
    if (std::holds_alternative<scenario::PauseCmd>(c)) {
        paused = true;
    } else if (std::holds_alternative<scenario::ResumeCmd>(c)) {
        if (paused) {
            paused = false;
            anchor_wall = Clock::now();
            anchor_step = sim.step_count();
        }
    } else if (const auto* ts = std::get_if<scenario::TimescaleCmd>(&c)) {
        timescale = ts->factor;
        anchor_wall = Clock::now();
        anchor_step = sim.step_count();
    } else {
        try {
            sim.apply(c);
        } catch (const std::exception& e) {
            a["ok"] = false;
            a["detail"] = e.what();
        }
    }
    reply(in.origin, make_message(a));
}

bool Server::Impl::drain() {
    std::deque<Inbound> batch;
    {
        std::lock_guard lk(mu);
        batch.swap(queue);
    }
    for (Inbound& in : batch) apply(in);
    return !batch.empty();
}

void Server::Impl::loop() {
    const double dt = sim.physics_dt();
    const auto steps_per_tick = static_cast<std::uint64_t>(std::llround(sim.control_period() / dt));
    const double frame_period = 1.0 / opts.frame_rate;
    std::optional<std::uint64_t> stop_step;
    if (opts.stop_after) stop_step = static_cast<std::uint64_t>(std::llround(*opts.stop_after / dt));

    std::ofstream log;
    if (!opts.log_path.empty()) {
        log.open(opts.log_path, std::ios::binary);
        if (!log) throw std::runtime_error("cannot write " + opts.log_path);
        log << scenario::csv_header() << '\n';
    }

    anchor_wall = Clock::now();
    anchor_step = sim.step_count();
    Clock::time_point next_frame = anchor_wall;
    Clock::time_point last_frame_wall = anchor_wall;
    double last_frame_sim = sim.time();

    auto emit_frame = [&](Clock::time_point now) {
        const double wall = std::chrono::duration<double>(now - last_frame_wall).count();
        const double ratio = wall > 0.0 ? (sim.time() - last_frame_sim) / wall : 0.0;
        last_frame_wall = now;
        last_frame_sim = sim.time();
        if (clients == 0) return;
        json j = scenario::frame_to_json(sim.frame());
        j["type"] = "frame";
        j["sim_time"] = sim.time();
        j["paused"] = paused;
        j["timescale"] = timescale;
        j["time_ratio"] = ratio;
        broadcast(make_message(j));
    };
    auto finished = [&] { return stop_step && sim.step_count() >= *stop_step; };

    while (!stopping) {
        drain();
        Clock::time_point now = Clock::now();
        if (!paused && !finished()) {
            const double elapsed = std::chrono::duration<double>(now - anchor_wall).count();
            const std::uint64_t target = anchor_step + static_cast<std::uint64_t>(elapsed * timescale / dt + 1e-9);
            const Clock::time_point budget = now + kBatchBudget;
            // Never drop steps: when the host falls behind, sim time lags.
            while (sim.step_count() < target && !finished()) {
                if (sim.step() && log.is_open()) log << scenario::csv_row(sim.frame()) << '\n';
                if (sim.step_count() % steps_per_tick == 0 && Clock::now() > budget) break;
            }
            now_sim = sim.time();
        }
        now = Clock::now();
        if (finished()) {
            emit_frame(now);
            break;
        }
        if (now >= next_frame) {
            emit_frame(now);
            next_frame = after(next_frame, frame_period);
            if (next_frame < now) next_frame = after(now, frame_period);
        }
        Clock::time_point wake = next_frame;
        if (!paused) {
            const std::uint64_t next_tick = (sim.step_count() / steps_per_tick + 1) * steps_per_tick;
            wake = std::min(wake, after(anchor_wall, static_cast<double>(next_tick - anchor_step) * dt / timescale));
        }
        std::unique_lock lk(mu);
        cv.wait_until(lk, wake, [&] { return stopping.load() || !queue.empty(); });
    }
    drain();
}

void Server::Impl::shutdown() {
    stopping = true;
    if (!io_thread.joinable()) return;
    net::post(ioc, [this] {
        beast::error_code ec;
        acceptor.close(ec);
        signals.cancel(ec);
        for (const auto& s : sessions) s->close();
        sessions.clear();
        clients = 0;
    });
    // Give queued frames and acks a moment to leave, then stop hard.
    const auto deadline = Clock::now() + std::chrono::milliseconds(500);
    while (!ioc.stopped() && Clock::now() < deadline) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    ioc.stop();
    io_thread.join();
}

Server::Server(const scenario::ScenarioSpec& spec, ServeOptions opts)
    : impl_(std::make_unique<Impl>(spec, std::move(opts))) {}

Server::~Server() { impl_->shutdown(); }

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

double Server::sim_time() const { return impl_->now_sim; }

void Server::stop() {
    {
        std::lock_guard lk(impl_->mu);
        impl_->stopping = true;
    }
    impl_->cv.notify_all();
}

void Server::run() {
    Impl& s = *impl_;
    s.signals.add(SIGINT);
    s.signals.add(SIGTERM);
    s.signals.async_wait([this](beast::error_code ec, int) {
        if (!ec) stop();
    });
    s.accept();
    s.io_thread = std::thread([&s] { s.ioc.run(); });
    try {
        s.loop();
    } catch (...) {
        s.shutdown();
        throw;
    }
    s.shutdown();
}

}  // namespace blimp::bridge
