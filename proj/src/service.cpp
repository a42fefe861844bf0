#include "teleskill/service.hpp"

#include "teleskill/control_loop.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/version.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace teleskill {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

// A client that cannot keep up loses the oldest messages rather than growing
// the queue without bound.
constexpr std::size_t kMaxQueuedFrames = 4096;

std::string mime_type(const std::filesystem::path& p) {
    const std::string ext = p.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
    if (ext == ".js" || ext == ".mjs") return "text/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    if (ext == ".ico") return "image/x-icon";
    if (ext == ".map") return "application/json";
    if (ext == ".wasm") return "application/wasm";
    return "application/octet-stream";
}

struct Inbound {
    std::uint64_t client;
    std::string text;
};

class Hub;

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket&& socket, Hub& hub, std::uint64_t id) : ws_(std::move(socket)), hub_(hub), id_(id) {}

    void run(http::request<http::string_body> req);
    void send(std::shared_ptr<const std::string> frame);
    std::uint64_t id() const { return id_; }

private:
    void on_accept(beast::error_code ec);
    void do_read();
    void on_read(beast::error_code ec, std::size_t);
    void do_write();
    void on_write(beast::error_code ec, std::size_t);

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::deque<std::shared_ptr<const std::string>> queue_;
    Hub& hub_;
    std::uint64_t id_;
};

class Hub {
public:
    explicit Hub(SimConfig config) : config_(config), store_(config.skill_dir) {}

    const SimConfig& config() const { return config_; }
    const SkillStore& store() const { return store_; }

    void add(const std::shared_ptr<WsSession>& s) {
        std::lock_guard<std::mutex> lock(sessions_mutex_);
        sessions_[s->id()] = s;
    }
    void remove(std::uint64_t id) {
        std::lock_guard<std::mutex> lock(sessions_mutex_);
        sessions_.erase(id);
    }
    std::uint64_t next_id() { return ++last_id_; }

    void push(Inbound msg) {
        std::lock_guard<std::mutex> lock(inbound_mutex_);
        inbound_.push_back(std::move(msg));
    }
    std::vector<Inbound> drain() {
        std::lock_guard<std::mutex> lock(inbound_mutex_);
        std::vector<Inbound> out(std::make_move_iterator(inbound_.begin()), std::make_move_iterator(inbound_.end()));
        inbound_.clear();
        return out;
    }

    void deliver(const std::vector<Outbound>& out) {
        if (out.empty()) {
            return;
        }
        std::vector<std::shared_ptr<WsSession>> targets;
        {
            std::lock_guard<std::mutex> lock(sessions_mutex_);
            for (auto& [id, weak] : sessions_) {
                if (auto s = weak.lock()) {
                    targets.push_back(std::move(s));
                }
            }
        }
        for (const Outbound& o : out) {
            auto frame = std::make_shared<const std::string>(o.text);
            for (const auto& s : targets) {
                if (!o.recipient || *o.recipient == s->id()) {
                    s->send(frame);
                }
            }
        }
    }

private:
    SimConfig config_;
    SkillStore store_;   // read-only view for HTTP; writes go through the control loop
    std::mutex sessions_mutex_;
    std::map<std::uint64_t, std::weak_ptr<WsSession>> sessions_;
    std::atomic<std::uint64_t> last_id_{0};
    std::mutex inbound_mutex_;
    std::vector<Inbound> inbound_;
};

void WsSession::run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
}

void WsSession::on_accept(beast::error_code ec) {
    if (ec) {
        return;
    }
    ws_.text(true);
    hub_.add(shared_from_this());
    do_read();
}

void WsSession::do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
}

void WsSession::on_read(beast::error_code ec, std::size_t) {
    if (ec) {
        hub_.remove(id_);
        return;
    }
    hub_.push({id_, beast::buffers_to_string(buffer_.data())});
    buffer_.consume(buffer_.size());
    do_read();
}

void WsSession::send(std::shared_ptr<const std::string> frame) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), frame = std::move(frame)]() mutable {
        self->queue_.push_back(std::move(frame));
        if (self->queue_.size() > kMaxQueuedFrames) {
            // never drop the frame being written (front)
            self->queue_.erase(self->queue_.begin() + 1);
        }
        if (self->queue_.size() == 1) {
            self->do_write();
        }
    });
}

void WsSession::do_write() {
    ws_.async_write(asio::buffer(*queue_.front()), beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
}

void WsSession::on_write(beast::error_code ec, std::size_t) {
    if (ec) {
        hub_.remove(id_);
        return;
    }
    queue_.pop_front();
    if (!queue_.empty()) {
        do_write();
    }
}

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, Hub& hub) : stream_(std::move(socket)), hub_(hub) {}

    void run() {
        asio::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
    }

private:
    void do_read() {
        parser_.emplace();
        parser_->body_limit(64 * 1024);
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, *parser_,
                         beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            return;
        }
        if (websocket::is_upgrade(parser_->get())) {
            stream_.expires_never();
            auto ws = std::make_shared<WsSession>(stream_.release_socket(), hub_, hub_.next_id());
            ws->run(parser_->release());
            return;
        }
        respond(parser_->release());
    }

    void respond(const http::request<http::string_body>& req) {
        auto res = std::make_shared<http::response<http::string_body>>(route(req));
        res->set(http::field::server, "teleskill");
        res->keep_alive(req.keep_alive());
        res->prepare_payload();
        http::async_write(stream_, *res,
                          [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
                              if (ec || res->need_eof()) {
                                  self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                                  return;
                              }
                              self->do_read();
                          });
    }

    http::response<http::string_body> reply(const http::request<http::string_body>& req, http::status status,
                                            std::string body, const std::string& type) {
        http::response<http::string_body> res{status, req.version()};
        res.set(http::field::content_type, type);
        res.set(http::field::access_control_allow_origin, "*");
        res.body() = std::move(body);
        return res;
    }

    http::response<http::string_body> not_found(const http::request<http::string_body>& req) {
        return reply(req, http::status::not_found, R"({"error":"not found"})", "application/json");
    }

    http::response<http::string_body> route(const http::request<http::string_body>& req) {
        if (req.method() != http::verb::get && req.method() != http::verb::head) {
            return reply(req, http::status::method_not_allowed, R"({"error":"only GET is supported"})",
                         "application/json");
        }
        std::string target(req.target());
        if (auto q = target.find('?'); q != std::string::npos) {
            target.erase(q);
        }
        const std::string prefix = "/skills/";
        if (target == "/healthz") {
            return reply(req, http::status::ok, R"({"status":"ok"})", "application/json");
        }
        if (target == "/skills" || target == "/skills/") {
            return reply(req, http::status::ok, nlohmann::json{{"names", hub_.store().list()}}.dump(),
                         "application/json");
        }
        if (target.rfind(prefix, 0) == 0) {
            const std::string name = target.substr(prefix.size());
            if (!hub_.store().contains(name)) {
                return not_found(req);
            }
            return reply(req, http::status::ok, hub_.store().read_raw(name), "application/json");
        }
        if (target == "/chain") {
            return reply(req, http::status::ok, chain_to_json(hub_.config().chain).dump(), "application/json");
        }
        if (target == "/config") {
            const SimConfig& c = hub_.config();
            nlohmann::json j = {
                {"control_rate", c.control_rate},
                {"record_rate", c.record_rate},
                {"state_decimation", c.state_decimation},
                {"teleop",
                 {{"max_linear", c.twist_limits.linear},
                  {"max_angular", c.twist_limits.angular},
                  {"max_gripper", c.twist_limits.gripper}}},
            };
            return reply(req, http::status::ok, j.dump(), "application/json");
        }
        return serve_static(req, target);
    }

    http::response<http::string_body> serve_static(const http::request<http::string_body>& req, std::string target) {
        const std::string& root = hub_.config().static_dir;
        if (root.empty() || target.empty() || target.front() != '/' || target.find("..") != std::string::npos) {
            return not_found(req);
        }
        if (target.back() == '/') {
            target += "index.html";
        }
        const std::filesystem::path file = std::filesystem::path(root) / target.substr(1);
        std::error_code ec;
        if (!std::filesystem::is_regular_file(file, ec)) {
            return not_found(req);
        }
        std::ifstream in(file, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        return reply(req, http::status::ok, buf.str(), mime_type(file));
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    std::optional<http::request_parser<http::string_body>> parser_;
    Hub& hub_;
};

class Listener : public std::enable_shared_from_this<Listener> {
public:
    Listener(asio::io_context& ioc, tcp::endpoint endpoint, Hub& hub) : ioc_(ioc), acceptor_(ioc), hub_(hub) {
        acceptor_.open(endpoint.protocol());
        acceptor_.set_option(asio::socket_base::reuse_address(true));
        acceptor_.bind(endpoint);
        acceptor_.listen(asio::socket_base::max_listen_connections);
    }

    std::uint16_t port() const { return acceptor_.local_endpoint().port(); }

    void run() { do_accept(); }

    void close() {
        asio::post(acceptor_.get_executor(), [self = shared_from_this()] {
            beast::error_code ec;
            self->acceptor_.close(ec);
        });
    }

private:
    void do_accept() {
        acceptor_.async_accept(asio::make_strand(ioc_),
                               beast::bind_front_handler(&Listener::on_accept, shared_from_this()));
    }

    void on_accept(beast::error_code ec, tcp::socket socket) {
        if (ec == asio::error::operation_aborted) {
            return;
        }
        if (!ec) {
            std::make_shared<HttpSession>(std::move(socket), hub_)->run();
        }
        do_accept();
    }

    asio::io_context& ioc_;
    tcp::acceptor acceptor_;
    Hub& hub_;
};

}  // namespace

struct Service::Impl {
    explicit Impl(SimConfig cfg) : config(std::move(cfg)), hub(config), loop(config) {}

    void control_thread() {
        using clock = std::chrono::steady_clock;
        const double dt = loop.robot().step_size();
        const auto t0 = clock::now();
        std::uint64_t cycles = 0;
        while (!stopping.load()) {
            for (Inbound& msg : hub.drain()) {
                hub.deliver(loop.handle(msg.client, msg.text));
            }
            hub.deliver(loop.tick());
            ++cycles;
            if (config.time_scale > 0.0) {
                const auto due = t0 + std::chrono::duration_cast<clock::duration>(
                                          std::chrono::duration<double>(static_cast<double>(cycles) * dt /
                                                                        config.time_scale));
                std::unique_lock<std::mutex> lock(wake_mutex);
                wake.wait_until(lock, due, [&] { return stopping.load(); });
            }
        }
    }

    SimConfig config;
    Hub hub;
    ControlLoop loop;
    asio::io_context ioc{1};
    std::shared_ptr<Listener> listener;
    std::thread io_thread;
    std::thread loop_thread;
    std::atomic<bool> stopping{false};
    std::atomic<bool> started{false};
    std::mutex wake_mutex;
    std::condition_variable wake;
    std::mutex done_mutex;
    std::condition_variable done;
    bool finished = false;
};

Service::Service(SimConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() { stop(); }

void Service::start() {
    if (impl_->started.exchange(true)) {
        throw ServiceError("service already started");
    }
    try {
        const auto address = asio::ip::make_address(impl_->config.bind_address);
        impl_->listener = std::make_shared<Listener>(
            impl_->ioc, tcp::endpoint{address, static_cast<std::uint16_t>(impl_->config.port)}, impl_->hub);
    } catch (const std::exception& e) {
        throw ServiceError("cannot listen on " + impl_->config.bind_address + ":" +
                           std::to_string(impl_->config.port) + ": " + e.what());
    }
    impl_->listener->run();
    impl_->io_thread = std::thread([this] { impl_->ioc.run(); });
    impl_->loop_thread = std::thread([this] { impl_->control_thread(); });
}

void Service::wait() {
    std::unique_lock<std::mutex> lock(impl_->done_mutex);
    impl_->done.wait(lock, [&] { return impl_->finished; });
}

void Service::stop() {
    if (!impl_ || !impl_->started.load() || impl_->stopping.exchange(true)) {
        return;
    }
    impl_->wake.notify_all();
    if (impl_->loop_thread.joinable()) {
        impl_->loop_thread.join();
    }
    impl_->listener->close();
    impl_->ioc.stop();
    if (impl_->io_thread.joinable()) {
        impl_->io_thread.join();
    }
    {
        std::lock_guard<std::mutex> lock(impl_->done_mutex);
        impl_->finished = true;
    }
    impl_->done.notify_all();
}

std::uint16_t Service::port() const {
    if (!impl_->listener) {
        throw ServiceError("service not started");
    }
    return impl_->listener->port();
}

// ---------------------------------------------------------------------------

namespace {

struct ParsedUrl {
    std::string host;
    std::string port;
    std::string path;
};

ParsedUrl parse_ws_url(const std::string& url) {
    const std::string scheme = "ws://";
    if (url.rfind(scheme, 0) != 0) {
        throw ServiceError("only ws:// URLs are supported: " + url);
    }
    std::string rest = url.substr(scheme.size());
    ParsedUrl u;
    const auto slash = rest.find('/');
    u.path = slash == std::string::npos ? "/" : rest.substr(slash);
    rest = rest.substr(0, slash);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) {
        u.host = rest;
        u.port = "80";
    } else {
        u.host = rest.substr(0, colon);
        u.port = rest.substr(colon + 1);
    }
    if (u.host.empty() || u.port.empty()) {
        throw ServiceError("malformed URL: " + url);
    }
    return u;
}

}  // namespace

struct WsClient::Impl {
    asio::io_context ioc;
    websocket::stream<beast::tcp_stream> ws{ioc};
    beast::flat_buffer buffer;
};

WsClient::WsClient(const std::string& url) : impl_(std::make_unique<Impl>()) {
    const ParsedUrl u = parse_ws_url(url);
    try {
        tcp::resolver resolver(impl_->ioc);
        auto& stream = beast::get_lowest_layer(impl_->ws);
        stream.expires_after(std::chrono::seconds(10));
        stream.connect(resolver.resolve(u.host, u.port));
        stream.expires_never();
        impl_->ws.handshake(u.host + ":" + u.port, u.path);
        impl_->ws.text(true);
    } catch (const beast::system_error& e) {
        throw ServiceError("cannot connect to " + url + ": " + e.code().message());
    }
}

WsClient::~WsClient() {
    try {
        close();
    } catch (...) {
    }
}

void WsClient::send(const std::string& text) {
    try {
        impl_->ws.write(asio::buffer(text));
    } catch (const beast::system_error& e) {
        throw ServiceError("send failed: " + e.code().message());
    }
}

std::string WsClient::receive(double timeout_s) {
    // Synchronous reads cannot time out on their own; drive an async read
    // through the private io_context with a deadline.
    beast::error_code result = asio::error::would_block;
    impl_->buffer.consume(impl_->buffer.size());
    impl_->ws.async_read(impl_->buffer, [&](beast::error_code ec, std::size_t) { result = ec; });
    impl_->ioc.restart();
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(timeout_s));
    while (result == asio::error::would_block && std::chrono::steady_clock::now() < deadline) {
        impl_->ioc.run_one_until(deadline);
    }
    if (result == asio::error::would_block) {
        beast::get_lowest_layer(impl_->ws).cancel();
        impl_->ioc.restart();
        impl_->ioc.run();
        throw ServiceError("timed out waiting for a message");
    }
    if (result) {
        throw ServiceError("connection closed: " + result.message());
    }
    return beast::buffers_to_string(impl_->buffer.data());
}

void WsClient::close() {
    if (impl_ && impl_->ws.is_open()) {
        beast::error_code ec;
        impl_->ws.close(websocket::close_code::normal, ec);
    }
}

HttpReply http_get(const std::string& host, std::uint16_t port, const std::string& target) {
    asio::io_context ioc;
    tcp::resolver resolver(ioc);
    beast::tcp_stream stream(ioc);
    try {
        stream.expires_after(std::chrono::seconds(10));
        stream.connect(resolver.resolve(host, std::to_string(port)));
        http::request<http::empty_body> req{http::verb::get, target, 11};
        req.set(http::field::host, host);
        http::write(stream, req);
        beast::flat_buffer buffer;
        http::response<http::string_body> res;
        http::read(stream, buffer, res);
        beast::error_code ec;
        stream.socket().shutdown(tcp::socket::shutdown_both, ec);
        return {static_cast<int>(res.result_int()), res.body(), std::string(res[http::field::content_type])};
    } catch (const beast::system_error& e) {
        throw ServiceError("HTTP GET " + target + " failed: " + e.code().message());
    }
}

}  // namespace teleskill
