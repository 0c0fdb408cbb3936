#include "teleop/server.hpp"

#include <chrono>
#include <deque>
#include <iostream>
#include <map>
#include <mutex>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "teleop/chain_config.hpp"
#include "teleop/errors.hpp"

namespace teleop {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

struct Outbound {
    std::shared_ptr<const std::string> text;
    bool droppable = false;
};

} // namespace

class WsSession;

struct Server::Impl {
    Bridge& bridge;
    ServerOptions options;
    net::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    Mailbox mailbox;
    std::string chain_doc;
    std::string scene_doc;

    mutable std::mutex sessions_mutex;
    std::map<ConnectionId, std::weak_ptr<WsSession>> sessions;
    std::atomic<ConnectionId> next_id{1};
    std::atomic<double> sim_time{0.0};
    std::atomic<bool> running{false};
    std::thread io_thread;
    std::thread control_thread;

    Impl(Bridge& b, ServerOptions o) : bridge(b), options(std::move(o)) {}

    void do_accept();
    void on_frame(ConnectionId id, const std::string& text);
    void send_to(ConnectionId id, const WireMessage& msg);
    void broadcast(const WireMessage& msg, bool droppable);
    void add_session(ConnectionId id, const std::shared_ptr<WsSession>& s);
    void remove_session(ConnectionId id);
    void control_loop();
    std::size_t session_count() const {
        std::lock_guard lock(sessions_mutex);
        return sessions.size();
    }
};

class WsSession : public std::enable_shared_from_this<WsSession> {
  public:
    WsSession(tcp::socket&& socket, Server::Impl& server, ConnectionId id)
        : ws_(std::move(socket)), server_(server), id_(id) {}

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.text(true);
        ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
    }

    // Callable from any thread.
    void send(Outbound out) {
        net::post(ws_.get_executor(), [self = shared_from_this(), out = std::move(out)]() mutable {
            self->enqueue(std::move(out));
        });
    }

  private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        server_.add_session(id_, shared_from_this());
        do_read();
    }

    void do_read() {
        ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            server_.remove_session(id_);
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        server_.on_frame(id_, text);
        do_read();
    }

    void enqueue(Outbound out) {
        if (queue_.size() >= server_.options.outbound_queue) {
            // Index 0 may be mid-write; drop the oldest droppable frame behind it.
            auto victim = std::find_if(queue_.begin() + 1, queue_.end(), [](const Outbound& o) { return o.droppable; });
            if (victim == queue_.end()) victim = queue_.begin() + 1;
            if (victim != queue_.end()) queue_.erase(victim);
        }
        queue_.push_back(std::move(out));
        if (queue_.size() == 1) write_front();
    }

    void write_front() {
        ws_.async_write(net::buffer(*queue_.front().text),
                        beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        if (ec) {
            server_.remove_session(id_);
            return;
        }
        queue_.pop_front();
        if (!queue_.empty()) write_front();
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::deque<Outbound> queue_;
    Server::Impl& server_;
    ConnectionId id_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
  public:
    HttpSession(tcp::socket&& socket, Server::Impl& server) : stream_(std::move(socket)), server_(server) {}

    void run() { do_read(); }

  private:
    void do_read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) return;
        if (websocket::is_upgrade(req_)) {
            stream_.expires_never();
            const ConnectionId id = server_.next_id++;
            std::make_shared<WsSession>(stream_.release_socket(), server_, id)->run(std::move(req_));
            return;
        }
        auto res = std::make_shared<http::response<http::string_body>>();
        res->version(req_.version());
        res->keep_alive(req_.keep_alive());
        res->set(http::field::content_type, "application/json");
        res->set(http::field::access_control_allow_origin, "*");
        const std::string target(req_.target());
        if (req_.method() != http::verb::get) {
            res->result(http::status::method_not_allowed);
            res->body() = R"({"error":"only GET is supported"})";
        } else if (target == "/chain") {
            res->result(http::status::ok);
            res->body() = server_.chain_doc;
        } else if (target == "/scene" && !server_.scene_doc.empty()) {
            res->result(http::status::ok);
            res->body() = server_.scene_doc;
        } else if (target == "/health") {
            res->result(http::status::ok);
            res->body() = R"({"ok":true})";
        } else {
            res->result(http::status::not_found);
            res->body() = R"({"error":"not found"})";
        }
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code wec, std::size_t) {
            if (wec || !res->keep_alive()) {
                beast::error_code ignored;
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                return;
            }
            self->do_read();
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    Server::Impl& server_;
};

void Server::Impl::do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (!acceptor.is_open()) return;
        if (!ec) std::make_shared<HttpSession>(std::move(socket), *this)->run();
        do_accept();
    });
}

void Server::Impl::on_frame(ConnectionId id, const std::string& text) {
    try {
        mailbox.push(id, parse_message(text));
    } catch (const FieldError& e) {
        const std::string code = e.field() == "type" ? "unknown_type" : "malformed_envelope";
        send_to(id, make_error(std::nullopt, sim_time.load(), code, e.what()));
    }
}

void Server::Impl::add_session(ConnectionId id, const std::shared_ptr<WsSession>& s) {
    std::lock_guard lock(sessions_mutex);
    sessions[id] = s;
}

void Server::Impl::remove_session(ConnectionId id) {
    std::lock_guard lock(sessions_mutex);
    sessions.erase(id);
}

void Server::Impl::send_to(ConnectionId id, const WireMessage& msg) {
    std::shared_ptr<WsSession> s;
    {
        std::lock_guard lock(sessions_mutex);
        auto it = sessions.find(id);
        if (it != sessions.end()) s = it->second.lock();
    }
    if (s) s->send({std::make_shared<const std::string>(msg.serialize()), false});
}

void Server::Impl::broadcast(const WireMessage& msg, bool droppable) {
    auto text = std::make_shared<const std::string>(msg.serialize());
    std::vector<std::shared_ptr<WsSession>> targets;
    {
        std::lock_guard lock(sessions_mutex);
        for (auto& [id, weak] : sessions) {
            if (auto s = weak.lock()) targets.push_back(std::move(s));
        }
    }
    for (auto& s : targets) s->send({text, droppable});
}

void Server::Impl::control_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(bridge.config().period()));
    const auto start = clock::now();
    std::uint64_t k = 0;

    while (running.load()) {
        if (options.realtime) {
            // Deadlines come from the tick index, so a late tick does not shift later ones.
            std::this_thread::sleep_until(start + static_cast<clock::rep>(k) * period);
        } else if (session_count() == 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
            continue;
        }
        ++k;

        Mailbox::Drained in = mailbox.drain();
        for (const Mailbox::Entry& e : in.superseded) {
            send_to(e.conn, make_ack(e.msg.seq, bridge.sim_time(), {{"superseded", true}}));
        }
        for (const Mailbox::Entry& e : in.deliver) {
            for (const WireMessage& reply : bridge.handle_message(e.msg, e.conn)) send_to(e.conn, reply);
        }

        const Bridge::TickOutput out = bridge.tick();
        sim_time.store(bridge.sim_time());
        for (const WireMessage& ev : out.events) broadcast(ev, false);
        if (out.state) broadcast(*out.state, true);
    }
}

Server::Server(Bridge& bridge, ServerOptions options) : impl_(std::make_unique<Impl>(bridge, std::move(options))) {
    impl_->chain_doc = chain_to_json(bridge.chain()).dump();
    if (bridge.scene()) impl_->scene_doc = scene_to_json(*bridge.scene()).dump();
}

Server::~Server() {
    stop();
    wait();
}

void Server::start() {
    Impl& s = *impl_;
    const tcp::endpoint endpoint(net::ip::make_address(s.options.address), s.options.port);
    s.acceptor.open(endpoint.protocol());
    s.acceptor.set_option(net::socket_base::reuse_address(true));
    s.acceptor.bind(endpoint);
    s.acceptor.listen(net::socket_base::max_listen_connections);
    bound_port_ = s.acceptor.local_endpoint().port();

    s.running = true;
    s.do_accept();
    s.io_thread = std::thread([&s] { s.ioc.run(); });
    s.control_thread = std::thread([&s] { s.control_loop(); });
}

void Server::stop() {
    Impl& s = *impl_;
    if (!s.running.exchange(false)) return;
    net::post(s.ioc, [&s] {
        beast::error_code ignored;
        s.acceptor.close(ignored);
    });
    s.ioc.stop();
}

void Server::wait() {
    Impl& s = *impl_;
    if (s.control_thread.joinable()) s.control_thread.join();
    if (s.io_thread.joinable()) s.io_thread.join();
}

std::size_t Server::connections() const { return impl_->session_count(); }

} // namespace teleop
