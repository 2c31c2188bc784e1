#include <atomic>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "wayfarer/error.hpp"
#include "wayfarer/teleop.hpp"

namespace wayfarer::teleop {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

constexpr std::string_view kPlaceholderPage =
    "<!doctype html><html><head><title>wayfarer</title></head><body>"
    "<p>wayfarer teleop server. Connect a console to <code>/ws</code>, or pass "
    "<code>--console-dir</code> to serve the operator console here.</p></body></html>\n";

std::string_view mime_type(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

class WsSession;

// Shared between the network thread, the simulation thread and the sessions.
struct Hub {
  std::mutex mutex;
  std::set<std::shared_ptr<WsSession>> sessions;
  std::mutex inbox_mutex;
  std::vector<Command> inbox;
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}

  void run(http::request<http::string_body> request) {
    ws_.text(true);
    ws_.async_accept(request, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

  // Thread-safe; the write is performed on the session's executor.
  void send(std::shared_ptr<const std::string> line) {
    net::post(ws_.get_executor(), [self = shared_from_this(), line = std::move(line)] {
      self->queue_.push_back(line);
      if (self->queue_.size() == 1) self->write_next();
    });
  }

  void close() {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      beast::error_code ec;
      beast::get_lowest_layer(self->ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
      beast::get_lowest_layer(self->ws_).socket().close(ec);
    });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    {
      std::lock_guard lock(hub_.mutex);
      hub_.sessions.insert(shared_from_this());
    }
    read_next();
  }

  void read_next() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      detach();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        Command cmd = parse_command(line);
        std::lock_guard lock(hub_.inbox_mutex);
        hub_.inbox.push_back(std::move(cmd));
      } catch (const Error& e) {
        send(std::make_shared<const std::string>(error_line(e.what())));
      }
    }
    read_next();
  }

  void write_next() {
    ws_.async_write(net::buffer(*queue_.front()), beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      queue_.clear();
      detach();
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) write_next();
  }

  void detach() {
    std::lock_guard lock(hub_.mutex);
    hub_.sessions.erase(shared_from_this());
  }

  websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, Hub& hub, const std::optional<std::filesystem::path>& console_dir)
      : stream_(std::move(socket)), hub_(hub), console_dir_(console_dir) {}

  void run() { read_next(); }

 private:
  void read_next() {
    request_ = {};
    http::async_read(stream_, buffer_, request_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;
    if (websocket::is_upgrade(request_)) {
      if (request_.target() == "/ws") {
        std::make_shared<WsSession>(stream_.release_socket(), hub_)->run(std::move(request_));
      } else {
        respond(http::status::not_found, "text/plain", "websocket endpoint is /ws\n");
      }
      return;
    }
    if (request_.method() != http::verb::get && request_.method() != http::verb::head) {
      respond(http::status::method_not_allowed, "text/plain", "only GET is supported\n");
      return;
    }
    serve_static(std::string(request_.target()));
  }

  void serve_static(std::string target) {
    if (auto q = target.find('?'); q != std::string::npos) target.resize(q);
    if (target.empty() || target == "/") target = "/index.html";
    if (!console_dir_) {
      if (target == "/index.html") {
        respond(http::status::ok, "text/html", std::string(kPlaceholderPage));
      } else {
        respond(http::status::not_found, "text/plain", "not found\n");
      }
      return;
    }
    if (target.find("..") != std::string::npos) {
      respond(http::status::bad_request, "text/plain", "bad path\n");
      return;
    }
    const std::filesystem::path file = *console_dir_ / target.substr(1);
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      respond(http::status::not_found, "text/plain", "not found\n");
      return;
    }
    std::ostringstream body;
    body << in.rdbuf();
    respond(http::status::ok, mime_type(file), body.str());
  }

  void respond(http::status status, std::string_view type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, request_.version());
    res->set(http::field::server, "wayfarer");
    res->set(http::field::content_type, std::string(type));
    res->keep_alive(request_.keep_alive());
    res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!res->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->read_next();
    });
  }

  beast::tcp_stream stream_;
  Hub& hub_;
  const std::optional<std::filesystem::path>& console_dir_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
};

}  // namespace

struct TeleopServer::Impl {
  Impl(train::Checkpoint ckpt, ServerOptions opts) : checkpoint(std::move(ckpt)), options(std::move(opts)) {}

  void accept_next() {
    acceptor->async_accept(net::make_strand(io), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpSession>(std::move(socket), hub, options.console_dir)->run();
      accept_next();
    });
  }

  void simulate() {
    TeleopSession& session = *this->session;
    const double dt = checkpoint.config.episode.dynamics.dt;
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(dt / options.time_scale));
    auto next = std::chrono::steady_clock::now();
    while (!stopping.load()) {
      std::vector<Command> inbound;
      {
        std::lock_guard lock(hub.inbox_mutex);
        inbound.swap(hub.inbox);
      }
      for (auto& cmd : inbound) session.submit(std::move(cmd));
      if (auto message = session.tick()) {
        auto line = std::make_shared<const std::string>(to_json_line(*message));
        std::lock_guard lock(hub.mutex);
        for (const auto& s : hub.sessions) s->send(line);
      }
      next += period;
      std::unique_lock lock(stop_mutex);
      stop_cv.wait_until(lock, next, [this] { return stopping.load(); });
    }
  }

  train::Checkpoint checkpoint;
  ServerOptions options;
  std::optional<TeleopSession> session;  // touched only by the simulation thread once started
  net::io_context io{1};
  std::optional<tcp::acceptor> acceptor;
  Hub hub;
  std::thread io_thread;
  std::thread sim_thread;
  std::atomic<bool> stopping{false};
  std::mutex stop_mutex;
  std::condition_variable stop_cv;
  bool started = false;
};

TeleopServer::TeleopServer(train::Checkpoint checkpoint, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(checkpoint), std::move(options))) {
  if (!(impl_->options.time_scale > 0)) fail(ErrorKind::config, "time scale must be > 0");
  if (impl_->options.command_delay_ms < 0) fail(ErrorKind::config, "command delay must be >= 0");
  SessionOptions so;
  so.delay_s = impl_->options.command_delay_ms / 1000.0;
  so.telemetry_every = impl_->options.telemetry_every;
  so.strict_clock = impl_->options.strict_clock;
  so.seed = impl_->options.seed;
  impl_->session.emplace(impl_->checkpoint, so);
}

TeleopServer::~TeleopServer() { stop(); }

void TeleopServer::start() {
  if (impl_->started) fail(ErrorKind::state, "server already started");
  beast::error_code ec;
  const auto address = net::ip::make_address(impl_->options.address, ec);
  if (ec) fail(ErrorKind::io, "invalid address '" + impl_->options.address + "': " + ec.message());
  const tcp::endpoint endpoint(address, impl_->options.port);
  tcp::acceptor acceptor(net::make_strand(impl_->io));
  acceptor.open(endpoint.protocol(), ec);
  if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acceptor.bind(endpoint, ec);
  if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    fail(ErrorKind::io, "cannot bind " + impl_->options.address + ":" + std::to_string(impl_->options.port) + ": " +
                            ec.message());
  }
  impl_->acceptor.emplace(std::move(acceptor));
  impl_->started = true;
  impl_->accept_next();
  impl_->io_thread = std::thread([this] { impl_->io.run(); });
  impl_->sim_thread = std::thread([this] { impl_->simulate(); });
}

void TeleopServer::stop() {
  if (!impl_->started) return;
  {
    std::lock_guard lock(impl_->stop_mutex);
    impl_->stopping = true;
  }
  impl_->stop_cv.notify_all();
  if (impl_->sim_thread.joinable()) impl_->sim_thread.join();
  net::post(impl_->io, [this] {
    beast::error_code ec;
    impl_->acceptor->close(ec);
    std::lock_guard lock(impl_->hub.mutex);
    for (const auto& s : impl_->hub.sessions) s->close();
  });
  // Give sessions a moment to close, then stop the loop.
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  impl_->io.stop();
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
  {
    std::lock_guard lock(impl_->hub.mutex);
    impl_->hub.sessions.clear();
  }
  impl_->started = false;
}

void TeleopServer::wait() {
  std::unique_lock lock(impl_->stop_mutex);
  impl_->stop_cv.wait(lock, [this] { return impl_->stopping.load(); });
}

unsigned short TeleopServer::port() const {
  if (!impl_->acceptor) return 0;
  beast::error_code ec;
  const auto ep = impl_->acceptor->local_endpoint(ec);
  return ec ? 0 : ep.port();
}

}  // namespace wayfarer::teleop
