#pragma once

#include <atomic>
#include <functional>
#include <string>
#include <thread>

#include <httplib.h>

namespace testsupport {

/// Local HTTP server on an ephemeral port, torn down with the object.
class LocalServer {
 public:
  LocalServer() = default;
  ~LocalServer() { stop(); }

  httplib::Server& server() { return server_; }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

/// A URL nothing listens on: bind a port, then release it.
inline std::string dead_url() {
  httplib::Server s;
  const int port = s.bind_to_any_port("127.0.0.1");
  return "http://127.0.0.1:" + std::to_string(port);
}

}  // namespace testsupport
