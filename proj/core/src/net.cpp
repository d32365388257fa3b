#include "trafficmon/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "trafficmon/errors.hpp"

namespace trafficmon {

Endpoint Endpoint::parse(const std::string& url) {
  Endpoint ep;
  if (url.rfind("file://", 0) == 0) {
    ep.kind = Kind::file;
    ep.path = url.substr(7);
    if (ep.path.empty()) raise(Errc::config_error, "file endpoint has no path: " + url);
    return ep;
  }
  if (url.rfind("tcp://", 0) == 0) {
    ep.kind = Kind::tcp;
    const std::string rest = url.substr(6);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) raise(Errc::config_error, "tcp endpoint needs a port: " + url);
    ep.host = rest.substr(0, colon);
    if (ep.host.empty()) ep.host = "127.0.0.1";
    try {
      ep.port = std::stoi(rest.substr(colon + 1));
    } catch (...) {
      raise(Errc::config_error, "bad tcp port in " + url);
    }
    if (ep.port <= 0 || ep.port > 65535) raise(Errc::config_error, "bad tcp port in " + url);
    return ep;
  }
  raise(Errc::config_error, "endpoint must be file:// or tcp://, got " + url);
}

namespace {

class Fd {
 public:
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

}  // namespace

void tcp_send_line(const std::string& host, int port, const std::string& line) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port_str = std::to_string(port);
  if (::getaddrinfo(host.c_str(), port_str.c_str(), &hints, &res) != 0 || res == nullptr) {
    raise(Errc::endpoint_unavailable, "cannot resolve " + host);
  }

  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    raise(Errc::endpoint_unavailable, "cannot connect to " + host + ":" + port_str);
  }

  Fd guard(fd);
  std::string payload = line;
  payload.push_back('\n');
  std::size_t sent = 0;
  while (sent < payload.size()) {
    const ssize_t n = ::send(fd, payload.data() + sent, payload.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) raise(Errc::endpoint_unavailable, "send failed to " + host + ":" + port_str);
    sent += static_cast<std::size_t>(n);
  }
}

std::size_t tcp_serve_lines(int port, const std::function<void(const std::string&)>& on_line) {
  Fd server(::socket(AF_INET, SOCK_STREAM, 0));
  if (server.get() < 0) raise(Errc::endpoint_unavailable, "cannot create listen socket");
  const int one = 1;
  ::setsockopt(server.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(server.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    raise(Errc::endpoint_unavailable, "cannot bind port " + std::to_string(port));
  }
  if (::listen(server.get(), 1) != 0) {
    raise(Errc::endpoint_unavailable, "cannot listen on port " + std::to_string(port));
  }

  Fd conn(::accept(server.get(), nullptr, nullptr));
  if (conn.get() < 0) raise(Errc::endpoint_unavailable, "accept failed");

  std::size_t lines = 0;
  std::string buffer;
  char chunk[4096];
  for (;;) {
    const ssize_t n = ::recv(conn.get(), chunk, sizeof(chunk), 0);
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t pos;
    while ((pos = buffer.find('\n')) != std::string::npos) {
      on_line(buffer.substr(0, pos));
      buffer.erase(0, pos + 1);
      ++lines;
    }
  }
  if (!buffer.empty()) {
    on_line(buffer);
    ++lines;
  }
  return lines;
}

}  // namespace trafficmon
