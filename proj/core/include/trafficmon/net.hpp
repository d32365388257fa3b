#pragma once

#include <functional>
#include <string>

namespace trafficmon {

// "tcp://host:port" / "file://path". Anything else is a config error.
struct Endpoint {
  enum class Kind { file, tcp } kind = Kind::file;
  std::string path;  // file path
  std::string host;  // tcp
  int port = 0;

  static Endpoint parse(const std::string& url);
};

// Opens a connection, writes `line` plus '\n', closes. Throws
// Errc::endpoint_unavailable on any failure.
void tcp_send_line(const std::string& host, int port, const std::string& line);

// Accepts a single connection on `port` and feeds each received line to the
// callback until the peer closes. Returns the number of lines handled.
std::size_t tcp_serve_lines(int port, const std::function<void(const std::string&)>& on_line);

}  // namespace trafficmon
