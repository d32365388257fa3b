#pragma once

#include <stdexcept>
#include <string>

namespace trafficmon {

// Stable error identities. The CLI maps these to exit codes and tests
// assert on them instead of matching message text.
enum class Errc {
  malformed_record,
  invalid_value,
  box_out_of_bounds,
  stale_frame,
  unknown_camera,
  empty_window,
  invalid_geometry,
  zero_threshold,
  stale_update,
  no_history,
  no_path,
  unknown_node,
  endpoint_unavailable,
  capacity_exceeded,
  no_ground_truth,
  empty_dataset,
  bad_ratios,
  config_error,
  io_error,
};

const char* errc_name(Errc c);

class TrafficError : public std::runtime_error {
 public:
  TrafficError(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) {
  throw TrafficError(code, msg);
}

}  // namespace trafficmon
