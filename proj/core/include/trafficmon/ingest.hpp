#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>

#include "trafficmon/detection.hpp"

namespace trafficmon {

// One JSONL record -> frame. Throws Errc::malformed_record for broken JSON,
// missing fields or wrong types; Errc::invalid_value for out-of-range values
// (non-positive box sizes, negative positions, confidence outside [0,1],
// unknown class strings, non-positive image dims).
DetectionFrame parse_frame(std::string_view line);

// Frame -> one JSONL line (no trailing newline). Field order is fixed so
// repeated serialization is byte-identical.
std::string serialize_frame(const DetectionFrame& frame);

// Checks every box against (image_w, image_h). Returns the frame untouched;
// throws Errc::box_out_of_bounds naming the offending detection index.
const DetectionFrame& validate_frame(const DetectionFrame& frame);

// camera_id -> segment_id. Many cameras may map to one segment.
class CameraRegistry {
 public:
  CameraRegistry() = default;
  explicit CameraRegistry(std::unordered_map<std::string, std::string> mapping)
      : map_(std::move(mapping)) {}

  static CameraRegistry load_file(const std::filesystem::path& path);

  void add(const std::string& camera_id, const std::string& segment_id);

  // Throws Errc::unknown_camera.
  const std::string& resolve(const std::string& camera_id) const;

  bool contains(const std::string& camera_id) const { return map_.count(camera_id) > 0; }
  std::size_t size() const { return map_.size(); }
  const std::unordered_map<std::string, std::string>& entries() const { return map_; }

 private:
  std::unordered_map<std::string, std::string> map_;
};

// Per-camera timestamp monotonicity guard. A frame older than the camera's
// last accepted frame is rejected with Errc::stale_frame, never reordered.
// Equal timestamps are allowed (non-decreasing contract).
class FrameSequencer {
 public:
  void accept(const std::string& camera_id, std::int64_t timestamp_ms);

 private:
  std::unordered_map<std::string, std::int64_t> last_ts_;
};

}  // namespace trafficmon
