#include "trafficmon/ingest.hpp"

#include <fstream>

#include <json.hpp>

#include "trafficmon/errors.hpp"

namespace trafficmon {

namespace {

using ordered_json = nlohmann::ordered_json;

double require_number(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    raise(Errc::malformed_record, std::string("missing or non-numeric field '") + key + "'");
  }
  return it->get<double>();
}

BoundingBox parse_box(const nlohmann::json& j) {
  BoundingBox b;
  b.x = require_number(j, "x");
  b.y = require_number(j, "y");
  b.w = require_number(j, "w");
  b.h = require_number(j, "h");
  if (!box_shape_valid(b)) {
    raise(Errc::invalid_value, "box must have positive size and non-negative position");
  }
  return b;
}

Detection parse_detection(const nlohmann::json& j) {
  Detection d;
  const auto cls_it = j.find("class");
  if (cls_it == j.end() || !cls_it->is_string()) {
    raise(Errc::malformed_record, "detection missing 'class'");
  }
  const auto cls = class_from_name(cls_it->get<std::string>());
  if (!cls) {
    raise(Errc::invalid_value, "unknown class '" + cls_it->get<std::string>() + "'");
  }
  d.cls = *cls;
  d.confidence = require_number(j, "confidence");
  if (d.confidence < 0.0 || d.confidence > 1.0) {
    raise(Errc::invalid_value, "confidence outside [0,1]");
  }
  const auto box_it = j.find("box");
  if (box_it == j.end() || !box_it->is_object()) {
    raise(Errc::malformed_record, "detection missing 'box'");
  }
  d.box = parse_box(*box_it);
  return d;
}

}  // namespace

DetectionFrame parse_frame(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    raise(Errc::malformed_record, "not a JSON object");
  }

  DetectionFrame f;
  const auto cam_it = j.find("camera_id");
  if (cam_it == j.end() || !cam_it->is_string()) {
    raise(Errc::malformed_record, "missing 'camera_id'");
  }
  f.camera_id = cam_it->get<std::string>();

  const auto ts_it = j.find("timestamp_ms");
  if (ts_it == j.end() || !ts_it->is_number_integer()) {
    raise(Errc::malformed_record, "missing integer 'timestamp_ms'");
  }
  f.timestamp_ms = ts_it->get<std::int64_t>();

  f.image_w = static_cast<int>(require_number(j, "image_w"));
  f.image_h = static_cast<int>(require_number(j, "image_h"));
  if (f.image_w <= 0 || f.image_h <= 0) {
    raise(Errc::invalid_value, "image dimensions must be positive");
  }

  const auto det_it = j.find("detections");
  if (det_it == j.end() || !det_it->is_array()) {
    raise(Errc::malformed_record, "missing 'detections' array");
  }
  f.detections.reserve(det_it->size());
  for (const auto& d : *det_it) {
    if (!d.is_object()) raise(Errc::malformed_record, "detection is not an object");
    f.detections.push_back(parse_detection(d));
  }
  return f;
}

std::string serialize_frame(const DetectionFrame& frame) {
  ordered_json j;
  j["camera_id"] = frame.camera_id;
  j["timestamp_ms"] = frame.timestamp_ms;
  j["image_w"] = frame.image_w;
  j["image_h"] = frame.image_h;
  ordered_json dets = ordered_json::array();
  for (const auto& d : frame.detections) {
    ordered_json dj;
    dj["class"] = std::string(class_name(d.cls));
    dj["confidence"] = d.confidence;
    dj["box"] = {{"x", d.box.x}, {"y", d.box.y}, {"w", d.box.w}, {"h", d.box.h}};
    dets.push_back(std::move(dj));
  }
  j["detections"] = std::move(dets);
  return j.dump();
}

const DetectionFrame& validate_frame(const DetectionFrame& frame) {
  for (std::size_t i = 0; i < frame.detections.size(); ++i) {
    const BoundingBox& b = frame.detections[i].box;
    if (!box_fits(b, frame.image_w, frame.image_h)) {
      raise(Errc::box_out_of_bounds,
            "detection " + std::to_string(i) + " exceeds image bounds");
    }
  }
  return frame;
}

CameraRegistry CameraRegistry::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open camera registry " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    raise(Errc::config_error, "camera registry " + path.string() + " is not a JSON object");
  }
  std::unordered_map<std::string, std::string> m;
  for (const auto& [camera, segment] : j.items()) {
    if (!segment.is_string()) {
      raise(Errc::config_error, "camera '" + camera + "' must map to a segment id string");
    }
    m.emplace(camera, segment.get<std::string>());
  }
  return CameraRegistry(std::move(m));
}

void CameraRegistry::add(const std::string& camera_id, const std::string& segment_id) {
  map_[camera_id] = segment_id;
}

const std::string& CameraRegistry::resolve(const std::string& camera_id) const {
  const auto it = map_.find(camera_id);
  if (it == map_.end()) raise(Errc::unknown_camera, "camera '" + camera_id + "' not registered");
  return it->second;
}

void FrameSequencer::accept(const std::string& camera_id, std::int64_t timestamp_ms) {
  auto [it, inserted] = last_ts_.try_emplace(camera_id, timestamp_ms);
  if (!inserted) {
    if (timestamp_ms < it->second) {
      raise(Errc::stale_frame, "camera '" + camera_id + "' went back in time");
    }
    it->second = timestamp_ms;
  }
}

}  // namespace trafficmon
