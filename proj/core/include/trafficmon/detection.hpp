#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trafficmon {

// Axis-aligned box in absolute pixels, top-left origin.
// Valid iff w > 0, h > 0, x >= 0, y >= 0 and, against an image,
// x + w <= image_w and y + h <= image_h.
struct BoundingBox {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  bool operator==(const BoundingBox&) const = default;
};

inline double box_area(const BoundingBox& b) { return b.w * b.h; }

bool box_shape_valid(const BoundingBox& b);
bool box_fits(const BoundingBox& b, double image_w, double image_h);

enum class ObjectClass {
  Car,
  Motorcycle,
  Truck,
  Bus,
  Van,
  Other,
  Accident,
  SuddenStop,
  Congestion,
};

inline constexpr std::array<ObjectClass, 6> kVehicleClasses = {
    ObjectClass::Car, ObjectClass::Motorcycle, ObjectClass::Truck,
    ObjectClass::Bus, ObjectClass::Van,        ObjectClass::Other,
};

inline constexpr std::array<ObjectClass, 3> kAnomalyClasses = {
    ObjectClass::Accident, ObjectClass::SuddenStop, ObjectClass::Congestion,
};

bool is_vehicle_class(ObjectClass c);
bool is_anomaly_class(ObjectClass c);

// Wire names: car, motorcycle, truck, bus, van, other, accident,
// sudden_stop, congestion.
std::string_view class_name(ObjectClass c);
std::optional<ObjectClass> class_from_name(std::string_view name);

struct Detection {
  ObjectClass cls = ObjectClass::Car;
  double confidence = 0.0;
  BoundingBox box;

  bool operator==(const Detection&) const = default;
};

// A ground-truth annotation: class plus box, no confidence.
struct LabeledBox {
  ObjectClass cls = ObjectClass::Car;
  BoundingBox box;

  bool operator==(const LabeledBox&) const = default;
};

// One camera's timestamped observation.
struct DetectionFrame {
  std::string camera_id;
  std::int64_t timestamp_ms = 0;
  int image_w = 0;
  int image_h = 0;
  std::vector<Detection> detections;

  bool operator==(const DetectionFrame&) const = default;
};

}  // namespace trafficmon
