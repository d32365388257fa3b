#include "trafficmon/detection.hpp"

namespace trafficmon {

bool box_shape_valid(const BoundingBox& b) {
  return b.w > 0 && b.h > 0 && b.x >= 0 && b.y >= 0;
}

bool box_fits(const BoundingBox& b, double image_w, double image_h) {
  return box_shape_valid(b) && b.x + b.w <= image_w && b.y + b.h <= image_h;
}

bool is_vehicle_class(ObjectClass c) {
  switch (c) {
    case ObjectClass::Car:
    case ObjectClass::Motorcycle:
    case ObjectClass::Truck:
    case ObjectClass::Bus:
    case ObjectClass::Van:
    case ObjectClass::Other:
      return true;
    default:
      return false;
  }
}

bool is_anomaly_class(ObjectClass c) { return !is_vehicle_class(c); }

std::string_view class_name(ObjectClass c) {
  switch (c) {
    case ObjectClass::Car: return "car";
    case ObjectClass::Motorcycle: return "motorcycle";
    case ObjectClass::Truck: return "truck";
    case ObjectClass::Bus: return "bus";
    case ObjectClass::Van: return "van";
    case ObjectClass::Other: return "other";
    case ObjectClass::Accident: return "accident";
    case ObjectClass::SuddenStop: return "sudden_stop";
    case ObjectClass::Congestion: return "congestion";
  }
  return "other";
}

std::optional<ObjectClass> class_from_name(std::string_view name) {
  for (ObjectClass c : kVehicleClasses) {
    if (class_name(c) == name) return c;
  }
  for (ObjectClass c : kAnomalyClasses) {
    if (class_name(c) == name) return c;
  }
  return std::nullopt;
}

}  // namespace trafficmon
