#include "trafficmon/errors.hpp"

namespace trafficmon {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::malformed_record: return "MalformedRecord";
    case Errc::invalid_value: return "InvalidValue";
    case Errc::box_out_of_bounds: return "BoxOutOfBounds";
    case Errc::stale_frame: return "StaleFrame";
    case Errc::unknown_camera: return "UnknownCamera";
    case Errc::empty_window: return "EmptyWindow";
    case Errc::invalid_geometry: return "InvalidGeometry";
    case Errc::zero_threshold: return "ZeroThreshold";
    case Errc::stale_update: return "StaleUpdate";
    case Errc::no_history: return "NoHistory";
    case Errc::no_path: return "NoPath";
    case Errc::unknown_node: return "UnknownNode";
    case Errc::endpoint_unavailable: return "EndpointUnavailable";
    case Errc::capacity_exceeded: return "CapacityExceeded";
    case Errc::no_ground_truth: return "NoGroundTruth";
    case Errc::empty_dataset: return "EmptyDataset";
    case Errc::bad_ratios: return "BadRatios";
    case Errc::config_error: return "ConfigError";
    case Errc::io_error: return "IoError";
  }
  return "Error";
}

}  // namespace trafficmon
