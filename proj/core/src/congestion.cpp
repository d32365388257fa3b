#include "trafficmon/congestion.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "trafficmon/errors.hpp"

namespace trafficmon {

int capacity_threshold(int lanes, double length_m, double slot_m) {
  if (lanes < 1 || length_m <= 0 || slot_m <= 0) {
    raise(Errc::invalid_geometry, "lanes must be >= 1 and lengths positive");
  }
  const int slots = static_cast<int>(std::floor(length_m / slot_m));
  return std::max(1, lanes * slots);
}

double occupancy_ratio(double smoothed_count, int threshold) {
  if (threshold < 1) raise(Errc::zero_threshold, "segment threshold must be >= 1");
  return smoothed_count / threshold;
}

const char* level_name(CongestionLevel level) {
  switch (level) {
    case CongestionLevel::Free: return "free";
    case CongestionLevel::Moderate: return "moderate";
    case CongestionLevel::Heavy: return "heavy";
    case CongestionLevel::Overcrowded: return "overcrowded";
  }
  return "free";
}

std::optional<CongestionLevel> level_from_name(std::string_view name) {
  for (CongestionLevel l : {CongestionLevel::Free, CongestionLevel::Moderate,
                            CongestionLevel::Heavy, CongestionLevel::Overcrowded}) {
    if (level_name(l) == name) return l;
  }
  return std::nullopt;
}

namespace {

// Lowest ratio of a level's band; Free has no lower edge.
double lower_edge(CongestionLevel level, const LevelBands& bands) {
  switch (level) {
    case CongestionLevel::Moderate: return bands.moderate;
    case CongestionLevel::Heavy: return bands.heavy;
    case CongestionLevel::Overcrowded: return bands.overcrowded;
    default: return -1.0;
  }
}

CongestionLevel lower_level(CongestionLevel level) {
  return static_cast<CongestionLevel>(static_cast<int>(level) - 1);
}

}  // namespace

CongestionLevel band_lookup(double ratio, const LevelBands& bands) {
  if (ratio >= bands.overcrowded) return CongestionLevel::Overcrowded;
  if (ratio >= bands.heavy) return CongestionLevel::Heavy;
  if (ratio >= bands.moderate) return CongestionLevel::Moderate;
  return CongestionLevel::Free;
}

CongestionLevel classify_level(double ratio, CongestionLevel previous, const LevelBands& bands) {
  const CongestionLevel target = band_lookup(ratio, bands);
  if (target >= previous) return target;
  // Falling: step down band by band while the ratio clears the margin.
  CongestionLevel level = previous;
  while (level > CongestionLevel::Free && ratio < lower_edge(level, bands) - bands.hysteresis) {
    level = lower_level(level);
  }
  return level;
}

SegmentState SegmentState::initial(std::string segment_id) {
  SegmentState s;
  s.segment_id = std::move(segment_id);
  return s;
}

std::pair<SegmentState, std::optional<LevelTransition>> step_segment_state(
    const SegmentState& state, double smoothed_count, std::int64_t ts,
    const StreetSegment& segment, const LevelBands& bands) {
  if (ts <= state.last_ts) {
    raise(Errc::stale_update, "segment '" + state.segment_id + "' update is not newer");
  }
  SegmentState next = state;
  next.smoothed_count = smoothed_count;
  next.ratio = occupancy_ratio(smoothed_count, segment.threshold);
  next.level = classify_level(next.ratio, state.level, bands);
  next.overcrowded = next.level == CongestionLevel::Overcrowded;
  next.last_ts = ts;

  std::optional<LevelTransition> transition;
  if (next.level != state.level) {
    next.since_ts = ts;
    transition = LevelTransition{ts, state.segment_id, state.level, next.level, next.ratio};
  }
  return {std::move(next), transition};
}

std::vector<StreetSegment> load_streets_file(const std::filesystem::path& path, double slot_m) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open streets file " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_array()) {
    raise(Errc::config_error, "streets file " + path.string() + " is not a JSON array");
  }

  std::vector<StreetSegment> segments;
  std::set<std::string> seen;
  for (const auto& e : j) {
    StreetSegment s;
    try {
      s.segment_id = e.at("segment_id").get<std::string>();
      s.name = e.at("name").get<std::string>();
      s.lanes = e.at("lanes").get<int>();
      s.length_m = e.at("length_m").get<double>();
      s.free_flow_speed_mps = e.at("free_flow_speed_mps").get<double>();
    } catch (const nlohmann::json::exception& ex) {
      raise(Errc::config_error, "streets file " + path.string() + ": " + ex.what());
    }
    if (s.lanes < 1 || s.length_m <= 0 || s.free_flow_speed_mps <= 0) {
      raise(Errc::config_error, "segment '" + s.segment_id + "' has invalid geometry");
    }
    if (e.contains("threshold")) {
      s.threshold = e["threshold"].get<int>();
      if (s.threshold < 1) {
        raise(Errc::config_error, "segment '" + s.segment_id + "' threshold must be >= 1");
      }
    } else {
      s.threshold = capacity_threshold(s.lanes, s.length_m, slot_m);
    }
    if (!seen.insert(s.segment_id).second) {
      raise(Errc::config_error, "duplicate segment_id '" + s.segment_id + "'");
    }
    segments.push_back(std::move(s));
  }
  return segments;
}

}  // namespace trafficmon
