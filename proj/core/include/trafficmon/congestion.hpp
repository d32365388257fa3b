#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace trafficmon {

// A monitored roadway and its capacity threshold (max allowable vehicles).
struct StreetSegment {
  std::string segment_id;
  std::string name;
  int lanes = 1;
  double length_m = 0;
  double free_flow_speed_mps = 0;
  int threshold = 1;
};

// lanes * floor(length_m / slot_m), clamped to >= 1. The default 7 m slot is
// 4.5 m average vehicle length plus 2.5 m jam headway.
// Throws Errc::invalid_geometry for non-positive inputs.
int capacity_threshold(int lanes, double length_m, double slot_m = 7.0);

// smoothed_count / threshold; may exceed 1. Throws Errc::zero_threshold.
double occupancy_ratio(double smoothed_count, int threshold);

enum class CongestionLevel { Free = 0, Moderate = 1, Heavy = 2, Overcrowded = 3 };

const char* level_name(CongestionLevel level);
std::optional<CongestionLevel> level_from_name(std::string_view name);

// Band edges are the lowest ratio of each level; hysteresis is the margin a
// falling ratio must clear below an edge before the level may drop.
struct LevelBands {
  double moderate = 0.5;
  double heavy = 0.8;
  double overcrowded = 1.0;
  double hysteresis = 0.05;
};

// Pure band table, no hysteresis.
CongestionLevel band_lookup(double ratio, const LevelBands& bands = {});

// Upward moves happen as soon as the ratio reaches a band edge; downward
// moves only once the ratio falls below (edge - hysteresis), re-checked per
// band so a deep drop can fall several levels in one step.
CongestionLevel classify_level(double ratio, CongestionLevel previous,
                               const LevelBands& bands = {});

struct LevelTransition {
  std::int64_t ts = 0;
  std::string segment_id;
  CongestionLevel from = CongestionLevel::Free;
  CongestionLevel to = CongestionLevel::Free;
  double ratio = 0;
};

struct SegmentState {
  std::string segment_id;
  double smoothed_count = 0;
  double ratio = 0;
  CongestionLevel level = CongestionLevel::Free;
  bool overcrowded = false;
  std::int64_t since_ts = 0;    // last level change
  std::int64_t last_ts = INT64_MIN;

  static SegmentState initial(std::string segment_id);
};

// Advances one segment's state. Emits a transition record exactly when the
// level changed. Throws Errc::stale_update unless ts > state.last_ts.
std::pair<SegmentState, std::optional<LevelTransition>> step_segment_state(
    const SegmentState& state, double smoothed_count, std::int64_t ts,
    const StreetSegment& segment, const LevelBands& bands = {});

// Streets config: JSON array of {segment_id, name, lanes, length_m,
// free_flow_speed_mps, threshold?}; a missing threshold is computed from the
// geometry.
std::vector<StreetSegment> load_streets_file(const std::filesystem::path& path,
                                             double slot_m = 7.0);

}  // namespace trafficmon
