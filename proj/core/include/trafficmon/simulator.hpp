#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "trafficmon/detection.hpp"
#include "trafficmon/rng.hpp"

namespace trafficmon {

// Piecewise-constant arrival rate: `rate_per_min` applies from t_start_s
// until the next piece (or the scenario end).
struct RatePiece {
  double t_start_s = 0;
  double rate_per_min = 0;
};

struct SegmentScenario {
  std::string segment_id;
  std::string camera_id;  // defaults to "cam-" + segment_id
  std::vector<RatePiece> arrival_rate;
  double mean_dwell_s = 60;
};

struct IncidentSpec {
  std::string segment_id;
  double start_s = 0;
  double duration_s = 0;
  ObjectClass cls = ObjectClass::Accident;
};

struct NoiseModel {
  double p_miss = 0;     // per true vehicle
  double p_false = 0;    // Poisson mean of spurious detections per frame
  int jitter_px = 0;     // max box displacement
  double conf_spread = 0;  // confidences drawn in [1 - spread, 1]
};

struct ScenarioConfig {
  std::uint64_t seed = 0;
  double duration_s = 60;
  int frame_interval_ms = 1000;
  int image_w = 640;
  int image_h = 640;
  std::int64_t start_ts_ms = 0;
  std::vector<SegmentScenario> segments;
  std::vector<IncidentSpec> incidents;
  NoiseModel noise;

  static ScenarioConfig load_file(const std::filesystem::path& path);
};

// M/M/inf occupancy sampled at frame ticks: Poisson arrivals at the
// configured rate, exponential dwell, initial population drawn from the
// stationary distribution of the opening rate. Deterministic per
// (config seed, segment id).
std::vector<int> gen_arrivals(const ScenarioConfig& config, const SegmentScenario& segment,
                              Rng& rng);

// Per-frame noise bookkeeping: emitted vehicle detections =
// true_count - missed + false_kept.
struct RenderStats {
  int missed = 0;
  int false_kept = 0;
};

// One synthetic frame: each true vehicle is detected with probability
// 1 - p_miss into a jittered, clamped grid slot; Poisson(p_false) spurious
// boxes go into the remaining slots; each active incident adds one
// anomaly-class detection. Throws Errc::capacity_exceeded when the grid
// cannot hold the population.
DetectionFrame render_detections(int true_count, std::span<const IncidentSpec> active_incidents,
                                 const NoiseModel& noise, int image_w, int image_h,
                                 const std::string& camera_id, std::int64_t ts_ms, Rng& rng,
                                 RenderStats* stats = nullptr);

struct GroundTruth {
  // counts[segment index in config][tick]
  std::vector<std::vector<int>> counts;
  std::vector<IncidentSpec> incidents;
};

struct ScenarioOutput {
  std::string frames_jsonl;  // full stream, one frame per line
  std::string truth_jsonl;
  GroundTruth truth;
};

int scenario_ticks(const ScenarioConfig& config);

// Generates the whole scenario in memory. Output bytes are a pure function
// of the config.
ScenarioOutput run_scenario(const ScenarioConfig& config);

// Writes <out_dir>/frames.jsonl and <out_dir>/truth.jsonl.
void write_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir);

GroundTruth load_truth_file(const std::filesystem::path& path, const ScenarioConfig& config);

}  // namespace trafficmon
