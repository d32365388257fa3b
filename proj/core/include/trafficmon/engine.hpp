#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "trafficmon/congestion.hpp"
#include "trafficmon/counting.hpp"
#include "trafficmon/display.hpp"
#include "trafficmon/forecast.hpp"
#include "trafficmon/ingest.hpp"
#include "trafficmon/routing.hpp"

namespace trafficmon {

struct Tunables {
  double conf_threshold = 0.5;
  int window = 5;
  int debounce_k = 3;
  int debounce_n = 5;
  LevelBands bands;
  double alpha = 0.5;
  int refresh_s = 30;
  double advisory_edge = 1.0;
  double slot_m = 7.0;
  int history_sample_period_s = 60;
  int tz_offset_min = 0;
  int max_entries = 3;
};

struct RunConfig {
  std::filesystem::path streets;
  std::filesystem::path graph;
  std::filesystem::path boards;
  std::filesystem::path cameras;
  std::string input;  // file://path replay or tcp://:port listen
  std::filesystem::path history;          // optional; empty disables persistence
  std::filesystem::path transitions_log;  // optional; empty disables the log
  Tunables tunables;

  // Reads the config file and applies TRAFFICMON_* environment overrides
  // for every tunable. Throws Errc::config_error naming the offending
  // file or key.
  static RunConfig load(const std::filesystem::path& path);
};

// Every input line lands in exactly one of these buckets; ok + the error
// counters always reconcile with the number of lines consumed.
struct EngineCounters {
  std::uint64_t lines_in = 0;
  std::uint64_t frames_ok = 0;
  std::uint64_t malformed = 0;
  std::uint64_t invalid_value = 0;
  std::uint64_t out_of_bounds = 0;
  std::uint64_t stale_frames = 0;
  std::uint64_t unknown_camera = 0;
  std::uint64_t stale_segment = 0;
  std::uint64_t publish_failures = 0;  // informational, not a line bucket

  std::uint64_t accounted() const {
    return frames_ok + malformed + invalid_value + out_of_bounds + stale_frames +
           unknown_camera + stale_segment;
  }
};

// Composition root: ingest -> counting -> congestion -> forecast ->
// routing -> display, clocked entirely by stream timestamps so file
// replays are reproducible byte for byte.
class Engine {
 public:
  explicit Engine(RunConfig config);

  // Processes the configured input to completion. Returns 0 on success.
  int run();

  // Feeds one raw JSONL line; exposed for tests and the TCP source.
  void process_line(const std::string& line);

  // Final heartbeat plus the quiet-state message when nothing was ever
  // published; called by run() at end of stream.
  void finish();

  const EngineCounters& counters() const { return counters_; }
  const std::vector<LevelTransition>& transitions() const { return transitions_; }
  const SegmentState& segment_state(const std::string& segment_id) const;
  const std::vector<StreetSegment>& streets() const { return streets_; }

 private:
  struct SegmentRuntime {
    const StreetSegment* street = nullptr;
    CountWindow window;
    AnomalyDetector anomalies;
    SegmentState state;
    std::int64_t last_history_ts = INT64_MIN;
    std::optional<std::string> primary_edge;  // lowest edge_id serving the segment
  };

  void step_frame(const DetectionFrame& frame, const std::string& segment_id);
  void record_history(SegmentRuntime& rt, std::int64_t ts);
  void publish_boards(std::int64_t ts);
  void log_transition(const LevelTransition& t);
  std::vector<DisplaySegment> build_snapshot(std::int64_t ts);

  RunConfig config_;
  std::vector<StreetSegment> streets_;
  RoadGraph graph_;
  std::vector<BoardSpec> boards_;
  CameraRegistry cameras_;
  HistoryStore history_;

  std::map<std::string, SegmentRuntime> segments_;
  FrameSequencer sequencer_;
  std::vector<std::unique_ptr<Publisher>> publishers_;

  EngineCounters counters_;
  std::vector<LevelTransition> transitions_;
  std::ofstream transitions_out_;
  std::ofstream history_out_;

  bool dirty_ = true;  // initial state is unpublished
  std::int64_t last_publish_ts_ = INT64_MIN;
  std::int64_t last_ts_ = 0;
  bool published_anything_ = false;
};

}  // namespace trafficmon
