#include "trafficmon/engine.hpp"

#include <cstdlib>
#include <iostream>

#include <json.hpp>

#include "trafficmon/errors.hpp"
#include "trafficmon/net.hpp"

namespace trafficmon {

namespace {

void override_double(double& value, const char* name) {
  if (const char* s = std::getenv(name)) {
    try {
      value = std::stod(s);
    } catch (...) {
      raise(Errc::config_error, std::string("bad value in env ") + name);
    }
  }
}

void override_int(int& value, const char* name) {
  if (const char* s = std::getenv(name)) {
    try {
      value = std::stoi(s);
    } catch (...) {
      raise(Errc::config_error, std::string("bad value in env ") + name);
    }
  }
}

void apply_env_overrides(Tunables& t) {
  override_double(t.conf_threshold, "TRAFFICMON_CONF_THRESHOLD");
  override_int(t.window, "TRAFFICMON_WINDOW");
  override_int(t.debounce_k, "TRAFFICMON_DEBOUNCE_K");
  override_int(t.debounce_n, "TRAFFICMON_DEBOUNCE_N");
  override_double(t.bands.moderate, "TRAFFICMON_BAND_MODERATE");
  override_double(t.bands.heavy, "TRAFFICMON_BAND_HEAVY");
  override_double(t.bands.overcrowded, "TRAFFICMON_BAND_OVERCROWDED");
  override_double(t.bands.hysteresis, "TRAFFICMON_HYSTERESIS");
  override_double(t.alpha, "TRAFFICMON_ALPHA");
  override_int(t.refresh_s, "TRAFFICMON_REFRESH_S");
  override_double(t.advisory_edge, "TRAFFICMON_ADVISORY_EDGE");
  override_double(t.slot_m, "TRAFFICMON_SLOT_M");
  override_int(t.history_sample_period_s, "TRAFFICMON_HISTORY_SAMPLE_PERIOD_S");
  override_int(t.tz_offset_min, "TRAFFICMON_TZ_OFFSET_MIN");
  override_int(t.max_entries, "TRAFFICMON_MAX_ENTRIES");
}

void validate_tunables(const Tunables& t) {
  if (t.conf_threshold < 0 || t.conf_threshold > 1) {
    raise(Errc::config_error, "conf_threshold must be in [0,1]");
  }
  if (t.window < 1) raise(Errc::config_error, "window must be >= 1");
  if (t.debounce_k < 1 || t.debounce_k > t.debounce_n) {
    raise(Errc::config_error, "debounce requires 1 <= k <= n");
  }
  if (!(t.bands.moderate < t.bands.heavy && t.bands.heavy < t.bands.overcrowded)) {
    raise(Errc::config_error, "band edges must increase");
  }
  if (t.bands.hysteresis < 0) raise(Errc::config_error, "hysteresis must be >= 0");
  if (t.alpha < 0 || t.alpha > 1) raise(Errc::config_error, "alpha must be in [0,1]");
  if (t.refresh_s < 1) raise(Errc::config_error, "refresh_s must be >= 1");
  if (t.slot_m <= 0) raise(Errc::config_error, "slot_m must be positive");
  if (t.history_sample_period_s < 1) {
    raise(Errc::config_error, "history_sample_period_s must be >= 1");
  }
  if (t.max_entries < 1) raise(Errc::config_error, "max_entries must be >= 1");
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::config_error, "cannot open config file " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    raise(Errc::config_error, "config file " + path.string() + " is not a JSON object");
  }

  RunConfig c;
  try {
    c.streets = j.at("streets").get<std::string>();
    c.graph = j.at("graph").get<std::string>();
    c.boards = j.at("boards").get<std::string>();
    c.cameras = j.at("cameras").get<std::string>();
    c.input = j.at("input").get<std::string>();
    c.history = j.value("history", std::string{});
    c.transitions_log = j.value("transitions_log", std::string{});
    if (j.contains("tunables")) {
      const auto& tj = j["tunables"];
      Tunables& t = c.tunables;
      t.conf_threshold = tj.value("conf_threshold", t.conf_threshold);
      t.window = tj.value("window", t.window);
      t.debounce_k = tj.value("debounce_k", t.debounce_k);
      t.debounce_n = tj.value("debounce_n", t.debounce_n);
      if (tj.contains("bands")) {
        t.bands.moderate = tj["bands"].value("moderate", t.bands.moderate);
        t.bands.heavy = tj["bands"].value("heavy", t.bands.heavy);
        t.bands.overcrowded = tj["bands"].value("overcrowded", t.bands.overcrowded);
      }
      t.bands.hysteresis = tj.value("hysteresis", t.bands.hysteresis);
      t.alpha = tj.value("alpha", t.alpha);
      t.refresh_s = tj.value("refresh_s", t.refresh_s);
      t.advisory_edge = tj.value("advisory_edge", t.advisory_edge);
      t.slot_m = tj.value("slot_m", t.slot_m);
      t.history_sample_period_s =
          tj.value("history_sample_period_s", t.history_sample_period_s);
      t.tz_offset_min = tj.value("tz_offset_min", t.tz_offset_min);
      t.max_entries = tj.value("max_entries", t.max_entries);
    }
  } catch (const nlohmann::json::exception& ex) {
    raise(Errc::config_error, "config file " + path.string() + ": " + ex.what());
  }
  apply_env_overrides(c.tunables);
  validate_tunables(c.tunables);

  if (c.input.rfind("file://", 0) != 0 && c.input.rfind("tcp://", 0) != 0) {
    raise(Errc::config_error, "input must be file:// or tcp://, got " + c.input);
  }
  return c;
}

Engine::Engine(RunConfig config)
    : config_(std::move(config)),
      streets_(load_streets_file(config_.streets, config_.tunables.slot_m)),
      graph_(RoadGraph::load_file(config_.graph)),
      boards_(load_boards_file(config_.boards)),
      cameras_(CameraRegistry::load_file(config_.cameras)),
      history_(28, config_.tunables.tz_offset_min) {
  std::map<std::string, const StreetSegment*> by_id;
  for (const StreetSegment& s : streets_) by_id[s.segment_id] = &s;

  for (const StreetSegment& s : streets_) {
    SegmentRuntime rt{
        by_id[s.segment_id],
        CountWindow(static_cast<std::size_t>(config_.tunables.window)),
        AnomalyDetector(s.segment_id, config_.tunables.conf_threshold,
                        config_.tunables.debounce_k, config_.tunables.debounce_n),
        SegmentState::initial(s.segment_id),
        INT64_MIN,
        std::nullopt,
    };
    segments_.emplace(s.segment_id, std::move(rt));
  }

  // Lowest edge_id serving a segment is its display edge.
  for (const RoadEdge& e : graph_.edges()) {
    if (!e.segment_id) continue;
    const auto it = segments_.find(*e.segment_id);
    if (it == segments_.end()) {
      raise(Errc::config_error,
            "graph edge '" + e.edge_id + "' references unknown segment '" + *e.segment_id + "'");
    }
    auto& primary = it->second.primary_edge;
    if (!primary || e.edge_id < *primary) primary = e.edge_id;
  }

  for (const BoardSpec& b : boards_) {
    if (!graph_.has_node(b.location)) {
      raise(Errc::config_error, "board '" + b.board_id + "' location '" + b.location +
                                    "' is not a graph node");
    }
    publishers_.push_back(std::make_unique<Publisher>(b));
  }

  for (const auto& [camera, segment] : cameras_.entries()) {
    if (!segments_.count(segment)) {
      raise(Errc::config_error,
            "camera '" + camera + "' maps to unmonitored segment '" + segment + "'");
    }
  }

  if (!config_.history.empty()) {
    history_.load_file(config_.history);
    history_out_.open(config_.history, std::ios::app);
    if (!history_out_) {
      raise(Errc::config_error, "cannot append to history file " + config_.history.string());
    }
  }
  if (!config_.transitions_log.empty()) {
    transitions_out_.open(config_.transitions_log, std::ios::trunc);
    if (!transitions_out_) {
      raise(Errc::config_error,
            "cannot write transitions log " + config_.transitions_log.string());
    }
  }
}

const SegmentState& Engine::segment_state(const std::string& segment_id) const {
  const auto it = segments_.find(segment_id);
  if (it == segments_.end()) raise(Errc::config_error, "unknown segment '" + segment_id + "'");
  return it->second.state;
}

void Engine::process_line(const std::string& line) {
  ++counters_.lines_in;
  DetectionFrame frame;
  std::string segment_id;
  try {
    frame = parse_frame(line);
    validate_frame(frame);
    sequencer_.accept(frame.camera_id, frame.timestamp_ms);
    segment_id = cameras_.resolve(frame.camera_id);
  } catch (const TrafficError& e) {
    switch (e.code()) {
      case Errc::malformed_record: ++counters_.malformed; return;
      case Errc::invalid_value: ++counters_.invalid_value; return;
      case Errc::box_out_of_bounds: ++counters_.out_of_bounds; return;
      case Errc::stale_frame: ++counters_.stale_frames; return;
      case Errc::unknown_camera: ++counters_.unknown_camera; return;
      default: throw;
    }
  }

  SegmentRuntime& rt = segments_.at(segment_id);
  if (frame.timestamp_ms <= rt.state.last_ts) {
    // Second camera reporting the same instant; the segment already stepped.
    ++counters_.stale_segment;
    return;
  }

  step_frame(frame, segment_id);
  ++counters_.frames_ok;
  last_ts_ = frame.timestamp_ms;

  const std::int64_t refresh_ms = static_cast<std::int64_t>(config_.tunables.refresh_s) * 1000;
  if (dirty_ || last_publish_ts_ == INT64_MIN ||
      frame.timestamp_ms - last_publish_ts_ >= refresh_ms) {
    publish_boards(frame.timestamp_ms);
  }
}

void Engine::step_frame(const DetectionFrame& frame, const std::string& segment_id) {
  SegmentRuntime& rt = segments_.at(segment_id);

  const ClassCounts counts = count_vehicles(frame, config_.tunables.conf_threshold);
  rt.window.push(frame.timestamp_ms, counts.total);

  auto [next, transition] = step_segment_state(rt.state, rt.window.smoothed(),
                                               frame.timestamp_ms, *rt.street,
                                               config_.tunables.bands);
  rt.state = std::move(next);
  if (transition) {
    transitions_.push_back(*transition);
    log_transition(*transition);
    dirty_ = true;
  }

  const auto opened = rt.anomalies.feed(frame);
  if (!opened.empty()) dirty_ = true;

  record_history(rt, frame.timestamp_ms);
}

void Engine::record_history(SegmentRuntime& rt, std::int64_t ts) {
  const std::int64_t period_ms =
      static_cast<std::int64_t>(config_.tunables.history_sample_period_s) * 1000;
  if (rt.last_history_ts != INT64_MIN && ts - rt.last_history_ts < period_ms) return;
  rt.last_history_ts = ts;
  history_.record(rt.state.segment_id, ts, rt.state.ratio);
  if (history_out_.is_open()) {
    nlohmann::ordered_json j;
    j["segment_id"] = rt.state.segment_id;
    j["ts"] = ts;
    j["ratio"] = rt.state.ratio;
    history_out_ << j.dump() << '\n';
  }
}

std::vector<DisplaySegment> Engine::build_snapshot(std::int64_t ts) {
  RatioSnapshot ratios;
  for (const auto& [id, rt] : segments_) ratios[id] = rt.state.ratio;

  std::vector<DisplaySegment> snapshot;
  snapshot.reserve(segments_.size());
  for (const auto& [id, rt] : segments_) {
    DisplaySegment ds;
    ds.segment_id = id;
    ds.name = rt.street->name;
    ds.level = rt.state.level;
    ds.ratio = rt.state.ratio;
    for (ObjectClass c : kAnomalyClasses) {
      if (rt.anomalies.active(c)) ds.active_anomalies.push_back(c);
    }
    ds.forecast = make_forecast(history_, id, rt.state.ratio, ts, config_.tunables.alpha,
                                config_.tunables.advisory_edge, config_.tunables.tz_offset_min);
    if (rt.primary_edge) {
      const RoadEdge& edge = graph_.edge(*rt.primary_edge);
      ds.delay_s = estimated_delay(edge, rt.state.ratio);
    }
    snapshot.push_back(std::move(ds));
  }
  return snapshot;
}

void Engine::publish_boards(std::int64_t ts) {
  std::vector<DisplaySegment> snapshot = build_snapshot(ts);
  RatioSnapshot ratios;
  for (const auto& [id, rt] : segments_) ratios[id] = rt.state.ratio;

  ComposeOptions options;
  options.max_entries = config_.tunables.max_entries;
  options.refresh_s = config_.tunables.refresh_s;

  for (std::size_t b = 0; b < publishers_.size(); ++b) {
    const BoardSpec& board = boards_[b];

    // Routes are board-relative; fill them in for qualifying rows only.
    std::vector<DisplaySegment> enriched = snapshot;
    for (DisplaySegment& ds : enriched) {
      const bool qualifies = ds.level == CongestionLevel::Overcrowded ||
                             !ds.active_anomalies.empty() ||
                             (ds.forecast && ds.forecast->advisory);
      if (!qualifies) continue;
      const auto& primary = segments_.at(ds.segment_id).primary_edge;
      if (!primary) continue;
      try {
        ds.alt_route =
            best_route(graph_, board.location, graph_.edge(*primary).to, ratios).nodes;
      } catch (const TrafficError& e) {
        if (e.code() != Errc::no_path) throw;
      }
    }

    const AlertMessage message = compose_message(enriched, board, ts, options);
    try {
      publishers_[b]->publish(message);
      published_anything_ = true;
    } catch (const TrafficError& e) {
      if (e.code() != Errc::endpoint_unavailable) throw;
      ++counters_.publish_failures;  // next refresh retries
    }
  }
  last_publish_ts_ = ts;
  dirty_ = false;
}

void Engine::log_transition(const LevelTransition& t) {
  if (!transitions_out_.is_open()) return;
  nlohmann::ordered_json j;
  j["ts"] = t.ts;
  j["segment_id"] = t.segment_id;
  j["from"] = level_name(t.from);
  j["to"] = level_name(t.to);
  j["ratio"] = t.ratio;
  transitions_out_ << j.dump() << '\n';
}

void Engine::finish() {
  if (!published_anything_) publish_boards(counters_.frames_ok > 0 ? last_ts_ : 0);
  if (transitions_out_.is_open()) transitions_out_.flush();
  if (history_out_.is_open()) history_out_.flush();

  if (counters_.lines_in != counters_.accounted()) {
    raise(Errc::io_error, "line accounting mismatch: " + std::to_string(counters_.lines_in) +
                              " in, " + std::to_string(counters_.accounted()) + " accounted");
  }
}

int Engine::run() {
  const Endpoint source = Endpoint::parse(config_.input);
  if (source.kind == Endpoint::Kind::file) {
    std::ifstream in(source.path);
    if (!in) raise(Errc::config_error, "cannot open input file " + source.path);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) process_line(line);
    }
  } else {
    tcp_serve_lines(source.port, [this](const std::string& line) {
      if (!line.empty()) process_line(line);
    });
  }
  finish();

  nlohmann::ordered_json summary;
  summary["lines_in"] = counters_.lines_in;
  summary["frames_ok"] = counters_.frames_ok;
  summary["malformed"] = counters_.malformed;
  summary["invalid_value"] = counters_.invalid_value;
  summary["out_of_bounds"] = counters_.out_of_bounds;
  summary["stale_frames"] = counters_.stale_frames;
  summary["unknown_camera"] = counters_.unknown_camera;
  summary["stale_segment"] = counters_.stale_segment;
  summary["publish_failures"] = counters_.publish_failures;
  summary["transitions"] = transitions_.size();
  std::cout << summary.dump() << std::endl;
  return 0;
}

}  // namespace trafficmon
