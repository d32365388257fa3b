#include "trafficmon/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "trafficmon/errors.hpp"
#include "trafficmon/ingest.hpp"

namespace trafficmon {

namespace {

// Fixed vehicle-class mix for synthetic detections.
struct ClassWeight {
  ObjectClass cls;
  double weight;
};
constexpr std::array<ClassWeight, 6> kClassMix = {{
    {ObjectClass::Car, 0.70},
    {ObjectClass::Motorcycle, 0.10},
    {ObjectClass::Truck, 0.08},
    {ObjectClass::Bus, 0.06},
    {ObjectClass::Van, 0.05},
    {ObjectClass::Other, 0.01},
}};

ObjectClass draw_class(Rng& rng) {
  double u = rng.next_double();
  for (const ClassWeight& cw : kClassMix) {
    if (u < cw.weight) return cw.cls;
    u -= cw.weight;
  }
  return ObjectClass::Car;
}

void validate_config(const ScenarioConfig& c) {
  if (c.duration_s <= 0 || c.frame_interval_ms <= 0) {
    raise(Errc::config_error, "scenario needs positive duration and frame interval");
  }
  if (c.image_w <= 0 || c.image_h <= 0) raise(Errc::config_error, "bad image dimensions");
  if (c.segments.empty()) raise(Errc::config_error, "scenario has no segments");
  if (c.noise.p_miss < 0 || c.noise.p_miss > 1 || c.noise.p_false < 0 ||
      c.noise.conf_spread < 0 || c.noise.conf_spread > 1 || c.noise.jitter_px < 0) {
    raise(Errc::config_error, "noise probabilities must be in [0,1]");
  }
  for (const SegmentScenario& s : c.segments) {
    if (s.mean_dwell_s <= 0) raise(Errc::config_error, "dwell must be positive");
    if (s.arrival_rate.empty()) raise(Errc::config_error, "segment needs an arrival profile");
    for (const RatePiece& p : s.arrival_rate) {
      if (p.rate_per_min < 0) raise(Errc::config_error, "arrival rates must be >= 0");
    }
    for (std::size_t i = 1; i < s.arrival_rate.size(); ++i) {
      if (s.arrival_rate[i].t_start_s <= s.arrival_rate[i - 1].t_start_s) {
        raise(Errc::config_error, "arrival profile times must increase");
      }
    }
  }
  for (const IncidentSpec& inc : c.incidents) {
    if (!is_anomaly_class(inc.cls)) raise(Errc::config_error, "incident class must be an anomaly");
    if (inc.start_s < 0 || inc.duration_s <= 0 || inc.start_s + inc.duration_s > c.duration_s) {
      raise(Errc::config_error, "incident interval outside scenario duration");
    }
  }
}

}  // namespace

ScenarioConfig ScenarioConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open scenario " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    raise(Errc::config_error, "scenario " + path.string() + " is not a JSON object");
  }

  ScenarioConfig c;
  try {
    c.seed = j.value("seed", 0ull);
    c.duration_s = j.at("duration_s").get<double>();
    c.frame_interval_ms = j.at("frame_interval_ms").get<int>();
    c.image_w = j.value("image_w", 640);
    c.image_h = j.value("image_h", 640);
    c.start_ts_ms = j.value("start_ts_ms", static_cast<std::int64_t>(0));
    for (const auto& sj : j.at("segments")) {
      SegmentScenario s;
      s.segment_id = sj.at("segment_id").get<std::string>();
      s.camera_id = sj.value("camera_id", "cam-" + s.segment_id);
      s.mean_dwell_s = sj.at("mean_dwell_s").get<double>();
      for (const auto& pj : sj.at("arrival_rate")) {
        s.arrival_rate.push_back(
            RatePiece{pj.at("t_start_s").get<double>(), pj.at("rate_per_min").get<double>()});
      }
      c.segments.push_back(std::move(s));
    }
    if (j.contains("incidents")) {
      for (const auto& ij : j["incidents"]) {
        IncidentSpec inc;
        inc.segment_id = ij.at("segment_id").get<std::string>();
        inc.start_s = ij.at("start_s").get<double>();
        inc.duration_s = ij.at("duration_s").get<double>();
        const auto cls = class_from_name(ij.at("class").get<std::string>());
        if (!cls) raise(Errc::config_error, "unknown incident class");
        inc.cls = *cls;
        c.incidents.push_back(std::move(inc));
      }
    }
    if (j.contains("noise")) {
      const auto& nj = j["noise"];
      c.noise.p_miss = nj.value("p_miss", 0.0);
      c.noise.p_false = nj.value("p_false", 0.0);
      c.noise.jitter_px = nj.value("jitter_px", 0);
      c.noise.conf_spread = nj.value("conf_spread", 0.0);
    }
  } catch (const nlohmann::json::exception& ex) {
    raise(Errc::config_error, "scenario " + path.string() + ": " + ex.what());
  }
  validate_config(c);
  return c;
}

int scenario_ticks(const ScenarioConfig& config) {
  // Ticks at t = k * interval with t < duration.
  return static_cast<int>(
      std::ceil(config.duration_s * 1000.0 / static_cast<double>(config.frame_interval_ms)));
}

std::vector<int> gen_arrivals(const ScenarioConfig& config, const SegmentScenario& segment,
                              Rng& rng) {
  const double duration = config.duration_s;
  std::vector<double> arrivals;
  std::vector<double> departures;

  // Stationary warm start for the opening rate.
  const double lambda0 = segment.arrival_rate.front().rate_per_min / 60.0;
  const int initial = rng.poisson(lambda0 * segment.mean_dwell_s);
  for (int i = 0; i < initial; ++i) {
    arrivals.push_back(0.0);
    departures.push_back(rng.exponential(segment.mean_dwell_s));  // residual dwell
  }

  // Piecewise-homogeneous Poisson arrivals; restarting the exponential clock
  // at each piece boundary is exact for this process.
  for (std::size_t p = 0; p < segment.arrival_rate.size(); ++p) {
    const double rate = segment.arrival_rate[p].rate_per_min / 60.0;
    const double t_begin = segment.arrival_rate[p].t_start_s;
    const double t_end =
        p + 1 < segment.arrival_rate.size() ? segment.arrival_rate[p + 1].t_start_s : duration;
    if (rate <= 0) continue;
    double t = t_begin;
    for (;;) {
      t += rng.exponential(1.0 / rate);
      if (t >= t_end) break;
      arrivals.push_back(t);
      departures.push_back(t + rng.exponential(segment.mean_dwell_s));
    }
  }

  std::sort(arrivals.begin(), arrivals.end());
  std::sort(departures.begin(), departures.end());

  const int ticks = scenario_ticks(config);
  std::vector<int> counts(ticks, 0);
  for (int k = 0; k < ticks; ++k) {
    const double t = static_cast<double>(k) * config.frame_interval_ms / 1000.0;
    const auto arrived = std::upper_bound(arrivals.begin(), arrivals.end(), t) - arrivals.begin();
    const auto departed =
        std::upper_bound(departures.begin(), departures.end(), t) - departures.begin();
    counts[k] = static_cast<int>(arrived - departed);
  }
  return counts;
}

DetectionFrame render_detections(int true_count, std::span<const IncidentSpec> active_incidents,
                                 const NoiseModel& noise, int image_w, int image_h,
                                 const std::string& camera_id, std::int64_t ts_ms, Rng& rng,
                                 RenderStats* stats) {
  const int slot = 64;
  const int grid_w = image_w / slot;
  const int grid_h = image_h / slot;
  const int slots = grid_w * grid_h;
  if (true_count > slots) {
    raise(Errc::capacity_exceeded, "segment population " + std::to_string(true_count) +
                                       " exceeds " + std::to_string(slots) + " grid slots");
  }

  DetectionFrame frame;
  frame.camera_id = camera_id;
  frame.timestamp_ms = ts_ms;
  frame.image_w = image_w;
  frame.image_h = image_h;

  const auto place_box = [&](int slot_index) {
    const int margin = 8;
    const int cell_x = (slot_index % grid_w) * slot;
    const int cell_y = (slot_index / grid_w) * slot;
    double x = cell_x + margin;
    double y = cell_y + margin;
    const double w = slot - 2 * margin;
    const double h = slot - 2 * margin;
    if (noise.jitter_px > 0) {
      x += rng.uniform_int(-noise.jitter_px, noise.jitter_px);
      y += rng.uniform_int(-noise.jitter_px, noise.jitter_px);
    }
    x = std::clamp(x, 0.0, static_cast<double>(image_w) - w);
    y = std::clamp(y, 0.0, static_cast<double>(image_h) - h);
    return BoundingBox{x, y, w, h};
  };

  const auto draw_confidence = [&]() {
    return noise.conf_spread > 0 ? rng.uniform(1.0 - noise.conf_spread, 1.0) : 1.0;
  };

  int next_slot = 0;
  for (int i = 0; i < true_count; ++i) {
    // Draws happen even for missed vehicles so the stream stays aligned.
    const bool missed = noise.p_miss > 0 && rng.bernoulli(noise.p_miss);
    const ObjectClass cls = draw_class(rng);
    const BoundingBox box = place_box(next_slot++);
    const double conf = draw_confidence();
    if (missed) {
      if (stats) ++stats->missed;
      continue;
    }
    frame.detections.push_back(Detection{cls, conf, box});
  }

  // Spurious detections take the remaining slots; overflow is dropped.
  const int false_count = noise.p_false > 0 ? rng.poisson(noise.p_false) : 0;
  for (int i = 0; i < false_count && next_slot < slots; ++i) {
    frame.detections.push_back(Detection{draw_class(rng), draw_confidence(), place_box(next_slot++)});
    if (stats) ++stats->false_kept;
  }

  // Incidents render from the far end of the grid so they never collide
  // with vehicle slots.
  int incident_slot = slots - 1;
  for (const IncidentSpec& inc : active_incidents) {
    if (incident_slot < next_slot) break;
    frame.detections.push_back(
        Detection{inc.cls, draw_confidence(), place_box(incident_slot--)});
  }
  return frame;
}

ScenarioOutput run_scenario(const ScenarioConfig& config) {
  validate_config(config);
  const int ticks = scenario_ticks(config);

  ScenarioOutput out;
  out.truth.incidents = config.incidents;
  out.truth.counts.resize(config.segments.size());

  std::vector<Rng> detection_rngs;
  for (std::size_t s = 0; s < config.segments.size(); ++s) {
    const SegmentScenario& seg = config.segments[s];
    Rng arrivals_rng = Rng::stream(config.seed, seg.segment_id, "arrivals");
    out.truth.counts[s] = gen_arrivals(config, seg, arrivals_rng);
    detection_rngs.push_back(Rng::stream(config.seed, seg.segment_id, "detections"));
  }

  std::string frames;
  for (int k = 0; k < ticks; ++k) {
    const double t_s = static_cast<double>(k) * config.frame_interval_ms / 1000.0;
    const std::int64_t ts =
        config.start_ts_ms + static_cast<std::int64_t>(k) * config.frame_interval_ms;
    for (std::size_t s = 0; s < config.segments.size(); ++s) {
      const SegmentScenario& seg = config.segments[s];
      std::vector<IncidentSpec> active;
      for (const IncidentSpec& inc : config.incidents) {
        if (inc.segment_id == seg.segment_id && t_s >= inc.start_s &&
            t_s < inc.start_s + inc.duration_s) {
          active.push_back(inc);
        }
      }
      const DetectionFrame frame =
          render_detections(out.truth.counts[s][k], active, config.noise, config.image_w,
                            config.image_h, seg.camera_id, ts, detection_rngs[s]);
      frames += serialize_frame(frame);
      frames += '\n';
    }
  }
  out.frames_jsonl = std::move(frames);

  std::string truth;
  for (const IncidentSpec& inc : config.incidents) {
    nlohmann::ordered_json j;
    j["type"] = "incident";
    j["segment_id"] = inc.segment_id;
    j["class"] = std::string(class_name(inc.cls));
    j["start_ms"] = config.start_ts_ms + static_cast<std::int64_t>(inc.start_s * 1000.0);
    j["end_ms"] =
        config.start_ts_ms + static_cast<std::int64_t>((inc.start_s + inc.duration_s) * 1000.0);
    truth += j.dump();
    truth += '\n';
  }
  for (int k = 0; k < ticks; ++k) {
    const std::int64_t ts =
        config.start_ts_ms + static_cast<std::int64_t>(k) * config.frame_interval_ms;
    for (std::size_t s = 0; s < config.segments.size(); ++s) {
      nlohmann::ordered_json j;
      j["type"] = "count";
      j["ts"] = ts;
      j["segment_id"] = config.segments[s].segment_id;
      j["count"] = out.truth.counts[s][k];
      truth += j.dump();
      truth += '\n';
    }
  }
  out.truth_jsonl = std::move(truth);
  return out;
}

void write_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir) {
  const ScenarioOutput out = run_scenario(config);
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream f(out_dir / "frames.jsonl", std::ios::binary);
    if (!f) raise(Errc::io_error, "cannot write " + (out_dir / "frames.jsonl").string());
    f << out.frames_jsonl;
  }
  {
    std::ofstream f(out_dir / "truth.jsonl", std::ios::binary);
    if (!f) raise(Errc::io_error, "cannot write " + (out_dir / "truth.jsonl").string());
    f << out.truth_jsonl;
  }
}

GroundTruth load_truth_file(const std::filesystem::path& path, const ScenarioConfig& config) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open truth file " + path.string());

  std::map<std::string, std::size_t> seg_index;
  for (std::size_t s = 0; s < config.segments.size(); ++s) {
    seg_index[config.segments[s].segment_id] = s;
  }

  GroundTruth truth;
  truth.counts.assign(config.segments.size(), {});
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) raise(Errc::malformed_record, "bad truth line");
    const std::string type = j.value("type", "");
    if (type == "incident") {
      IncidentSpec inc;
      inc.segment_id = j.at("segment_id").get<std::string>();
      inc.cls = class_from_name(j.at("class").get<std::string>()).value();
      inc.start_s =
          static_cast<double>(j.at("start_ms").get<std::int64_t>() - config.start_ts_ms) / 1000.0;
      inc.duration_s =
          static_cast<double>(j.at("end_ms").get<std::int64_t>() - config.start_ts_ms) / 1000.0 -
          inc.start_s;
      truth.incidents.push_back(std::move(inc));
    } else if (type == "count") {
      truth.counts[seg_index.at(j.at("segment_id").get<std::string>())].push_back(
          j.at("count").get<int>());
    }
  }
  return truth;
}

}  // namespace trafficmon
