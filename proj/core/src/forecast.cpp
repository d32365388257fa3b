#include "trafficmon/forecast.hpp"

#include <fstream>

#include <json.hpp>

#include "trafficmon/errors.hpp"

namespace trafficmon {

namespace {

// Floor division, correct for timestamps before the epoch.
std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if (a % b != 0 && (a < 0) != (b < 0)) --q;
  return q;
}

std::int64_t local_seconds(std::int64_t ts_ms, int tz_offset_min) {
  return floor_div(ts_ms, 1000) + static_cast<std::int64_t>(tz_offset_min) * 60;
}

std::int64_t day_of(std::int64_t ts_ms, int tz_offset_min) {
  return floor_div(local_seconds(ts_ms, tz_offset_min), 86400);
}

}  // namespace

TimeBucket bucket_of(std::int64_t ts_ms, int tz_offset_min) {
  const std::int64_t sec = local_seconds(ts_ms, tz_offset_min);
  const std::int64_t day = floor_div(sec, 86400);
  const std::int64_t sec_of_day = sec - day * 86400;
  TimeBucket b;
  // 1970-01-01 was a Thursday; day 0 of the week is Monday.
  b.day_of_week = static_cast<int>(((day + 3) % 7 + 7) % 7);
  b.slot = static_cast<int>(sec_of_day / kSlotSeconds);
  return b;
}

TimeBucket next_bucket(TimeBucket b) {
  ++b.slot;
  if (b.slot >= kSlotsPerDay) {
    b.slot = 0;
    b.day_of_week = (b.day_of_week + 1) % 7;
  }
  return b;
}

int bucket_index(TimeBucket b) { return b.day_of_week * kSlotsPerDay + b.slot; }

HistoryStore::HistoryStore(int retention_days, int tz_offset_min)
    : retention_days_(retention_days), tz_offset_min_(tz_offset_min) {
  if (retention_days < 1) raise(Errc::invalid_value, "retention_days must be >= 1");
}

void HistoryStore::record(const std::string& segment_id, std::int64_t ts_ms, double ratio) {
  if (ratio < 0) raise(Errc::invalid_value, "occupancy ratio must be >= 0");
  auto& bucket = buckets_[segment_id][bucket_index(bucket_of(ts_ms, tz_offset_min_))];
  bucket.push_back(Sample{day_of(ts_ms, tz_offset_min_), ratio});
  const std::int64_t newest = bucket.back().day;
  while (!bucket.empty() && bucket.front().day <= newest - retention_days_) {
    bucket.pop_front();
  }
}

double HistoryStore::baseline(const std::string& segment_id, TimeBucket bucket) const {
  const auto seg_it = buckets_.find(segment_id);
  if (seg_it == buckets_.end()) raise(Errc::no_history, "no samples for '" + segment_id + "'");
  const auto it = seg_it->second.find(bucket_index(bucket));
  if (it == seg_it->second.end() || it->second.empty()) {
    raise(Errc::no_history, "empty bucket for '" + segment_id + "'");
  }
  double sum = 0;
  for (const Sample& s : it->second) sum += s.ratio;
  return sum / static_cast<double>(it->second.size());
}

std::size_t HistoryStore::bucket_size(const std::string& segment_id, TimeBucket bucket) const {
  const auto seg_it = buckets_.find(segment_id);
  if (seg_it == buckets_.end()) return 0;
  const auto it = seg_it->second.find(bucket_index(bucket));
  return it == seg_it->second.end() ? 0 : it->second.size();
}

void HistoryStore::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return;  // a missing history file is an empty history
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object() || !j.contains("segment_id") || !j.contains("ts") ||
        !j.contains("ratio")) {
      raise(Errc::malformed_record,
            "history " + path.string() + " line " + std::to_string(lineno));
    }
    record(j["segment_id"].get<std::string>(), j["ts"].get<std::int64_t>(),
           j["ratio"].get<double>());
  }
}

double predict_ratio(double current, double baseline_next, double alpha) {
  if (alpha < 0 || alpha > 1) raise(Errc::invalid_value, "alpha must be in [0,1]");
  if (current < 0 || baseline_next < 0) raise(Errc::invalid_value, "ratios must be >= 0");
  return alpha * current + (1.0 - alpha) * baseline_next;
}

Forecast make_forecast(const HistoryStore& store, const std::string& segment_id,
                       double current_ratio, std::int64_t now_ms, double alpha,
                       double advisory_edge, int tz_offset_min) {
  Forecast f;
  f.segment_id = segment_id;
  f.horizon_s = kSlotSeconds;
  double baseline_next = current_ratio;
  try {
    baseline_next = store.baseline(segment_id, next_bucket(bucket_of(now_ms, tz_offset_min)));
  } catch (const TrafficError& e) {
    if (e.code() != Errc::no_history) throw;
  }
  f.predicted_ratio = predict_ratio(current_ratio, baseline_next, alpha);
  f.advisory = f.predicted_ratio >= advisory_edge;
  return f;
}

}  // namespace trafficmon
