#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <string>

namespace trafficmon {

// (day-of-week, 15-minute slot). Day 0 is Monday; slots run 0..95.
struct TimeBucket {
  int day_of_week = 0;
  int slot = 0;

  bool operator==(const TimeBucket&) const = default;
  auto operator<=>(const TimeBucket&) const = default;
};

inline constexpr int kSlotSeconds = 900;
inline constexpr int kSlotsPerDay = 96;

TimeBucket bucket_of(std::int64_t ts_ms, int tz_offset_min = 0);
TimeBucket next_bucket(TimeBucket b);
int bucket_index(TimeBucket b);  // day_of_week * 96 + slot

// Per-segment, per-bucket occupancy-ratio history with bounded retention:
// samples older than retention_days relative to the newest sample in the
// same bucket are evicted.
class HistoryStore {
 public:
  explicit HistoryStore(int retention_days = 28, int tz_offset_min = 0);

  void record(const std::string& segment_id, std::int64_t ts_ms, double ratio);

  // Arithmetic mean of the bucket's samples. Throws Errc::no_history when
  // the bucket is empty; callers fall back to the current ratio.
  double baseline(const std::string& segment_id, TimeBucket bucket) const;

  std::size_t bucket_size(const std::string& segment_id, TimeBucket bucket) const;

  // Replays an append-only JSONL file of {segment_id, ts, ratio} records.
  void load_file(const std::filesystem::path& path);

 private:
  struct Sample {
    std::int64_t day = 0;  // days since epoch, for retention
    double ratio = 0;
  };

  int retention_days_;
  int tz_offset_min_;
  std::map<std::string, std::map<int, std::deque<Sample>>> buckets_;
};

// alpha * current + (1 - alpha) * baseline_next.
double predict_ratio(double current, double baseline_next, double alpha);

struct Forecast {
  std::string segment_id;
  int horizon_s = kSlotSeconds;
  double predicted_ratio = 0;
  bool advisory = false;
};

// Blends the current ratio with the next bucket's historical baseline;
// without history the prediction falls back to the current ratio.
Forecast make_forecast(const HistoryStore& store, const std::string& segment_id,
                       double current_ratio, std::int64_t now_ms, double alpha,
                       double advisory_edge = 1.0, int tz_offset_min = 0);

}  // namespace trafficmon
