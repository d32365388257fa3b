#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "trafficmon/detection.hpp"

namespace trafficmon {

// Per-frame vehicle counts. Anomaly classes are never counted.
struct ClassCounts {
  std::map<ObjectClass, int> by_class;  // one entry per vehicle class
  int total = 0;

  int count_of(ObjectClass c) const {
    const auto it = by_class.find(c);
    return it == by_class.end() ? 0 : it->second;
  }
};

// Counts detections with a vehicle class and confidence >= conf_threshold.
ClassCounts count_vehicles(const DetectionFrame& frame, double conf_threshold);

// Sliding window of (timestamp, total) pairs with a fixed capacity.
// Timestamps must be strictly increasing.
class CountWindow {
 public:
  explicit CountWindow(std::size_t capacity);

  void push(std::int64_t ts_ms, int total);  // throws Errc::stale_update on non-increasing ts

  // Median of the stored totals; even length takes the mean of the middle
  // two. Throws Errc::empty_window.
  double smoothed() const;

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::deque<std::pair<std::int64_t, int>> entries_;
};

struct AnomalyEvent {
  std::string segment_id;
  ObjectClass cls = ObjectClass::Accident;
  std::int64_t start_ts = 0;
  double peak_confidence = 0.0;
};

// k-of-n debounce per anomaly class: an event opens at the first frame where
// at least k of the last n frames contained the class at confidence >=
// conf_threshold, and cannot reopen until the condition has been false.
class AnomalyDetector {
 public:
  AnomalyDetector(std::string segment_id, double conf_threshold, int k, int n);

  // Events opened by this frame (at most one per anomaly class).
  std::vector<AnomalyEvent> feed(const DetectionFrame& frame);

  bool active(ObjectClass c) const;

 private:
  struct ClassState {
    std::deque<double> window;  // per-frame peak confidence, 0 when absent
    bool active = false;
  };

  int hits(const ClassState& s) const;

  std::string segment_id_;
  double conf_threshold_;
  int k_;
  int n_;
  std::map<ObjectClass, ClassState> state_;
};

// Batch form over time-ordered frames of one segment.
std::vector<AnomalyEvent> detect_anomaly_events(const std::string& segment_id,
                                                std::span<const DetectionFrame> frames,
                                                double conf_threshold, int k, int n);

}  // namespace trafficmon
