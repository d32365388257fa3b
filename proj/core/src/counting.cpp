#include "trafficmon/counting.hpp"

#include <algorithm>

#include "trafficmon/errors.hpp"

namespace trafficmon {

ClassCounts count_vehicles(const DetectionFrame& frame, double conf_threshold) {
  ClassCounts counts;
  for (ObjectClass c : kVehicleClasses) counts.by_class[c] = 0;
  for (const Detection& d : frame.detections) {
    if (!is_vehicle_class(d.cls)) continue;
    if (d.confidence < conf_threshold) continue;
    ++counts.by_class[d.cls];
    ++counts.total;
  }
  return counts;
}

CountWindow::CountWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) raise(Errc::invalid_value, "window capacity must be >= 1");
}

void CountWindow::push(std::int64_t ts_ms, int total) {
  if (!entries_.empty() && ts_ms <= entries_.back().first) {
    raise(Errc::stale_update, "window timestamps must be strictly increasing");
  }
  entries_.emplace_back(ts_ms, total);
  if (entries_.size() > capacity_) entries_.pop_front();
}

double CountWindow::smoothed() const {
  if (entries_.empty()) raise(Errc::empty_window, "no counts recorded");
  std::vector<int> totals;
  totals.reserve(entries_.size());
  for (const auto& [ts, total] : entries_) totals.push_back(total);
  std::sort(totals.begin(), totals.end());
  const std::size_t mid = totals.size() / 2;
  if (totals.size() % 2 == 1) return totals[mid];
  return (totals[mid - 1] + totals[mid]) / 2.0;
}

AnomalyDetector::AnomalyDetector(std::string segment_id, double conf_threshold, int k, int n)
    : segment_id_(std::move(segment_id)), conf_threshold_(conf_threshold), k_(k), n_(n) {
  if (k < 1 || k > n) raise(Errc::invalid_value, "debounce requires 1 <= k <= n");
  for (ObjectClass c : kAnomalyClasses) state_[c] = ClassState{};
}

int AnomalyDetector::hits(const ClassState& s) const {
  int count = 0;
  for (double conf : s.window) {
    if (conf >= conf_threshold_ && conf > 0.0) ++count;
  }
  return count;
}

std::vector<AnomalyEvent> AnomalyDetector::feed(const DetectionFrame& frame) {
  // Per-frame peak confidence per anomaly class; absent classes score 0.
  std::map<ObjectClass, double> frame_conf;
  for (ObjectClass c : kAnomalyClasses) frame_conf[c] = 0.0;
  for (const Detection& d : frame.detections) {
    if (!is_anomaly_class(d.cls)) continue;
    frame_conf[d.cls] = std::max(frame_conf[d.cls], d.confidence);
  }

  std::vector<AnomalyEvent> opened;
  for (ObjectClass c : kAnomalyClasses) {
    ClassState& s = state_[c];
    s.window.push_back(frame_conf[c]);
    if (s.window.size() > static_cast<std::size_t>(n_)) s.window.pop_front();

    const bool satisfied = hits(s) >= k_;
    if (satisfied && !s.active) {
      AnomalyEvent ev;
      ev.segment_id = segment_id_;
      ev.cls = c;
      ev.start_ts = frame.timestamp_ms;
      ev.peak_confidence = *std::max_element(s.window.begin(), s.window.end());
      opened.push_back(std::move(ev));
      s.active = true;
    } else if (!satisfied) {
      s.active = false;
    }
  }
  return opened;
}

bool AnomalyDetector::active(ObjectClass c) const {
  const auto it = state_.find(c);
  return it != state_.end() && it->second.active;
}

std::vector<AnomalyEvent> detect_anomaly_events(const std::string& segment_id,
                                                std::span<const DetectionFrame> frames,
                                                double conf_threshold, int k, int n) {
  AnomalyDetector detector(segment_id, conf_threshold, k, n);
  std::vector<AnomalyEvent> events;
  for (const DetectionFrame& f : frames) {
    auto opened = detector.feed(f);
    events.insert(events.end(), opened.begin(), opened.end());
  }
  return events;
}

}  // namespace trafficmon
