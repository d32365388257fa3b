#include "metrics_oracle.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace testsupport {

using trafficmon::BoundingBox;
using trafficmon::LabeledBox;
using trafficmon::LabeledImage;
using trafficmon::ObjectClass;
using trafficmon::PredBox;

double oracle_iou(const BoundingBox& a, const BoundingBox& b) {
  const double ax2 = a.x + a.w, ay2 = a.y + a.h;
  const double bx2 = b.x + b.w, by2 = b.y + b.h;
  const double ox = std::min(ax2, bx2) - std::max(a.x, b.x);
  const double oy = std::min(ay2, by2) - std::max(a.y, b.y);
  if (ox <= 0 || oy <= 0) return 0;
  const double inter = ox * oy;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

namespace {

struct Record {
  double conf;
  std::size_t rank;
  std::size_t image;
  bool tp;
};

// Greedy matching, spelled out: predictions in confidence order each scan
// every ground truth for the best unclaimed IoU >= iou_min.
std::vector<Record> records_for_class(const std::vector<LabeledImage>& images, ObjectClass cls,
                                      double iou_min) {
  std::vector<Record> records;
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::vector<PredBox> preds;
    for (const PredBox& p : images[i].predictions) {
      if (p.cls == cls) preds.push_back(p);
    }
    std::stable_sort(preds.begin(), preds.end(),
                     [](const PredBox& a, const PredBox& b) { return a.confidence > b.confidence; });

    std::vector<LabeledBox> gts;
    for (const LabeledBox& g : images[i].ground_truth) {
      if (g.cls == cls) gts.push_back(g);
    }

    std::vector<bool> claimed(gts.size(), false);
    for (std::size_t r = 0; r < preds.size(); ++r) {
      double best = 0;
      std::size_t best_g = gts.size();
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (claimed[g]) continue;
        const double v = oracle_iou(preds[r].box, gts[g].box);
        if (v > best) {
          best = v;
          best_g = g;
        }
      }
      bool tp = false;
      if (best_g < gts.size() && best >= iou_min) {
        claimed[best_g] = true;
        tp = true;
      }
      records.push_back(Record{preds[r].confidence, r, i, tp});
    }
  }
  std::sort(records.begin(), records.end(), [](const Record& a, const Record& b) {
    if (a.conf != b.conf) return a.conf > b.conf;
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.image < b.image;
  });
  return records;
}

double oracle_ap(const std::vector<Record>& records, int num_gt) {
  std::vector<double> recalls, precisions;
  int tp = 0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (records[k].tp) ++tp;
    recalls.push_back(static_cast<double>(tp) / num_gt);
    precisions.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
  }
  double sum = 0;
  for (int g = 0; g <= 100; ++g) {
    const double r = g / 100.0;
    double best = 0;
    for (std::size_t k = 0; k < recalls.size(); ++k) {
      if (recalls[k] >= r) best = std::max(best, precisions[k]);
    }
    sum += best;
  }
  return sum / 101.0;
}

}  // namespace

double oracle_map_at(const std::vector<LabeledImage>& images, double iou_min) {
  std::set<ObjectClass> with_gt;
  std::map<ObjectClass, int> gt_counts;
  for (const LabeledImage& img : images) {
    for (const LabeledBox& g : img.ground_truth) {
      with_gt.insert(g.cls);
      ++gt_counts[g.cls];
    }
  }
  double sum = 0;
  for (ObjectClass cls : with_gt) {
    sum += oracle_ap(records_for_class(images, cls, iou_min), gt_counts[cls]);
  }
  return sum / static_cast<double>(with_gt.size());
}

std::pair<double, double> oracle_map_range(const std::vector<LabeledImage>& images) {
  // Literal thresholds; deriving them as 0.50 + 0.05*i would land a ULP off
  // and flip predictions whose IoU sits exactly on an edge.
  const double thresholds[] = {0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
  const double map50 = oracle_map_at(images, 0.50);
  double sum = 0;
  for (double t : thresholds) sum += oracle_map_at(images, t);
  return {map50, sum / 10.0};
}

}  // namespace testsupport
