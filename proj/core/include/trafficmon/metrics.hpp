#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "trafficmon/detection.hpp"

namespace trafficmon {

struct PredBox {
  ObjectClass cls = ObjectClass::Car;
  double confidence = 0;
  BoundingBox box;
};

struct LabeledImage {
  std::string image_id;
  std::vector<LabeledBox> ground_truth;
  std::vector<PredBox> predictions;
};

// Intersection area / union area; 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

// COCO-style greedy matching for one class in one image. `preds` must be
// sorted by confidence descending; each prediction claims the unmatched
// ground truth with the highest IoU >= iou_min (ties to the lower ground
// truth index), else it is a false positive.
std::vector<bool> match_detections(std::span<const PredBox> preds,
                                   std::span<const LabeledBox> gts, double iou_min);

struct PrPoint {
  double recall = 0;
  double precision = 0;
};

// Prefix precision/recall over flags ordered by confidence. Throws
// Errc::no_ground_truth when num_gt == 0 and flags is non-empty.
std::vector<PrPoint> pr_curve(const std::vector<bool>& flags, int num_gt);

// 101-point interpolated AP: mean over the recall grid {0.00,...,1.00} of
// the maximum precision at recall >= grid point.
double average_precision(const std::vector<PrPoint>& points);

inline constexpr std::array<double, 10> kIouThresholds = {0.50, 0.55, 0.60, 0.65, 0.70,
                                                          0.75, 0.80, 0.85, 0.90, 0.95};

// Pooling order across images (and classes, for the operating point):
// confidence descending, then per-image rank ascending, then image index
// ascending, then class. Per-image rank is the prediction's position after
// sorting that image's class predictions by (confidence desc, input order).
// Ranked ties are grouped this way so AP is invariant under dataset
// duplication even when confidences collide.

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double ap50 = 0;
  double ap50_95 = 0;
  int num_gt = 0;
};

struct EvalReport {
  std::map<ObjectClass, ClassMetrics> per_class;  // classes present in ground truth
  // Unweighted means over classes present in ground truth.
  double precision = 0;
  double recall = 0;
  double map50 = 0;
  double map50_95 = 0;
  // Pooled precision/recall at the max-F1 confidence cut, and the cut itself.
  double headline_precision = 0;
  double headline_recall = 0;
  double f1_threshold = 0;
  bool has_operating_point = false;
  std::vector<ObjectClass> classes_without_gt;  // predicted but absent from GT
};

// Full Table-style report. Throws Errc::empty_dataset when there are no
// images or no ground-truth boxes at all.
EvalReport evaluate_dataset(const std::vector<LabeledImage>& images);

// (mAP50, mAP50-95) over the standard 0.50:0.05:0.95 thresholds.
std::pair<double, double> map_range(const std::vector<LabeledImage>& images);

// Pooled precision/recall at the confidence threshold maximizing F1.
std::pair<double, double> headline_pr(const std::vector<LabeledImage>& images,
                                      double iou_min = 0.50);

// Joins ground-truth annotations and prediction records by image_id.
// GT lines:   {image_id, image_w, image_h, labels:[{class, box}]}
// Pred lines: {image_id, detections:[{class, confidence, box}]}
std::vector<LabeledImage> load_labeled_images(const std::filesystem::path& gt_path,
                                              const std::filesystem::path& pred_path);

std::string report_to_json(const EvalReport& report);

// Aligned text table mirroring the published comparison layout: one row per
// model, columns Precision, Recall, mAP50, mAP50-95.
std::string report_table(const std::vector<std::pair<std::string, EvalReport>>& models);

}  // namespace trafficmon
