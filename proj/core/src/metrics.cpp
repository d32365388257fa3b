#include "trafficmon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "trafficmon/dataset_prep.hpp"
#include "trafficmon/errors.hpp"

namespace trafficmon {

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(a.x, b.x);
  const double iy = std::max(a.y, b.y);
  const double ix2 = std::min(a.x + a.w, b.x + b.w);
  const double iy2 = std::min(a.y + a.h, b.y + b.h);
  const double iw = ix2 - ix;
  const double ih = iy2 - iy;
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = box_area(a) + box_area(b) - inter;
  return uni <= 0 ? 0.0 : inter / uni;
}

std::vector<bool> match_detections(std::span<const PredBox> preds,
                                   std::span<const LabeledBox> gts, double iou_min) {
  std::vector<bool> flags(preds.size(), false);
  std::vector<bool> claimed(gts.size(), false);
  for (std::size_t p = 0; p < preds.size(); ++p) {
    double best = 0.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (claimed[g]) continue;
      const double overlap = iou(preds[p].box, gts[g].box);
      if (overlap > best) {  // strict: ties keep the lower index
        best = overlap;
        best_gt = g;
      }
    }
    if (best_gt < gts.size() && best >= iou_min) {
      claimed[best_gt] = true;
      flags[p] = true;
    }
  }
  return flags;
}

std::vector<PrPoint> pr_curve(const std::vector<bool>& flags, int num_gt) {
  if (num_gt < 0) raise(Errc::invalid_value, "num_gt must be >= 0");
  if (num_gt == 0) {
    if (flags.empty()) return {};
    raise(Errc::no_ground_truth, "predictions for a class with no ground truth");
  }
  std::vector<PrPoint> points;
  points.reserve(flags.size());
  int tp = 0;
  for (std::size_t k = 0; k < flags.size(); ++k) {
    if (flags[k]) ++tp;
    points.push_back(PrPoint{static_cast<double>(tp) / num_gt,
                             static_cast<double>(tp) / static_cast<double>(k + 1)});
  }
  return points;
}

double average_precision(const std::vector<PrPoint>& points) {
  if (points.empty()) return 0.0;
  // Recall is non-decreasing along the curve; build the right-to-left
  // precision envelope and read it at each grid point.
  const std::size_t n = points.size();
  std::vector<double> envelope(n);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    running = std::max(running, points[i].precision);
    envelope[i] = running;
  }
  double sum = 0.0;
  for (int g = 0; g <= 100; ++g) {
    const double r = g / 100.0;
    const auto it = std::lower_bound(points.begin(), points.end(), r,
                                     [](const PrPoint& p, double v) { return p.recall < v; });
    if (it != points.end()) sum += envelope[static_cast<std::size_t>(it - points.begin())];
  }
  return sum / 101.0;
}

namespace {

// One prediction's identity in the pooled ordering (see metrics.hpp).
struct PooledPred {
  double confidence = 0;
  std::size_t rank = 0;   // position in its image's per-class sorted order
  std::size_t image = 0;  // image index in the dataset
  ObjectClass cls = ObjectClass::Car;
  bool flag = false;
};

bool pooled_before(const PooledPred& a, const PooledPred& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.rank != b.rank) return a.rank < b.rank;
  if (a.image != b.image) return a.image < b.image;
  return a.cls < b.cls;
}

struct ClassData {
  int num_gt = 0;
  // Per image: predictions sorted by (confidence desc, input order).
  std::vector<std::pair<std::size_t, std::vector<PredBox>>> image_preds;
  std::vector<std::vector<LabeledBox>> image_gts;  // parallel to image_preds
};

std::map<ObjectClass, ClassData> collect_classes(const std::vector<LabeledImage>& images) {
  std::map<ObjectClass, ClassData> data;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const LabeledImage& img = images[i];
    std::map<ObjectClass, std::vector<LabeledBox>> gts;
    for (const LabeledBox& gt : img.ground_truth) gts[gt.cls].push_back(gt);
    std::map<ObjectClass, std::vector<PredBox>> preds;
    for (const PredBox& p : img.predictions) preds[p.cls].push_back(p);

    std::set<ObjectClass> classes;
    for (const auto& [c, v] : gts) classes.insert(c);
    for (const auto& [c, v] : preds) classes.insert(c);
    for (ObjectClass c : classes) {
      ClassData& cd = data[c];
      auto p = preds.count(c) ? preds[c] : std::vector<PredBox>{};
      std::stable_sort(p.begin(), p.end(), [](const PredBox& a, const PredBox& b) {
        return a.confidence > b.confidence;
      });
      cd.image_preds.emplace_back(i, std::move(p));
      cd.image_gts.push_back(gts.count(c) ? gts[c] : std::vector<LabeledBox>{});
      cd.num_gt += static_cast<int>(cd.image_gts.back().size());
    }
  }
  return data;
}

// Pooled, order-ready flags for one class at one IoU threshold.
std::vector<PooledPred> pooled_flags(const ClassData& cd, ObjectClass cls, double iou_min) {
  std::vector<PooledPred> pool;
  for (std::size_t k = 0; k < cd.image_preds.size(); ++k) {
    const auto& [image_index, preds] = cd.image_preds[k];
    const auto flags = match_detections(preds, cd.image_gts[k], iou_min);
    for (std::size_t r = 0; r < preds.size(); ++r) {
      pool.push_back(PooledPred{preds[r].confidence, r, image_index, cls, flags[r]});
    }
  }
  std::sort(pool.begin(), pool.end(), pooled_before);
  return pool;
}

double ap_from_pool(const std::vector<PooledPred>& pool, int num_gt) {
  std::vector<bool> flags;
  flags.reserve(pool.size());
  for (const PooledPred& p : pool) flags.push_back(p.flag);
  return average_precision(pr_curve(flags, num_gt));
}

}  // namespace

EvalReport evaluate_dataset(const std::vector<LabeledImage>& images) {
  if (images.empty()) raise(Errc::empty_dataset, "no images");
  auto data = collect_classes(images);

  EvalReport report;
  int total_gt = 0;
  for (auto& [cls, cd] : data) {
    if (cd.num_gt == 0) {
      report.classes_without_gt.push_back(cls);
      continue;
    }
    total_gt += cd.num_gt;
    ClassMetrics cm;
    cm.num_gt = cd.num_gt;
    double ap_sum = 0;
    for (double t : kIouThresholds) {
      const double ap = ap_from_pool(pooled_flags(cd, cls, t), cd.num_gt);
      ap_sum += ap;
      if (t == 0.50) cm.ap50 = ap;
    }
    cm.ap50_95 = ap_sum / static_cast<double>(kIouThresholds.size());
    report.per_class[cls] = cm;
  }
  if (report.per_class.empty()) raise(Errc::empty_dataset, "no ground-truth boxes");

  // Operating point: max-F1 prefix over the all-class pool at IoU 0.50.
  std::vector<PooledPred> pool;
  for (const auto& [cls, cd] : data) {
    if (cd.num_gt == 0) continue;
    auto p = pooled_flags(cd, cls, 0.50);
    pool.insert(pool.end(), p.begin(), p.end());
  }
  std::sort(pool.begin(), pool.end(), pooled_before);

  double best_f1 = 0;
  std::size_t best_k = 0;  // number of predictions kept; 0 = keep nothing
  int tp = 0;
  for (std::size_t k = 0; k < pool.size(); ++k) {
    if (pool[k].flag) ++tp;
    const double precision = static_cast<double>(tp) / static_cast<double>(k + 1);
    const double recall = static_cast<double>(tp) / total_gt;
    const double f1 = (precision + recall) > 0 ? 2 * precision * recall / (precision + recall) : 0;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_k = k + 1;
    }
  }

  if (best_k > 0) {
    report.has_operating_point = true;
    report.f1_threshold = pool[best_k - 1].confidence;
    // Keep every prediction at or above the cut (whole confidence tie group).
    std::map<ObjectClass, std::pair<int, int>> kept;  // cls -> (tp, selected)
    int kept_tp = 0, kept_n = 0;
    for (const PooledPred& p : pool) {
      if (p.confidence < report.f1_threshold) break;
      auto& [cls_tp, cls_n] = kept[p.cls];
      ++cls_n;
      ++kept_n;
      if (p.flag) {
        ++cls_tp;
        ++kept_tp;
      }
    }
    report.headline_precision = kept_n > 0 ? static_cast<double>(kept_tp) / kept_n : 0.0;
    report.headline_recall = static_cast<double>(kept_tp) / total_gt;
    for (auto& [cls, cm] : report.per_class) {
      const auto it = kept.find(cls);
      const int cls_tp = it == kept.end() ? 0 : it->second.first;
      const int cls_n = it == kept.end() ? 0 : it->second.second;
      cm.precision = cls_n > 0 ? static_cast<double>(cls_tp) / cls_n : 0.0;
      cm.recall = static_cast<double>(cls_tp) / cm.num_gt;
    }
  }

  double p_sum = 0, r_sum = 0, ap50_sum = 0, ap_range_sum = 0;
  for (const auto& [cls, cm] : report.per_class) {
    p_sum += cm.precision;
    r_sum += cm.recall;
    ap50_sum += cm.ap50;
    ap_range_sum += cm.ap50_95;
  }
  const double n_classes = static_cast<double>(report.per_class.size());
  report.precision = p_sum / n_classes;
  report.recall = r_sum / n_classes;
  report.map50 = ap50_sum / n_classes;
  report.map50_95 = ap_range_sum / n_classes;
  return report;
}

std::pair<double, double> map_range(const std::vector<LabeledImage>& images) {
  const EvalReport report = evaluate_dataset(images);
  return {report.map50, report.map50_95};
}

std::pair<double, double> headline_pr(const std::vector<LabeledImage>& images, double iou_min) {
  if (images.empty()) raise(Errc::empty_dataset, "no images");
  auto data = collect_classes(images);

  std::vector<PooledPred> pool;
  int total_gt = 0;
  for (const auto& [cls, cd] : data) {
    if (cd.num_gt == 0) continue;
    total_gt += cd.num_gt;
    auto p = pooled_flags(cd, cls, iou_min);
    pool.insert(pool.end(), p.begin(), p.end());
  }
  if (total_gt == 0) raise(Errc::empty_dataset, "no ground-truth boxes");
  std::sort(pool.begin(), pool.end(), pooled_before);

  double best_f1 = 0, best_p = 0, best_r = 0;
  int tp = 0;
  for (std::size_t k = 0; k < pool.size(); ++k) {
    if (pool[k].flag) ++tp;
    const double precision = static_cast<double>(tp) / static_cast<double>(k + 1);
    const double recall = static_cast<double>(tp) / total_gt;
    const double f1 = (precision + recall) > 0 ? 2 * precision * recall / (precision + recall) : 0;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_p = precision;
      best_r = recall;
    }
  }
  return {best_p, best_r};
}

std::vector<LabeledImage> load_labeled_images(const std::filesystem::path& gt_path,
                                              const std::filesystem::path& pred_path) {
  const std::vector<AnnotationItem> items = load_annotations(gt_path);

  std::vector<LabeledImage> images;
  images.reserve(items.size());
  std::map<std::string, std::size_t> index;
  for (const AnnotationItem& item : items) {
    if (index.count(item.image_id)) {
      raise(Errc::malformed_record, "duplicate image_id '" + item.image_id + "'");
    }
    index[item.image_id] = images.size();
    LabeledImage img;
    img.image_id = item.image_id;
    img.ground_truth = item.labels;
    images.push_back(std::move(img));
  }

  std::ifstream in(pred_path);
  if (!in) raise(Errc::io_error, "cannot open predictions " + pred_path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
      raise(Errc::malformed_record, pred_path.string() + " line " + std::to_string(lineno));
    }
    try {
      const std::string image_id = j.at("image_id").get<std::string>();
      const auto it = index.find(image_id);
      if (it == index.end()) {
        raise(Errc::malformed_record, "prediction for unknown image '" + image_id + "'");
      }
      for (const auto& dj : j.at("detections")) {
        PredBox p;
        const auto cls = class_from_name(dj.at("class").get<std::string>());
        if (!cls) raise(Errc::invalid_value, "unknown class in " + pred_path.string());
        p.cls = *cls;
        p.confidence = dj.at("confidence").get<double>();
        if (p.confidence < 0 || p.confidence > 1) {
          raise(Errc::invalid_value, "confidence outside [0,1]");
        }
        p.box = BoundingBox{dj.at("box").at("x").get<double>(), dj.at("box").at("y").get<double>(),
                            dj.at("box").at("w").get<double>(), dj.at("box").at("h").get<double>()};
        images[it->second].predictions.push_back(std::move(p));
      }
    } catch (const nlohmann::json::exception& ex) {
      raise(Errc::malformed_record,
            pred_path.string() + " line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return images;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["map50"] = report.map50;
  j["map50_95"] = report.map50_95;
  j["headline_precision"] = report.headline_precision;
  j["headline_recall"] = report.headline_recall;
  if (report.has_operating_point) {
    j["f1_threshold"] = report.f1_threshold;
  } else {
    j["f1_threshold"] = nullptr;
  }
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (const auto& [cls, cm] : report.per_class) {
    per_class[std::string(class_name(cls))] = {{"precision", cm.precision},
                                               {"recall", cm.recall},
                                               {"ap50", cm.ap50},
                                               {"ap50_95", cm.ap50_95},
                                               {"num_gt", cm.num_gt}};
  }
  j["per_class"] = std::move(per_class);
  nlohmann::ordered_json missing = nlohmann::ordered_json::array();
  for (ObjectClass c : report.classes_without_gt) missing.push_back(std::string(class_name(c)));
  j["classes_without_gt"] = std::move(missing);
  return j.dump(2);
}

std::string report_table(const std::vector<std::pair<std::string, EvalReport>>& models) {
  std::size_t name_width = 5;  // "Model"
  for (const auto& [name, report] : models) name_width = std::max(name_width, name.size());

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width) + 2) << "Model" << std::right
      << std::setw(10) << "Precision" << std::setw(10) << "Recall" << std::setw(10) << "mAP50"
      << std::setw(10) << "mAP50-95" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const auto& [name, report] : models) {
    out << std::left << std::setw(static_cast<int>(name_width) + 2) << name << std::right
        << std::setw(10) << report.precision << std::setw(10) << report.recall << std::setw(10)
        << report.map50 << std::setw(10) << report.map50_95 << '\n';
  }
  return out.str();
}

}  // namespace trafficmon
