#include "trafficmon/dataset_prep.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "trafficmon/errors.hpp"
#include "trafficmon/rng.hpp"

namespace trafficmon {

std::string source_of(const std::string& image_id) {
  const auto pos = image_id.rfind("#v");
  return pos == std::string::npos ? image_id : image_id.substr(0, pos);
}

namespace {

// Clip a box to [0,W]x[0,H]; returns false when nothing is left.
bool clip_box(BoundingBox& b, double w, double h) {
  const double x2 = std::min(b.x + b.w, w);
  const double y2 = std::min(b.y + b.h, h);
  b.x = std::max(b.x, 0.0);
  b.y = std::max(b.y, 0.0);
  b.w = x2 - b.x;
  b.h = y2 - b.y;
  return b.w > 0 && b.h > 0;
}

}  // namespace

std::pair<AnnotationItem, LetterboxParams> letterbox_transform(const AnnotationItem& item,
                                                               double target) {
  if (item.image_w <= 0 || item.image_h <= 0 || target <= 0) {
    raise(Errc::invalid_geometry, "letterbox needs positive dimensions");
  }
  LetterboxParams p;
  p.scale = target / std::max(item.image_w, item.image_h);
  p.pad_x = (target - item.image_w * p.scale) / 2.0;
  p.pad_y = (target - item.image_h * p.scale) / 2.0;

  AnnotationItem out;
  out.image_id = item.image_id;
  out.image_w = target;
  out.image_h = target;
  out.labels.reserve(item.labels.size());
  for (const LabeledBox& lb : item.labels) {
    LabeledBox t = lb;
    t.box.x = lb.box.x * p.scale + p.pad_x;
    t.box.y = lb.box.y * p.scale + p.pad_y;
    t.box.w = lb.box.w * p.scale;
    t.box.h = lb.box.h * p.scale;
    // Guard the far edge against float round-up.
    t.box.w = std::min(t.box.w, target - t.box.x);
    t.box.h = std::min(t.box.h, target - t.box.y);
    out.labels.push_back(std::move(t));
  }
  return {std::move(out), p};
}

std::vector<AnnotationItem> augment_variants(const AnnotationItem& item, int n_variants,
                                             std::uint64_t seed) {
  if (n_variants < 1) raise(Errc::invalid_value, "n_variants must be >= 1");
  std::vector<AnnotationItem> variants;
  variants.reserve(n_variants);

  AnnotationItem original = item;
  original.image_id = item.image_id + "#v0";
  variants.push_back(std::move(original));

  const double w = item.image_w;
  const double h = item.image_h;
  for (int v = 1; v < n_variants; ++v) {
    Rng rng = Rng::stream(seed, item.image_id, "augment", static_cast<std::uint64_t>(v));
    const bool flip = rng.bernoulli(0.5);
    const bool do_scale = rng.bernoulli(0.5);
    const double scale = do_scale ? rng.uniform(0.9, 1.1) : 1.0;
    const bool do_translate = rng.bernoulli(0.5);
    const double dx = do_translate ? rng.uniform(-0.05, 0.05) * w : 0.0;
    const double dy = do_translate ? rng.uniform(-0.05, 0.05) * h : 0.0;

    AnnotationItem out;
    out.image_id = item.image_id + "#v" + std::to_string(v);
    out.image_w = w;
    out.image_h = h;
    for (const LabeledBox& lb : item.labels) {
      LabeledBox t = lb;
      if (flip) t.box.x = w - t.box.x - t.box.w;
      if (do_scale) {
        const double cx = w / 2.0, cy = h / 2.0;
        t.box.x = cx + (t.box.x - cx) * scale;
        t.box.y = cy + (t.box.y - cy) * scale;
        t.box.w *= scale;
        t.box.h *= scale;
      }
      t.box.x += dx;
      t.box.y += dy;
      if (clip_box(t.box, w, h)) out.labels.push_back(std::move(t));
    }
    variants.push_back(std::move(out));
  }
  return variants;
}

SplitManifest split_dataset(const std::vector<AnnotationItem>& items, const SplitRatios& ratios,
                            std::uint64_t seed) {
  const double sum = ratios.train + ratios.validation + ratios.test;
  if (ratios.train < 0 || ratios.validation < 0 || ratios.test < 0 ||
      std::abs(sum - 1.0) > 1e-9) {
    raise(Errc::bad_ratios, "split ratios must be non-negative and sum to 1");
  }

  // Group variants by source; groups keep first-seen order before shuffling.
  std::vector<std::string> group_order;
  std::map<std::string, std::vector<std::string>> groups;
  for (const AnnotationItem& item : items) {
    const std::string src = source_of(item.image_id);
    auto [it, inserted] = groups.try_emplace(src);
    if (inserted) group_order.push_back(src);
    it->second.push_back(item.image_id);
  }

  // Fisher-Yates with our own bounded draw, identical on every platform.
  Rng rng = Rng::stream(seed, "split", "shuffle");
  for (std::size_t i = group_order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i - 1)));
    std::swap(group_order[i - 1], group_order[j]);
  }

  // Largest-remainder apportionment of group counts.
  const std::size_t n = group_order.size();
  const std::array<double, 3> parts = {ratios.train, ratios.validation, ratios.test};
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const double exact = parts[s] * static_cast<double>(n);
    counts[s] = static_cast<std::size_t>(std::floor(exact));
    remainders[s] = exact - std::floor(exact);
    assigned += counts[s];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) counts[order[i % 3]] += 1;

  SplitManifest manifest;
  manifest.seed = seed;
  std::size_t pos = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    auto& dest = s == 0 ? manifest.train : s == 1 ? manifest.validation : manifest.test;
    for (std::size_t i = 0; i < counts[s]; ++i, ++pos) {
      const auto& ids = groups[group_order[pos]];
      dest.insert(dest.end(), ids.begin(), ids.end());
    }
  }
  return manifest;
}

std::vector<AnnotationItem> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open annotations " + path.string());
  std::vector<AnnotationItem> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
      raise(Errc::malformed_record, path.string() + " line " + std::to_string(lineno));
    }
    AnnotationItem item;
    try {
      item.image_id = j.at("image_id").get<std::string>();
      item.image_w = j.at("image_w").get<double>();
      item.image_h = j.at("image_h").get<double>();
      for (const auto& lj : j.at("labels")) {
        LabeledBox lb;
        const auto cls = class_from_name(lj.at("class").get<std::string>());
        if (!cls) raise(Errc::invalid_value, "unknown class in " + path.string());
        lb.cls = *cls;
        lb.box = BoundingBox{lj.at("box").at("x").get<double>(), lj.at("box").at("y").get<double>(),
                             lj.at("box").at("w").get<double>(), lj.at("box").at("h").get<double>()};
        if (!box_fits(lb.box, item.image_w, item.image_h)) {
          raise(Errc::box_out_of_bounds,
                path.string() + " line " + std::to_string(lineno) + ": box outside image");
        }
        item.labels.push_back(std::move(lb));
      }
    } catch (const nlohmann::json::exception& ex) {
      raise(Errc::malformed_record,
            path.string() + " line " + std::to_string(lineno) + ": " + ex.what());
    }
    items.push_back(std::move(item));
  }
  return items;
}

void save_annotations(const std::vector<AnnotationItem>& items,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_error, "cannot write annotations " + path.string());
  for (const AnnotationItem& item : items) {
    nlohmann::ordered_json j;
    j["image_id"] = item.image_id;
    j["image_w"] = item.image_w;
    j["image_h"] = item.image_h;
    nlohmann::ordered_json labels = nlohmann::ordered_json::array();
    for (const LabeledBox& lb : item.labels) {
      labels.push_back({{"class", std::string(class_name(lb.cls))},
                        {"box",
                         {{"x", lb.box.x}, {"y", lb.box.y}, {"w", lb.box.w}, {"h", lb.box.h}}}});
    }
    j["labels"] = std::move(labels);
    out << j.dump() << '\n';
  }
}

std::string manifest_to_json(const SplitManifest& manifest) {
  nlohmann::ordered_json j;
  j["seed"] = manifest.seed;
  j["train"] = manifest.train;
  j["validation"] = manifest.validation;
  j["test"] = manifest.test;
  return j.dump(2);
}

}  // namespace trafficmon
