#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "trafficmon/detection.hpp"

namespace trafficmon {

// One annotated image. Variants produced by augmentation carry ids of the
// form "<source>#v<k>"; source_of() recovers the grouping key.
struct AnnotationItem {
  std::string image_id;
  double image_w = 0;
  double image_h = 0;
  std::vector<LabeledBox> labels;
};

std::string source_of(const std::string& image_id);

struct LetterboxParams {
  double scale = 1;
  double pad_x = 0;
  double pad_y = 0;
};

// Aspect-preserving resize onto a square target canvas: scale by
// target / max(w, h), then center with symmetric padding. Box coordinates
// map as x' = x*scale + pad_x (and likewise for y); sizes scale uniformly.
std::pair<AnnotationItem, LetterboxParams> letterbox_transform(const AnnotationItem& item,
                                                               double target = 640);

// n_variants items; variant 0 is the original. Each other variant applies a
// seeded composition of horizontal flip, scale in [0.9, 1.1] about the image
// center, and translation up to +/-5%, with boxes clipped to the canvas and
// zero-area boxes dropped. Deterministic per (seed, image_id, variant).
std::vector<AnnotationItem> augment_variants(const AnnotationItem& item, int n_variants,
                                             std::uint64_t seed);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct SplitManifest {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
};

// Seeded shuffle of source groups, partitioned by largest-remainder
// rounding of the group counts, so every variant of one source image lands
// in the same split. Throws Errc::bad_ratios unless the ratios are
// non-negative and sum to 1.
SplitManifest split_dataset(const std::vector<AnnotationItem>& items, const SplitRatios& ratios,
                            std::uint64_t seed);

std::vector<AnnotationItem> load_annotations(const std::filesystem::path& path);
void save_annotations(const std::vector<AnnotationItem>& items, const std::filesystem::path& path);

std::string manifest_to_json(const SplitManifest& manifest);

}  // namespace trafficmon
