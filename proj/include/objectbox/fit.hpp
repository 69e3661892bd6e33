#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "objectbox/assign.hpp"
#include "objectbox/codec.hpp"
#include "objectbox/loss.hpp"
#include "objectbox/scene.hpp"

namespace objectbox {

// Random scene recipe. Widths and heights are drawn independently from
// [min_size, max_size] pixels; centers uniformly from the image interior.
struct SceneSpec {
  int image_w = 640;
  int image_h = 640;
  std::size_t object_count = 1;
  double min_size = 8.0;
  double max_size = 320.0;
  int num_classes = 1;

  void validate() const;
};

// Deterministic for a given (spec, seed). Throws ConfigError for an empty size
// range or a non-positive image.
Scene generate_scene(const SceneSpec& spec, std::uint64_t seed);

struct FitConfig {
  std::size_t steps = 500;
  double learning_rate = 0.1;
  LossConfig loss;
  AssignMode mode;
  std::vector<int> strides = kDefaultStrides;
  std::vector<double> gains = kDefaultGains;
  std::uint64_t seed = 0;
  SceneSpec scene;
  // Also learn objectness (every cell) and class logits (positive cells) with
  // the per-scale multitask sum instead of the box loss alone.
  bool multitask = false;

  void validate() const;
};

struct ObjectFit {
  std::size_t object_id = 0;
  bool excluded = false;  // no representable positive record at any scale
  // Final IoU per scale, best over that scale's records; empty where the
  // object has no trainable record.
  std::vector<std::optional<double>> scale_iou;
  double best_iou = 0.0;
  std::optional<std::size_t> steps_to_iou_090;
  std::optional<std::size_t> steps_to_iou_099;
};

struct FitReport {
  LossKind loss_kind = LossKind::sdiou;
  std::size_t steps = 0;
  double learning_rate = 0.0;
  std::size_t trained_records = 0;
  std::size_t skipped_records = 0;  // outside the decode range of their scale
  // Index t holds the state after t updates (steps + 1 entries).
  std::vector<double> loss_trace;
  std::vector<double> mean_best_iou_trace;
  std::vector<ObjectFit> objects;
  // First step at which every trained object reached the IoU level.
  std::optional<std::size_t> steps_to_iou_090;
  std::optional<std::size_t> steps_to_iou_099;
  // Fraction of trained objects ending above IoU 0.99.
  double success_rate = 0.0;
};

// Plain full-batch gradient descent on per-cell logits, starting from 0.
FitReport fit_scene(const Scene& scene, const FitConfig& cfg);

struct ComparisonRow {
  LossKind kind = LossKind::sdiou;
  std::size_t scenes = 0;
  // Empty when the median scene never reached the level.
  std::optional<double> median_steps_090;
  std::optional<double> median_steps_099;
  double mean_success_rate = 0.0;
  double mean_final_iou = 0.0;
};

// Fits every scene with each loss (identical initialisation), one row per kind.
std::vector<ComparisonRow> compare_losses(std::span<const Scene> scenes, const FitConfig& cfg,
                                          std::span<const LossKind> kinds);

// Median with unreached entries ordered last; empty if the median is unreached.
std::optional<double> median_steps(std::span<const std::optional<std::size_t>> values);

std::string fit_trace_csv(const FitReport& report);

}  // namespace objectbox
