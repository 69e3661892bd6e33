#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "objectbox/codec.hpp"
#include "objectbox/geom.hpp"

namespace objectbox {

enum class LossKind { sdiou, mse, iou, giou, diou, ciou };

std::string_view to_string(LossKind k);
// Throws ConfigError listing the valid names.
LossKind parse_loss_kind(std::string_view name);
std::vector<LossKind> all_loss_kinds();

struct LossConfig {
  double rho = 1.0;
  LossKind kind = LossKind::sdiou;
  double weight_cls = 1.0;
  double weight_obj = 1.0;
  double weight_box = 1.0;

  void validate() const;
};

// Intermediate terms of the SDIoU score, all in (squared) grid units.
struct SdiouParts {
  double S = 0.0;   // summed squared distance differences
  double I = 0.0;   // squared diagonal of the overlap
  double C = 0.0;   // squared diagonal of the cover
  double wI = 0.0;  // overlap width, clamped at 0
  double hI = 0.0;
  double wC = 0.0;
  double hC = 0.0;
  double sdiou = 0.0;
  double loss = 0.0;
};

using Gradient4 = std::array<double, 4>;

// Threshold below which the cover diagonal counts as degenerate.
inline constexpr double kCoverEpsilon = 1e-12;

// Throws GeometryError when C <= kCoverEpsilon and ConfigError when pred and
// truth belong to different scales.
SdiouParts sdiou(const RegressionTarget& pred, const RegressionTarget& truth,
                 const LossConfig& cfg = {});

// d loss / d (left, top, right, bottom) of pred. At min/max ties the
// derivative follows the ground-truth argument; a clamped overlap side
// contributes nothing.
Gradient4 sdiou_grad(const RegressionTarget& pred, const RegressionTarget& truth,
                     const LossConfig& cfg = {});

// d loss / d logits, chained through the squared-sigmoid decode.
Gradient4 sdiou_logit_grad(const RawPrediction& raw, const RegressionTarget& truth,
                           const ScaleConfig& scale, const LossConfig& cfg = {});

// Distances drawn as a box in the frame of their own cell (cell top-left at the
// origin, one unit per cell): x1 = 1 - left, y1 = 1 - top, x2 = right,
// y2 = bottom. Throws GeometryError if the implied width or height is negative.
CornerBox cell_frame_corners(const RegressionTarget& t);

// MSE (mean over the four distances) or 1 - score for the IoU family, with
// both boxes drawn in the shared cell frame. A predicted box whose width or
// height collapses has zero area; the CIoU aspect term holds its sides at a
// 1e-9 floor so the ratio stays defined.
double baseline_loss(const RegressionTarget& pred, const RegressionTarget& truth,
                     LossKind kind);
Gradient4 baseline_grad(const RegressionTarget& pred, const RegressionTarget& truth,
                        LossKind kind);

// Dispatch on cfg.kind.
double regression_loss(const RegressionTarget& pred, const RegressionTarget& truth,
                       const LossConfig& cfg);
Gradient4 regression_grad(const RegressionTarget& pred, const RegressionTarget& truth,
                          const LossConfig& cfg);
Gradient4 regression_logit_grad(const RawPrediction& raw, const RegressionTarget& truth,
                                const ScaleConfig& scale, const LossConfig& cfg);

// Numerically stable binary cross entropy on a logit. Throws ConfigError for a
// label outside {0, 1}.
double bce_with_logits(double logit_value, double label);
// d bce / d logit.
double bce_logit_grad(double logit_value, double label);

// Raw per-scale inputs for the multitask loss.
struct ScaleTerms {
  std::vector<double> box_losses;
  std::vector<double> obj_logits;
  std::vector<double> obj_labels;
  std::vector<double> cls_logits;
  std::vector<double> cls_labels;
};

struct MultitaskLoss {
  std::vector<double> cls;  // per scale
  std::vector<double> obj;
  std::vector<double> box;
  std::vector<double> per_scale;
  double total = 0.0;
};

// l_s = w_cls * l_cls + w_obj * l_obj + w_box * l_box for each scale, where each
// term is the mean over its elements (0 when a scale has none), and the total
// is the sum over scales.
MultitaskLoss multitask_loss(std::span<const ScaleTerms> scales, const LossConfig& cfg = {});

double scale_loss(double cls, double obj, double box, const LossConfig& cfg = {});

}  // namespace objectbox
