#include "objectbox/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "dual.hpp"
#include "objectbox/errors.hpp"

namespace objectbox {

namespace {

using detail::Dual;

constexpr std::pair<LossKind, std::string_view> kLossNames[] = {
    {LossKind::sdiou, "sdiou"}, {LossKind::mse, "mse"},   {LossKind::iou, "iou"},
    {LossKind::giou, "giou"},   {LossKind::diou, "diou"}, {LossKind::ciou, "ciou"},
};

constexpr double kCollapsedSide = 1e-9;

void check_same_scale(const RegressionTarget& pred, const RegressionTarget& truth) {
  if (pred.scale_index != truth.scale_index) {
    throw ConfigError(fmt::format("prediction at scale {} compared with truth at scale {}",
                                  pred.scale_index, truth.scale_index));
  }
}

// Tie-breaking picks: on equality the ground-truth value (second argument) wins,
// so its zero derivative is the one propagated.
template <class T>
T pick_max(const T& pred, double truth) {
  return detail::value(pred) > truth ? pred : T(truth);
}

template <class T>
T pick_min(const T& pred, double truth) {
  return detail::value(pred) < truth ? pred : T(truth);
}

template <class T>
T clamp_below(const T& x, double floor) {
  return detail::value(x) > floor ? x : T(floor);
}

// IoU-family score of two boxes in the shared cell frame. pred holds
// (left, top, right, bottom) in the scalar type being differentiated.
template <class T>
T iou_family_score(const std::array<T, 4>& pred, const std::array<double, 4>& truth,
                   LossKind kind) {
  const T px1 = T(1.0) - pred[0], py1 = T(1.0) - pred[1];
  const T px2 = pred[2], py2 = pred[3];
  const double tx1 = 1.0 - truth[0], ty1 = 1.0 - truth[1];
  const double tx2 = truth[2], ty2 = truth[3];

  // A collapsed prediction has zero area; only the aspect term needs a floor.
  const T pw = clamp_below(px2 - px1, 0.0);
  const T ph = clamp_below(py2 - py1, 0.0);
  const double tw = tx2 - tx1, th = ty2 - ty1;

  const T iw = clamp_below(pick_min(px2, tx2) - pick_max(px1, tx1), 0.0);
  const T ih = clamp_below(pick_min(py2, ty2) - pick_max(py1, ty1), 0.0);
  const T inter = iw * ih;
  const T uni = pw * ph + T(tw * th) - inter;
  const T iou = inter / uni;
  if (kind == LossKind::iou) return iou;

  const T cw = pick_max(px2, tx2) - pick_min(px1, tx1);
  const T ch = pick_max(py2, ty2) - pick_min(py1, ty1);
  if (kind == LossKind::giou) {
    const T carea = cw * ch;
    return iou - (carea - uni) / carea;
  }

  const T diag2 = cw * cw + ch * ch;
  const T dx = (px1 + px2) * T(0.5) - T((tx1 + tx2) * 0.5);
  const T dy = (py1 + py2) * T(0.5) - T((ty1 + ty2) * 0.5);
  const T diou = iou - (dx * dx + dy * dy) / diag2;
  if (kind == LossKind::diou) return diou;

  using std::atan;
  using detail::atan;
  const T dtheta = T(std::atan(tw / th)) -
                   atan(clamp_below(pw, kCollapsedSide) / clamp_below(ph, kCollapsedSide));
  const T v = T(4.0 / (std::numbers::pi * std::numbers::pi)) * dtheta * dtheta;
  if (detail::value(v) == 0.0) return diou;
  const T alpha = v / ((T(1.0) - iou) + v);
  return diou - alpha * v;
}

}  // namespace

std::string_view to_string(LossKind k) {
  for (const auto& [value, name] : kLossNames) {
    if (value == k) return name;
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  for (const auto& [value, n] : kLossNames) {
    if (n == name) return value;
  }
  std::string valid;
  for (const auto& entry : kLossNames) {
    if (!valid.empty()) valid += ", ";
    valid += entry.second;
  }
  throw ConfigError(fmt::format("unknown loss '{}' (valid: {})", name, valid));
}

std::vector<LossKind> all_loss_kinds() {
  std::vector<LossKind> out;
  for (const auto& entry : kLossNames) out.push_back(entry.first);
  return out;
}

void LossConfig::validate() const {
  if (!(rho >= 0.0) || !std::isfinite(rho)) {
    throw ConfigError(fmt::format("rho must be >= 0, got {}", rho));
  }
  for (double w : {weight_cls, weight_obj, weight_box}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("multitask weights must be finite and >= 0");
    }
  }
}

SdiouParts sdiou(const RegressionTarget& pred, const RegressionTarget& truth,
                 const LossConfig& cfg) {
  check_same_scale(pred, truth);
  const auto p = pred.values();
  const auto t = truth.values();

  SdiouParts out;
  for (int k = 0; k < 4; ++k) out.S += (t[k] - p[k]) * (t[k] - p[k]);

  out.wI = std::max(0.0, std::min(t[0], p[0]) + std::min(t[2], p[2]) - 1.0);
  out.hI = std::max(0.0, std::min(t[1], p[1]) + std::min(t[3], p[3]) - 1.0);
  out.wC = std::max(t[0], p[0]) + std::max(t[2], p[2]) - 1.0;
  out.hC = std::max(t[1], p[1]) + std::max(t[3], p[3]) - 1.0;
  out.I = out.wI * out.wI + out.hI * out.hI;
  out.C = out.wC * out.wC + out.hC * out.hC;
  if (!(out.C > kCoverEpsilon)) {
    throw GeometryError(fmt::format("degenerate cover region (C = {})", out.C));
  }
  out.sdiou = (out.I - cfg.rho * out.S) / out.C;
  out.loss = 1.0 - out.sdiou;
  return out;
}

Gradient4 sdiou_grad(const RegressionTarget& pred, const RegressionTarget& truth,
                     const LossConfig& cfg) {
  const SdiouParts parts = sdiou(pred, truth, cfg);
  const auto p = pred.values();
  const auto t = truth.values();
  const double wI_raw = std::min(t[0], p[0]) + std::min(t[2], p[2]) - 1.0;
  const double hI_raw = std::min(t[1], p[1]) + std::min(t[3], p[3]) - 1.0;
  const double numerator = parts.I - cfg.rho * parts.S;

  Gradient4 g{};
  for (int k = 0; k < 4; ++k) {
    const bool horizontal = (k == 0 || k == 2);
    const double overlap_side = horizontal ? parts.wI : parts.hI;
    const bool overlap_open = (horizontal ? wI_raw : hI_raw) > 0.0;
    const double cover_side = horizontal ? parts.wC : parts.hC;

    const double dI = (p[k] < t[k] && overlap_open) ? 2.0 * overlap_side : 0.0;
    const double dC = p[k] > t[k] ? 2.0 * cover_side : 0.0;
    const double dS = 2.0 * (p[k] - t[k]);
    const double dN = dI - cfg.rho * dS;
    g[k] = -(dN * parts.C - numerator * dC) / (parts.C * parts.C);
  }
  return g;
}

Gradient4 sdiou_logit_grad(const RawPrediction& raw, const RegressionTarget& truth,
                           const ScaleConfig& scale, const LossConfig& cfg) {
  LossConfig c = cfg;
  c.kind = LossKind::sdiou;
  return regression_logit_grad(raw, truth, scale, c);
}

CornerBox cell_frame_corners(const RegressionTarget& t) {
  return CornerBox(1.0 - t.left, 1.0 - t.top, t.right, t.bottom);
}

double baseline_loss(const RegressionTarget& pred, const RegressionTarget& truth,
                     LossKind kind) {
  check_same_scale(pred, truth);
  const auto p = pred.values();
  const auto t = truth.values();
  switch (kind) {
    case LossKind::mse: {
      double sum = 0.0;
      for (int k = 0; k < 4; ++k) sum += (p[k] - t[k]) * (p[k] - t[k]);
      return sum / 4.0;
    }
    case LossKind::iou:
    case LossKind::giou:
    case LossKind::diou:
    case LossKind::ciou:
      return 1.0 - iou_family_score<double>(p, t, kind);
    case LossKind::sdiou:
      break;
  }
  throw ConfigError("baseline_loss does not cover sdiou; use sdiou()");
}

Gradient4 baseline_grad(const RegressionTarget& pred, const RegressionTarget& truth,
                        LossKind kind) {
  check_same_scale(pred, truth);
  const auto p = pred.values();
  const auto t = truth.values();
  Gradient4 g{};
  switch (kind) {
    case LossKind::mse:
      for (int k = 0; k < 4; ++k) g[k] = (p[k] - t[k]) / 2.0;
      return g;
    case LossKind::iou:
    case LossKind::giou:
    case LossKind::diou:
    case LossKind::ciou: {
      std::array<Dual, 4> vars;
      for (int k = 0; k < 4; ++k) vars[k] = Dual::variable(p[k], k);
      const Dual score = iou_family_score<Dual>(vars, t, kind);
      for (int k = 0; k < 4; ++k) g[k] = -score.d[k];
      return g;
    }
    case LossKind::sdiou:
      break;
  }
  throw ConfigError("baseline_grad does not cover sdiou; use sdiou_grad()");
}

double regression_loss(const RegressionTarget& pred, const RegressionTarget& truth,
                       const LossConfig& cfg) {
  if (cfg.kind == LossKind::sdiou) return sdiou(pred, truth, cfg).loss;
  return baseline_loss(pred, truth, cfg.kind);
}

Gradient4 regression_grad(const RegressionTarget& pred, const RegressionTarget& truth,
                          const LossConfig& cfg) {
  if (cfg.kind == LossKind::sdiou) return sdiou_grad(pred, truth, cfg);
  return baseline_grad(pred, truth, cfg.kind);
}

Gradient4 regression_logit_grad(const RawPrediction& raw, const RegressionTarget& truth,
                                const ScaleConfig& scale, const LossConfig& cfg) {
  const RegressionTarget pred = decode(raw, scale);
  Gradient4 g = regression_grad(pred, truth, cfg);
  const double gain = scale.gain(raw.scale_index);
  for (int k = 0; k < 4; ++k) g[k] *= decode_slope(raw.logits[k], gain);
  return g;
}

double bce_with_logits(double logit_value, double label) {
  if (label != 0.0 && label != 1.0) {
    throw ConfigError(fmt::format("binary label must be 0 or 1, got {}", label));
  }
  return std::max(logit_value, 0.0) - logit_value * label +
         std::log1p(std::exp(-std::abs(logit_value)));
}

double bce_logit_grad(double logit_value, double label) {
  if (label != 0.0 && label != 1.0) {
    throw ConfigError(fmt::format("binary label must be 0 or 1, got {}", label));
  }
  return sigmoid(logit_value) - label;
}

double scale_loss(double cls, double obj, double box, const LossConfig& cfg) {
  return cfg.weight_cls * cls + cfg.weight_obj * obj + cfg.weight_box * box;
}

MultitaskLoss multitask_loss(std::span<const ScaleTerms> scales, const LossConfig& cfg) {
  cfg.validate();
  auto mean_bce = [](const std::vector<double>& logits, const std::vector<double>& labels) {
    if (logits.size() != labels.size()) {
      throw ConfigError(fmt::format("{} logits given with {} labels", logits.size(),
                                    labels.size()));
    }
    if (logits.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) sum += bce_with_logits(logits[i], labels[i]);
    return sum / static_cast<double>(logits.size());
  };

  MultitaskLoss out;
  for (const auto& s : scales) {
    const double cls = mean_bce(s.cls_logits, s.cls_labels);
    const double obj = mean_bce(s.obj_logits, s.obj_labels);
    double box = 0.0;
    for (double b : s.box_losses) box += b;
    if (!s.box_losses.empty()) box /= static_cast<double>(s.box_losses.size());
    out.cls.push_back(cls);
    out.obj.push_back(obj);
    out.box.push_back(box);
    out.per_scale.push_back(scale_loss(cls, obj, box, cfg));
    out.total += out.per_scale.back();
  }
  return out;
}

}  // namespace objectbox
