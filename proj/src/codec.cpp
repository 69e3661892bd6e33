#include "objectbox/codec.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <fmt/format.h>

#include "objectbox/errors.hpp"

namespace objectbox {

namespace {

constexpr const char* kComponentNames[4] = {"left", "top", "right", "bottom"};

void check_scale_index(const ScaleConfig& scale, std::size_t i) {
  if (i >= scale.num_scales()) {
    throw ConfigError(fmt::format("scale index {} out of range (have {} scales)",
                                  i, scale.num_scales()));
  }
}

}  // namespace

ScaleConfig::ScaleConfig(int image_w, int image_h, std::vector<int> strides,
                         std::vector<double> gains)
    : image_w_(image_w), image_h_(image_h), strides_(std::move(strides)),
      gains_(std::move(gains)) {
  if (strides_.empty()) throw ConfigError("at least one stride is required");
  if (gains_.size() != strides_.size()) {
    throw ConfigError(fmt::format("{} gains given for {} strides", gains_.size(),
                                  strides_.size()));
  }
  if (image_w_ <= 0 || image_h_ <= 0) {
    throw ConfigError("image size must be positive");
  }
  for (std::size_t i = 0; i < strides_.size(); ++i) {
    if (strides_[i] <= 0) throw ConfigError("strides must be positive");
    if (i > 0 && strides_[i] <= strides_[i - 1]) {
      throw ConfigError("strides must be strictly increasing");
    }
    if (image_w_ % strides_[i] != 0 || image_h_ % strides_[i] != 0) {
      throw ConfigError(fmt::format("stride {} does not divide image size {}x{}",
                                    strides_[i], image_w_, image_h_));
    }
    if (!(gains_[i] > 0.0) || !std::isfinite(gains_[i])) {
      throw ConfigError(fmt::format("gain {} at scale {} must be > 0", gains_[i], i));
    }
  }
}

ScaleConfig ScaleConfig::padded_for_image(int image_w, int image_h,
                                          std::vector<int> strides,
                                          std::vector<double> gains) {
  if (strides.empty()) throw ConfigError("at least one stride is required");
  int unit = 1;
  for (int s : strides) {
    if (s <= 0) throw ConfigError("strides must be positive");
    unit = std::lcm(unit, s);
  }
  auto round_up = [unit](int v) { return ((v + unit - 1) / unit) * unit; };
  return ScaleConfig(round_up(image_w), round_up(image_h), std::move(strides),
                     std::move(gains));
}

RegressionTarget RegressionTarget::from_values(const std::array<double, 4>& v,
                                               std::size_t scale_index) {
  return RegressionTarget{v[0], v[1], v[2], v[3], scale_index};
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

Cell center_cell(const BoundingBox& box, const ScaleConfig& scale,
                 std::size_t scale_index) {
  check_scale_index(scale, scale_index);
  const double s = scale.stride(scale_index);
  return Cell{static_cast<int>(std::floor(box.cx() / s)),
              static_cast<int>(std::floor(box.cy() / s))};
}

RegressionTarget cell_distances(const BoundingBox& box, Cell cell,
                                const ScaleConfig& scale,
                                std::size_t scale_index) {
  check_scale_index(scale, scale_index);
  const double s = scale.stride(scale_index);
  const CornerBox c = to_corner(box);
  return RegressionTarget{(cell.x + 1) - c.x1() / s, (cell.y + 1) - c.y1() / s,
                          c.x2() / s - cell.x, c.y2() / s - cell.y, scale_index};
}

RegressionTarget encode(const BoundingBox& box, Cell cell, const ScaleConfig& scale,
                        std::size_t scale_index) {
  RegressionTarget t = cell_distances(box, cell, scale, scale_index);
  const auto v = t.values();
  for (int k = 0; k < 4; ++k) {
    if (!(v[k] > 0.0)) {
      throw GeometryError(fmt::format(
          "cell ({}, {}) at scale {} cannot regress the box: {} distance is {}",
          cell.x, cell.y, scale_index, kComponentNames[k], v[k]));
    }
  }
  return t;
}

double decode_distance(double logit_value, double gain) {
  const double two_sig = 2.0 * sigmoid(logit_value);
  return two_sig * two_sig * gain;
}

double decode_slope(double logit_value, double gain) {
  const double sig = sigmoid(logit_value);
  return 8.0 * gain * sig * sig * sigmoid(-logit_value);
}

RegressionTarget decode(const RawPrediction& raw, const ScaleConfig& scale) {
  check_scale_index(scale, raw.scale_index);
  const double g = scale.gain(raw.scale_index);
  std::array<double, 4> d{};
  for (int k = 0; k < 4; ++k) d[k] = decode_distance(raw.logits[k], g);
  return RegressionTarget::from_values(d, raw.scale_index);
}

RawPrediction encode_logit(const RegressionTarget& target, const ScaleConfig& scale) {
  check_scale_index(scale, target.scale_index);
  const double g = scale.gain(target.scale_index);
  const auto v = target.values();
  RawPrediction raw;
  raw.scale_index = target.scale_index;
  for (int k = 0; k < 4; ++k) {
    if (!(v[k] > 0.0) || !(v[k] < 4.0 * g)) {
      throw RangeError(fmt::format(
          "{} distance {} is outside the representable range (0, {}) at scale {}",
          kComponentNames[k], v[k], 4.0 * g, target.scale_index));
    }
    const double sig = std::sqrt(v[k] / g) / 2.0;
    raw.logits[k] = logit(sig);
  }
  return raw;
}

std::pair<double, double> representable_range(const ScaleConfig& scale,
                                              std::size_t scale_index) {
  check_scale_index(scale, scale_index);
  return {0.0, 4.0 * scale.gain(scale_index) * scale.stride(scale_index)};
}

bool is_representable(const RegressionTarget& target, const ScaleConfig& scale) {
  check_scale_index(scale, target.scale_index);
  const double hi = 4.0 * scale.gain(target.scale_index);
  for (double v : target.values()) {
    if (!(v > 0.0) || !(v < hi)) return false;
  }
  return true;
}

std::optional<CornerBox> cell_frame_box(const RegressionTarget& target, Cell cell,
                                        const ScaleConfig& scale) {
  check_scale_index(scale, target.scale_index);
  const double s = scale.stride(target.scale_index);
  const double x1 = s * (cell.x + 1 - target.left);
  const double y1 = s * (cell.y + 1 - target.top);
  const double x2 = s * (cell.x + target.right);
  const double y2 = s * (cell.y + target.bottom);
  if (!(x2 > x1) || !(y2 > y1)) return std::nullopt;
  return CornerBox(x1, y1, x2, y2);
}

}  // namespace objectbox
