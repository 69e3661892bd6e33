#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "objectbox/geom.hpp"

namespace objectbox {

inline const std::vector<int> kDefaultStrides = {8, 16, 32};
// Literal exponent reading of the per-level gain 2^i with i in {1, 2, 4}.
inline const std::vector<double> kDefaultGains = {2.0, 4.0, 16.0};

// Feature-pyramid geometry: one stride and one decode gain per level, plus
// the input image size. Every stride must divide both image dimensions.
class ScaleConfig {
 public:
  ScaleConfig(int image_w, int image_h, std::vector<int> strides = kDefaultStrides,
              std::vector<double> gains = kDefaultGains);

  // Rounds the image size up to a multiple of the largest-stride grid so any
  // image can be mapped onto the pyramid (zero padding at the right/bottom).
  static ScaleConfig padded_for_image(int image_w, int image_h,
                                      std::vector<int> strides = kDefaultStrides,
                                      std::vector<double> gains = kDefaultGains);

  std::size_t num_scales() const { return strides_.size(); }
  int stride(std::size_t i) const { return strides_.at(i); }
  double gain(std::size_t i) const { return gains_.at(i); }
  int image_w() const { return image_w_; }
  int image_h() const { return image_h_; }
  int grid_w(std::size_t i) const { return image_w_ / stride(i); }
  int grid_h(std::size_t i) const { return image_h_ / stride(i); }
  const std::vector<int>& strides() const { return strides_; }
  const std::vector<double>& gains() const { return gains_; }

 private:
  int image_w_, image_h_;
  std::vector<int> strides_;
  std::vector<double> gains_;
};

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

// Distances from the cell corners to the box sides, in grid units of one
// pyramid level: left/top measured from the cell's bottom-right corner,
// right/bottom from its top-left corner.
struct RegressionTarget {
  double left = 0.0;
  double top = 0.0;
  double right = 0.0;
  double bottom = 0.0;
  std::size_t scale_index = 0;

  std::array<double, 4> values() const { return {left, top, right, bottom}; }
  static RegressionTarget from_values(const std::array<double, 4>& v,
                                      std::size_t scale_index);
  bool all_positive() const {
    return left > 0 && top > 0 && right > 0 && bottom > 0;
  }
};

// Raw head outputs for the four distances, before the squared-sigmoid decode.
struct RawPrediction {
  std::array<double, 4> logits{};
  std::size_t scale_index = 0;
};

double sigmoid(double z);
double logit(double p);

// Cell containing the box center at one level: (floor(cx/s), floor(cy/s)).
Cell center_cell(const BoundingBox& box, const ScaleConfig& scale,
                 std::size_t scale_index);

// Corner-distance formula evaluated for an arbitrary cell, with no sign check.
RegressionTarget cell_distances(const BoundingBox& box, Cell cell,
                                const ScaleConfig& scale,
                                std::size_t scale_index);

// As cell_distances, but throws GeometryError when any distance is <= 0,
// i.e. the cell cannot regress this box.
RegressionTarget encode(const BoundingBox& box, Cell cell,
                        const ScaleConfig& scale, std::size_t scale_index);

// d = (2 sigmoid(p))^2 * gain for each of the four logits.
double decode_distance(double logit_value, double gain);
// d d / d p for decode_distance.
double decode_slope(double logit_value, double gain);
RegressionTarget decode(const RawPrediction& raw, const ScaleConfig& scale);

// Exact inverse of decode. Throws RangeError if a component is outside the
// open interval (0, 4*gain).
RawPrediction encode_logit(const RegressionTarget& target,
                           const ScaleConfig& scale);

// Per-side pixel distance a level can express: the open interval (0, 4*gain*s).
std::pair<double, double> representable_range(const ScaleConfig& scale,
                                              std::size_t scale_index);
bool is_representable(const RegressionTarget& target, const ScaleConfig& scale);

// Pixel box described by distances relative to a cell. Empty when the
// implied width or height is not positive.
std::optional<CornerBox> cell_frame_box(const RegressionTarget& target, Cell cell,
                                        const ScaleConfig& scale);

}  // namespace objectbox
