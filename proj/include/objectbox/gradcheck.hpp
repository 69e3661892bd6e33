#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>

#include "objectbox/codec.hpp"
#include "objectbox/loss.hpp"

namespace objectbox {

// Central differences (f(x + h e_k) - f(x - h e_k)) / 2h for each coordinate.
Gradient4 central_difference(const std::function<double(const std::array<double, 4>&)>& f,
                             const std::array<double, 4>& x, double step = 1e-6);

// ||a - b|| / max(||a||, ||b||, floor). The floor keeps near-zero gradients
// (saturated logits) from amplifying finite-difference round-off.
double relative_error(const Gradient4& a, const Gradient4& b, double floor = 1e-8);

// Distance from (pred, truth) to the nearest point where the loss switches
// branch: a min/max tie on any side or a zero overlap width/height.
double switch_distance(const RegressionTarget& pred, const RegressionTarget& truth);

struct GradcheckOptions {
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  double step = 1e-6;
  double tolerance = 1e-5;
  double switch_margin = 1e-3;
  LossConfig loss;
};

struct GradcheckReport {
  std::size_t samples = 0;
  std::size_t redrawn_near_switch = 0;
  std::size_t failures = 0;
  double worst_distance_rel_err = 0.0;
  double worst_logit_rel_err = 0.0;
  bool passed() const { return samples > 0 && failures == 0; }
  double worst() const {
    return worst_distance_rel_err > worst_logit_rel_err ? worst_distance_rel_err
                                                        : worst_logit_rel_err;
  }
};

// Draws random (pred, truth) pairs away from branch switches and compares the
// analytic distance and logit gradients of the configured loss against
// central differences. Throws ConfigError for zero samples.
GradcheckReport run_gradcheck(const GradcheckOptions& options, const ScaleConfig& scale);

}  // namespace objectbox
