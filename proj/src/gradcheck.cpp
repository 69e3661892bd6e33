#include "objectbox/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "objectbox/errors.hpp"
#include "objectbox/random.hpp"

namespace objectbox {

namespace {

double norm(const Gradient4& g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

}  // namespace

Gradient4 central_difference(const std::function<double(const std::array<double, 4>&)>& f,
                             const std::array<double, 4>& x, double step) {
  Gradient4 g{};
  for (int k = 0; k < 4; ++k) {
    auto hi = x;
    auto lo = x;
    hi[k] += step;
    lo[k] -= step;
    g[k] = (f(hi) - f(lo)) / (2.0 * step);
  }
  return g;
}

double relative_error(const Gradient4& a, const Gradient4& b, double floor) {
  Gradient4 d{};
  for (int k = 0; k < 4; ++k) d[k] = a[k] - b[k];
  return norm(d) / std::max({norm(a), norm(b), floor});
}

double switch_distance(const RegressionTarget& pred, const RegressionTarget& truth) {
  const auto p = pred.values();
  const auto t = truth.values();
  double dist = INFINITY;
  for (int k = 0; k < 4; ++k) dist = std::min(dist, std::abs(p[k] - t[k]));
  const double wI = std::min(t[0], p[0]) + std::min(t[2], p[2]) - 1.0;
  const double hI = std::min(t[1], p[1]) + std::min(t[3], p[3]) - 1.0;
  // Where the predicted box itself collapses (baseline losses hold it at a floor).
  const double pw = p[0] + p[2] - 1.0;
  const double ph = p[1] + p[3] - 1.0;
  return std::min({dist, std::abs(wI), std::abs(hI), std::abs(pw), std::abs(ph)});
}

GradcheckReport run_gradcheck(const GradcheckOptions& options, const ScaleConfig& scale) {
  if (options.samples == 0) throw ConfigError("gradcheck needs at least one sample");
  options.loss.validate();
  Rng rng(options.seed);
  GradcheckReport report;
  const double max_side = std::min(scale.image_w(), scale.image_h()) / 2.0;

  while (report.samples < options.samples) {
    const std::size_t si = rng.below(scale.num_scales());
    const BoundingBox box(rng.uniform(1.0, scale.image_w() - 1.0),
                          rng.uniform(1.0, scale.image_h() - 1.0),
                          rng.uniform(2.0, max_side), rng.uniform(2.0, max_side));
    const RegressionTarget truth = encode(box, center_cell(box, scale, si), scale, si);

    RawPrediction raw;
    raw.scale_index = si;
    for (auto& p : raw.logits) p = rng.uniform(-3.0, 3.0);
    const RegressionTarget pred = decode(raw, scale);

    // Logit steps move the distances by at most slope * step, far below the
    // margin, so one check covers both gradients.
    if (switch_distance(pred, truth) < options.switch_margin) {
      ++report.redrawn_near_switch;
      continue;
    }
    ++report.samples;

    const auto distance_loss = [&](const std::array<double, 4>& d) {
      return regression_loss(RegressionTarget::from_values(d, si), truth, options.loss);
    };
    const auto logit_loss = [&](const std::array<double, 4>& z) {
      return regression_loss(decode(RawPrediction{z, si}, scale), truth, options.loss);
    };

    const double e_dist =
        relative_error(regression_grad(pred, truth, options.loss),
                       central_difference(distance_loss, pred.values(), options.step));
    const double e_logit =
        relative_error(regression_logit_grad(raw, truth, scale, options.loss),
                       central_difference(logit_loss, raw.logits, options.step));
    report.worst_distance_rel_err = std::max(report.worst_distance_rel_err, e_dist);
    report.worst_logit_rel_err = std::max(report.worst_logit_rel_err, e_logit);
    if (!(e_dist < options.tolerance) || !(e_logit < options.tolerance)) ++report.failures;
  }
  return report;
}

}  // namespace objectbox
