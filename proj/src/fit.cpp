#include "objectbox/fit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include <fmt/format.h>

#include "objectbox/errors.hpp"
#include "objectbox/format.hpp"
#include "objectbox/random.hpp"

namespace objectbox {

namespace {

using SlotKey = std::tuple<std::size_t, int, int, int>;  // scale, y, x, quadrant

struct TrainRecord {
  const AssignmentRecord* record;
  std::size_t slot;
};

// Parameters of one prediction slot.
struct Slot {
  std::size_t scale_index = 0;
  Cell cell;
  std::array<double, 4> box_logits{};
  double obj_logit = 0.0;
  std::vector<double> cls_logits;
  std::vector<double> cls_labels;
};

double decoded_iou(const Slot& slot, const AssignmentRecord& rec, const ScaleConfig& scale) {
  const RegressionTarget d = decode(RawPrediction{slot.box_logits, rec.scale_index}, scale);
  const auto box = cell_frame_box(d, rec.cell, scale);
  if (!box || !(box->area() > 0.0)) return 0.0;
  return iou_oracle(*box, to_corner(rec.box));
}

}  // namespace

void SceneSpec::validate() const {
  if (image_w <= 0 || image_h <= 0) throw ConfigError("scene image size must be positive");
  if (!(min_size > 0.0)) throw ConfigError("scene min_size must be > 0");
  if (!(min_size <= max_size)) {
    throw ConfigError(fmt::format("scene size bounds are empty (min {} > max {})", min_size,
                                  max_size));
  }
  if (num_classes <= 0) throw ConfigError("scene needs at least one class");
}

Scene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Scene scene;
  scene.image_w = spec.image_w;
  scene.image_h = spec.image_h;
  scene.source_id = fmt::format("synthetic-{}", seed);
  auto interior = [&rng](double extent) {
    double v = 0.0;
    while (!(v > 0.0 && v < extent)) v = rng.uniform(0.0, extent);
    return v;
  };
  for (std::size_t i = 0; i < spec.object_count; ++i) {
    const double cx = interior(spec.image_w);
    const double cy = interior(spec.image_h);
    const double w = rng.uniform(spec.min_size, spec.max_size);
    const double h = rng.uniform(spec.min_size, spec.max_size);
    const int cls = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.num_classes)));
    scene.objects.push_back(SceneObject{BoundingBox(cx, cy, w, h), cls});
  }
  return scene;
}

void FitConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be > 0");
  }
  loss.validate();
  scene.validate();
  // Some level must be able to express half the largest box plus a cell.
  const ScaleConfig probe =
      ScaleConfig::padded_for_image(scene.image_w, scene.image_h, strides, gains);
  bool representable = false;
  for (std::size_t i = 0; i < probe.num_scales(); ++i) {
    const auto [lo, hi] = representable_range(probe, i);
    if (scene.max_size / 2.0 + probe.stride(i) < hi) representable = true;
  }
  if (!representable) {
    throw ConfigError(fmt::format("objects up to {} px are not representable at any scale",
                                  scene.max_size));
  }
}

FitReport fit_scene(const Scene& scene, const FitConfig& cfg) {
  cfg.loss.validate();
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  const ScaleConfig scale =
      ScaleConfig::padded_for_image(scene.image_w, scene.image_h, cfg.strides, cfg.gains);
  const std::vector<AssignmentRecord> records = assign(scene.objects, scale, cfg.mode);

  int num_classes = 1;
  for (const auto& o : scene.objects) num_classes = std::max(num_classes, o.class_id + 1);

  std::vector<Slot> slots;
  std::map<SlotKey, std::size_t> slot_index;
  auto slot_for = [&](std::size_t si, Cell c, int q) {
    const SlotKey key{si, c.y, c.x, q};
    auto it = slot_index.find(key);
    if (it != slot_index.end()) return it->second;
    Slot s;
    s.scale_index = si;
    s.cell = c;
    if (cfg.multitask) {
      s.cls_logits.assign(num_classes, 0.0);
      s.cls_labels.assign(num_classes, 0.0);
    }
    slots.push_back(std::move(s));
    slot_index.emplace(key, slots.size() - 1);
    return slots.size() - 1;
  };

  FitReport report;
  report.loss_kind = cfg.loss.kind;
  report.steps = cfg.steps;
  report.learning_rate = cfg.learning_rate;

  std::vector<TrainRecord> train;
  for (const auto& r : records) {
    if (!is_representable(r.target, scale)) {
      ++report.skipped_records;
      continue;
    }
    const std::size_t s = slot_for(r.scale_index, r.cell, r.quadrant);
    if (cfg.multitask) slots[s].cls_labels[r.class_id] = 1.0;
    train.push_back({&r, s});
  }
  report.trained_records = train.size();

  // Objectness covers every slot of every level in multitask mode; cells
  // without a positive record are negatives.
  std::vector<std::vector<std::size_t>> obj_slots(scale.num_scales());
  std::vector<bool> slot_positive(slots.size(), true);
  if (cfg.multitask) {
    const int per_cell = cfg.mode.predictions_per_cell;
    for (std::size_t si = 0; si < scale.num_scales(); ++si) {
      for (int y = 0; y < scale.grid_h(si); ++y) {
        for (int x = 0; x < scale.grid_w(si); ++x) {
          for (int q = 0; q < per_cell; ++q) {
            const bool existed = slot_index.count(SlotKey{si, y, x, q}) > 0;
            const std::size_t s = slot_for(si, Cell{x, y}, q);
            if (!existed) slot_positive.push_back(false);
            obj_slots[si].push_back(s);
          }
        }
      }
    }
  }

  const std::size_t n_objects = scene.objects.size();
  report.objects.resize(n_objects);
  std::vector<bool> trained(n_objects, false);
  for (const auto& t : train) trained[t.record->object_id] = true;
  for (std::size_t i = 0; i < n_objects; ++i) {
    report.objects[i].object_id = i;
    report.objects[i].excluded = !trained[i];
    report.objects[i].scale_iou.assign(scale.num_scales(), std::nullopt);
  }

  std::vector<std::size_t> box_count(scale.num_scales(), 0);
  for (const auto& t : train) ++box_count[t.record->scale_index];

  for (std::size_t step = 0; step <= cfg.steps; ++step) {
    // Metrics for the current parameters.
    for (auto& o : report.objects) std::fill(o.scale_iou.begin(), o.scale_iou.end(), std::nullopt);
    std::vector<double> box_losses(train.size());
    for (std::size_t k = 0; k < train.size(); ++k) {
      const auto& rec = *train[k].record;
      const Slot& slot = slots[train[k].slot];
      box_losses[k] = regression_loss(
          decode(RawPrediction{slot.box_logits, rec.scale_index}, scale), rec.target, cfg.loss);
      auto& entry = report.objects[rec.object_id].scale_iou[rec.scale_index];
      entry = std::max(entry.value_or(0.0), decoded_iou(slot, rec, scale));
    }

    double total = 0.0;
    if (cfg.multitask) {
      std::vector<ScaleTerms> terms(scale.num_scales());
      for (std::size_t k = 0; k < train.size(); ++k) {
        terms[train[k].record->scale_index].box_losses.push_back(box_losses[k]);
      }
      for (std::size_t si = 0; si < scale.num_scales(); ++si) {
        for (std::size_t s : obj_slots[si]) {
          terms[si].obj_logits.push_back(slots[s].obj_logit);
          terms[si].obj_labels.push_back(slot_positive[s] ? 1.0 : 0.0);
          if (slot_positive[s]) {
            terms[si].cls_logits.insert(terms[si].cls_logits.end(), slots[s].cls_logits.begin(),
                                        slots[s].cls_logits.end());
            terms[si].cls_labels.insert(terms[si].cls_labels.end(), slots[s].cls_labels.begin(),
                                        slots[s].cls_labels.end());
          }
        }
      }
      total = multitask_loss(terms, cfg.loss).total;
    } else {
      for (double l : box_losses) total += l;
    }
    report.loss_trace.push_back(total);

    double iou_sum = 0.0;
    std::size_t iou_count = 0;
    bool all_090 = true, all_099 = true;
    for (auto& o : report.objects) {
      if (o.excluded) continue;
      o.best_iou = 0.0;
      for (const auto& v : o.scale_iou) o.best_iou = std::max(o.best_iou, v.value_or(0.0));
      if (!o.steps_to_iou_090 && o.best_iou >= 0.9) o.steps_to_iou_090 = step;
      if (!o.steps_to_iou_099 && o.best_iou >= 0.99) o.steps_to_iou_099 = step;
      all_090 = all_090 && o.steps_to_iou_090.has_value();
      all_099 = all_099 && o.steps_to_iou_099.has_value();
      iou_sum += o.best_iou;
      ++iou_count;
    }
    report.mean_best_iou_trace.push_back(iou_count ? iou_sum / iou_count : 0.0);
    if (iou_count && all_090 && !report.steps_to_iou_090) report.steps_to_iou_090 = step;
    if (iou_count && all_099 && !report.steps_to_iou_099) report.steps_to_iou_099 = step;

    if (step == cfg.steps) break;

    // Gradient step.
    std::vector<std::array<double, 4>> box_grad(slots.size(), std::array<double, 4>{});
    for (const auto& t : train) {
      const auto& rec = *t.record;
      const Slot& slot = slots[t.slot];
      Gradient4 g = regression_logit_grad(RawPrediction{slot.box_logits, rec.scale_index},
                                          rec.target, scale, cfg.loss);
      const double w = cfg.multitask ? cfg.loss.weight_box / box_count[rec.scale_index] : 1.0;
      for (int k = 0; k < 4; ++k) box_grad[t.slot][k] += w * g[k];
    }
    if (cfg.multitask) {
      for (std::size_t si = 0; si < scale.num_scales(); ++si) {
        std::size_t n_cls = 0;
        for (std::size_t s : obj_slots[si]) n_cls += slot_positive[s] ? slots[s].cls_logits.size() : 0;
        const double w_obj = cfg.loss.weight_obj / static_cast<double>(obj_slots[si].size());
        const double w_cls = n_cls ? cfg.loss.weight_cls / static_cast<double>(n_cls) : 0.0;
        for (std::size_t s : obj_slots[si]) {
          Slot& slot = slots[s];
          const double y = slot_positive[s] ? 1.0 : 0.0;
          slot.obj_logit -= cfg.learning_rate * w_obj * bce_logit_grad(slot.obj_logit, y);
          if (!slot_positive[s]) continue;
          for (std::size_t c = 0; c < slot.cls_logits.size(); ++c) {
            slot.cls_logits[c] -=
                cfg.learning_rate * w_cls * bce_logit_grad(slot.cls_logits[c], slot.cls_labels[c]);
          }
        }
      }
    }
    for (std::size_t s = 0; s < slots.size(); ++s) {
      for (int k = 0; k < 4; ++k) slots[s].box_logits[k] -= cfg.learning_rate * box_grad[s][k];
    }
  }

  std::size_t trained_objects = 0, succeeded = 0;
  for (const auto& o : report.objects) {
    if (o.excluded) continue;
    ++trained_objects;
    if (o.best_iou > 0.99) ++succeeded;
  }
  report.success_rate =
      trained_objects ? static_cast<double>(succeeded) / static_cast<double>(trained_objects) : 0.0;
  return report;
}

std::optional<double> median_steps(std::span<const std::optional<std::size_t>> values) {
  if (values.empty()) return std::nullopt;
  std::vector<double> v;
  for (const auto& x : values) v.push_back(x ? static_cast<double>(*x) : INFINITY);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const double m = n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
  if (std::isinf(m)) return std::nullopt;
  return m;
}

std::vector<ComparisonRow> compare_losses(std::span<const Scene> scenes, const FitConfig& cfg,
                                          std::span<const LossKind> kinds) {
  std::vector<ComparisonRow> rows;
  for (LossKind kind : kinds) {
    FitConfig c = cfg;
    c.loss.kind = kind;
    std::vector<std::optional<std::size_t>> s090, s099;
    ComparisonRow row;
    row.kind = kind;
    double iou_sum = 0.0;
    std::size_t iou_count = 0;
    for (const Scene& scene : scenes) {
      const FitReport r = fit_scene(scene, c);
      s090.push_back(r.steps_to_iou_090);
      s099.push_back(r.steps_to_iou_099);
      row.mean_success_rate += r.success_rate;
      for (const auto& o : r.objects) {
        if (o.excluded) continue;
        iou_sum += o.best_iou;
        ++iou_count;
      }
    }
    row.scenes = scenes.size();
    if (!scenes.empty()) row.mean_success_rate /= static_cast<double>(scenes.size());
    row.mean_final_iou = iou_count ? iou_sum / static_cast<double>(iou_count) : 0.0;
    row.median_steps_090 = median_steps(s090);
    row.median_steps_099 = median_steps(s099);
    rows.push_back(row);
  }
  return rows;
}

std::string fit_trace_csv(const FitReport& report) {
  std::string out = "step,loss,mean_best_iou\n";
  for (std::size_t t = 0; t < report.loss_trace.size(); ++t) {
    out += fmt::format("{},{},{}\n", t, format_number(report.loss_trace[t]),
                       format_number(report.mean_best_iou_trace[t]));
  }
  return out;
}

}  // namespace objectbox
