#include "objectbox/serialize.hpp"

#include <cmath>

#include "objectbox/format.hpp"

namespace objectbox {

namespace {

template <class T>
ordered_json optional_json(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_floating_point_v<T>) return number_json(*v);
  else return *v;
}

}  // namespace

ordered_json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return round_for_output(v);
}

ordered_json thresholds_json(const std::optional<std::vector<double>>& m) {
  if (!m) return nullptr;
  ordered_json out = ordered_json::array();
  for (double v : *m) out.push_back(number_json(v));
  return out;
}

ordered_json fit_report_json(const FitReport& report) {
  ordered_json j;
  j["loss"] = std::string(to_string(report.loss_kind));
  j["steps"] = report.steps;
  j["learning_rate"] = number_json(report.learning_rate);
  j["trained_records"] = report.trained_records;
  j["skipped_records"] = report.skipped_records;
  j["initial_loss"] = number_json(report.loss_trace.front());
  j["final_loss"] = number_json(report.loss_trace.back());
  j["steps_to_iou_0.9"] = optional_json(report.steps_to_iou_090);
  j["steps_to_iou_0.99"] = optional_json(report.steps_to_iou_099);
  j["success_rate"] = number_json(report.success_rate);
  ordered_json objects = ordered_json::array();
  for (const auto& o : report.objects) {
    ordered_json oj;
    oj["object"] = o.object_id;
    oj["excluded"] = o.excluded;
    ordered_json per_scale = ordered_json::array();
    for (const auto& v : o.scale_iou) per_scale.push_back(optional_json(v));
    oj["scale_iou"] = per_scale;
    oj["best_iou"] = number_json(o.best_iou);
    oj["steps_to_iou_0.9"] = optional_json(o.steps_to_iou_090);
    oj["steps_to_iou_0.99"] = optional_json(o.steps_to_iou_099);
    objects.push_back(oj);
  }
  j["objects"] = objects;
  return j;
}

ordered_json comparison_json(std::span<const ComparisonRow> rows) {
  ordered_json out = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json j;
    j["loss"] = std::string(to_string(r.kind));
    j["scenes"] = r.scenes;
    j["median_steps_to_iou_0.9"] = optional_json(r.median_steps_090);
    j["median_steps_to_iou_0.99"] = optional_json(r.median_steps_099);
    j["mean_success_rate"] = number_json(r.mean_success_rate);
    j["mean_final_iou"] = number_json(r.mean_final_iou);
    out.push_back(j);
  }
  return out;
}

ordered_json gradcheck_json(const GradcheckReport& report) {
  ordered_json j;
  j["samples"] = report.samples;
  j["redrawn_near_switch"] = report.redrawn_near_switch;
  j["failures"] = report.failures;
  j["worst_distance_rel_err"] = number_json(report.worst_distance_rel_err);
  j["worst_logit_rel_err"] = number_json(report.worst_logit_rel_err);
  j["worst_rel_err"] = number_json(report.worst());
  j["passed"] = report.passed();
  return j;
}

ordered_json dataset_stats_json(const DatasetStats& stats) {
  ordered_json j;
  j["scenes"] = stats.scenes;
  j["objects"] = stats.objects;
  j["records"] = stats.records;
  j["records_per_scale"] = stats.records_per_scale;
  ordered_json pos;
  pos["min"] = stats.min_positives;
  pos["median"] = number_json(stats.median_positives);
  pos["max"] = stats.max_positives;
  ordered_json hist = ordered_json::object();
  for (const auto& [count, n] : stats.positives_histogram) hist[std::to_string(count)] = n;
  pos["histogram"] = hist;
  j["positives_per_object"] = pos;
  j["objects_without_positives"] = stats.objects_without_positives;
  j["collisions_per_scale"] = stats.collisions_per_scale;
  return j;
}

ordered_json coco_counts_json(const CocoLoadResult& coco) {
  ordered_json j;
  j["images"] = coco.scenes.size();
  j["categories"] = coco.categories.size();
  j["annotations"] = coco.annotation_count;
  j["converted"] = coco.converted;
  ordered_json skipped;
  skipped["degenerate"] = coco.skipped_degenerate;
  skipped["center_outside"] = coco.skipped_outside;
  skipped["crowd"] = coco.skipped_crowd;
  skipped["total"] = coco.skipped();
  j["skipped"] = skipped;
  return j;
}

}  // namespace objectbox
