#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "objectbox/assign.hpp"
#include "objectbox/fit.hpp"
#include "objectbox/gradcheck.hpp"
#include "objectbox/ingest.hpp"

namespace objectbox {

using ordered_json = nlohmann::ordered_json;

// Numbers go through round_for_output; infinities become the strings "inf"
// and "-inf".
ordered_json number_json(double v);
ordered_json thresholds_json(const std::optional<std::vector<double>>& m);

ordered_json fit_report_json(const FitReport& report);
ordered_json comparison_json(std::span<const ComparisonRow> rows);
ordered_json gradcheck_json(const GradcheckReport& report);
ordered_json dataset_stats_json(const DatasetStats& stats);
ordered_json coco_counts_json(const CocoLoadResult& coco);

}  // namespace objectbox
