#include "objectbox/infer.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "objectbox/errors.hpp"
#include "objectbox/format.hpp"

namespace objectbox {

namespace {

auto tie_key(const Detection& d) {
  return std::make_tuple(d.scale_index, d.cell.y, d.cell.x, d.quadrant, d.best_class());
}

template <class ScoreFn>
std::vector<Detection> sorted_by(std::span<const Detection> dets, ScoreFn score) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = score(dets[a]);
    const double sb = score(dets[b]);
    if (sa != sb) return sa > sb;
    return tie_key(dets[a]) < tie_key(dets[b]);
  });
  std::vector<Detection> out;
  out.reserve(dets.size());
  for (std::size_t i : order) out.push_back(dets[i]);
  return out;
}

}  // namespace

int Detection::best_class() const {
  if (class_scores.empty()) return 0;
  return static_cast<int>(std::max_element(class_scores.begin(), class_scores.end()) -
                          class_scores.begin());
}

double Detection::score() const {
  if (class_scores.empty()) return objectness;
  return objectness * *std::max_element(class_scores.begin(), class_scores.end());
}

PredictionGrid::PredictionGrid(const ScaleConfig& scale, std::size_t num_classes,
                               int predictions_per_cell)
    : num_classes_(num_classes), predictions_per_cell_(predictions_per_cell) {
  if (predictions_per_cell != 1 && predictions_per_cell != 4) {
    throw ConfigError("predictions_per_cell must be 1 or 4");
  }
  for (std::size_t i = 0; i < scale.num_scales(); ++i) {
    dims_.emplace_back(scale.grid_w(i), scale.grid_h(i));
    levels_.emplace_back(static_cast<std::size_t>(scale.grid_w(i)) * scale.grid_h(i) *
                             predictions_per_cell * channels(),
                         0.0);
  }
}

std::size_t PredictionGrid::offset(std::size_t scale_index, Cell cell, int slot) const {
  const auto [w, h] = dims_.at(scale_index);
  if (cell.x < 0 || cell.y < 0 || cell.x >= w || cell.y >= h || slot < 0 ||
      slot >= predictions_per_cell_) {
    throw ConfigError(fmt::format("cell ({}, {}) slot {} outside the {}x{} grid of scale {}",
                                  cell.x, cell.y, slot, w, h, scale_index));
  }
  return ((static_cast<std::size_t>(cell.y) * w + cell.x) * predictions_per_cell_ + slot) *
         channels();
}

std::span<double> PredictionGrid::at(std::size_t scale_index, Cell cell, int slot) {
  return std::span<double>(levels_.at(scale_index)).subspan(offset(scale_index, cell, slot),
                                                            channels());
}

std::span<const double> PredictionGrid::at(std::size_t scale_index, Cell cell,
                                           int slot) const {
  return std::span<const double>(levels_.at(scale_index))
      .subspan(offset(scale_index, cell, slot), channels());
}

void PredictionGrid::fill_objectness(double logit_value) {
  for (auto& level : levels_) {
    for (std::size_t i = 4; i < level.size(); i += channels()) level[i] = logit_value;
  }
}

DecodeResult decode_grid(const PredictionGrid& grid, const ScaleConfig& scale,
                         double conf_threshold) {
  if (grid.num_scales() != scale.num_scales()) {
    throw ConfigError(fmt::format("grid has {} levels, pyramid has {}", grid.num_scales(),
                                  scale.num_scales()));
  }
  DecodeResult result;
  for (std::size_t si = 0; si < scale.num_scales(); ++si) {
    if (grid.grid_w(si) != scale.grid_w(si) || grid.grid_h(si) != scale.grid_h(si)) {
      throw ConfigError(fmt::format("grid level {} is {}x{}, pyramid expects {}x{}", si,
                                    grid.grid_w(si), grid.grid_h(si), scale.grid_w(si),
                                    scale.grid_h(si)));
    }
    for (int y = 0; y < grid.grid_h(si); ++y) {
      for (int x = 0; x < grid.grid_w(si); ++x) {
        for (int slot = 0; slot < grid.predictions_per_cell(); ++slot) {
          const auto ch = grid.at(si, Cell{x, y}, slot);
          const double obj = sigmoid(ch[4]);
          if (!(obj >= conf_threshold)) continue;
          const RegressionTarget d =
              decode(RawPrediction{{ch[0], ch[1], ch[2], ch[3]}, si}, scale);
          const auto box = cell_frame_box(d, Cell{x, y}, scale);
          if (!box) {
            ++result.dropped_degenerate;
            continue;
          }
          Detection det{*box, obj, {}, si, Cell{x, y}, slot};
          det.class_scores.reserve(grid.num_classes());
          for (std::size_t c = 0; c < grid.num_classes(); ++c) {
            det.class_scores.push_back(sigmoid(ch[5 + c]));
          }
          result.detections.push_back(std::move(det));
        }
      }
    }
  }
  result.detections =
      sorted_by(result.detections, [](const Detection& d) { return d.objectness; });
  return result;
}

std::vector<Detection> rank_detections(std::span<const Detection> dets) {
  return sorted_by(dets, [](const Detection& d) { return d.score(); });
}

std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold) {
  std::map<int, std::vector<CornerBox>> kept_by_class;
  std::vector<Detection> kept;
  for (const Detection& d : rank_detections(dets)) {
    auto& same_class = kept_by_class[d.best_class()];
    const bool suppressed = std::any_of(
        same_class.begin(), same_class.end(),
        [&](const CornerBox& k) { return iou_oracle(k, d.box) > iou_threshold; });
    if (suppressed) continue;
    same_class.push_back(d.box);
    kept.push_back(d);
  }
  return kept;
}

std::string detection_to_json_line(const Detection& det) {
  nlohmann::ordered_json j;
  j["x1"] = round_for_output(det.box.x1());
  j["y1"] = round_for_output(det.box.y1());
  j["x2"] = round_for_output(det.box.x2());
  j["y2"] = round_for_output(det.box.y2());
  j["score"] = round_for_output(det.score());
  j["class"] = det.best_class();
  j["scale"] = det.scale_index;
  return j.dump();
}

std::vector<Detection> read_detection_lines(std::istream& in, const std::string& source) {
  std::vector<Detection> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::string where = fmt::format("{}:{}", source, line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(fmt::format("{}: invalid JSON ({})", where, e.what()));
    }
    auto number = [&](const char* key) {
      if (!j.is_object() || !j.contains(key) || !j[key].is_number()) {
        throw ParseError(fmt::format("{}: missing or non-numeric field '{}'", where, key));
      }
      return j[key].get<double>();
    };
    const double score = number("score");
    const double cls = number("class");
    const double scale_index = number("scale");
    if (!(score >= 0.0 && score <= 1.0)) {
      throw ParseError(fmt::format("{}: score {} outside [0, 1]", where, score));
    }
    if (cls < 0 || cls != std::floor(cls) || scale_index < 0 ||
        scale_index != std::floor(scale_index)) {
      throw ParseError(fmt::format("{}: class and scale must be non-negative integers", where));
    }
    const double x1 = number("x1"), y1 = number("y1"), x2 = number("x2"), y2 = number("y2");
    if (!(x2 > x1) || !(y2 > y1)) {
      throw ParseError(fmt::format("{}: degenerate box", where));
    }
    Detection d{CornerBox(x1, y1, x2, y2), score,
                std::vector<double>(static_cast<std::size_t>(cls) + 1, 0.0),
                static_cast<std::size_t>(scale_index), Cell{}, 0};
    d.class_scores.back() = 1.0;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace objectbox
