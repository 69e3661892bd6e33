#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "objectbox/codec.hpp"
#include "objectbox/geom.hpp"

namespace objectbox {

inline constexpr double kDefaultConfThreshold = 0.001;
inline constexpr double kDefaultNmsThreshold = 0.6;

struct Detection {
  CornerBox box;  // pixels
  double objectness = 0.0;
  std::vector<double> class_scores;
  std::size_t scale_index = 0;
  Cell cell;
  int quadrant = 0;

  int best_class() const;
  // objectness * max class probability; objectness alone without classes.
  double score() const;
};

// Raw head outputs for every level. Level i is a dense row-major array of
// shape grid_h x grid_w x predictions_per_cell x (num_classes + 5) with the
// channel order [p0, p1, p2, p3, objectness, class_0 .. class_{m-1}].
class PredictionGrid {
 public:
  PredictionGrid(const ScaleConfig& scale, std::size_t num_classes,
                 int predictions_per_cell = 1);

  std::size_t num_scales() const { return levels_.size(); }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t channels() const { return num_classes_ + 5; }
  int predictions_per_cell() const { return predictions_per_cell_; }
  int grid_w(std::size_t i) const { return dims_.at(i).first; }
  int grid_h(std::size_t i) const { return dims_.at(i).second; }

  std::span<double> at(std::size_t scale_index, Cell cell, int slot = 0);
  std::span<const double> at(std::size_t scale_index, Cell cell, int slot = 0) const;
  std::span<double> level(std::size_t scale_index) { return levels_.at(scale_index); }
  std::span<const double> level(std::size_t scale_index) const {
    return levels_.at(scale_index);
  }
  // Sets every objectness logit, e.g. to -inf for an empty grid.
  void fill_objectness(double logit_value);

 private:
  std::size_t offset(std::size_t scale_index, Cell cell, int slot) const;

  std::size_t num_classes_;
  int predictions_per_cell_;
  std::vector<std::pair<int, int>> dims_;
  std::vector<std::vector<double>> levels_;
};

struct DecodeResult {
  std::vector<Detection> detections;  // descending objectness
  std::size_t dropped_degenerate = 0;
};

// Confidence filter on sigmoid(objectness) >= conf_threshold, distance decode,
// and reconstruction of pixel boxes from the cell corners. Throws ConfigError if
// the grid does not match the pyramid.
DecodeResult decode_grid(const PredictionGrid& grid, const ScaleConfig& scale,
                         double conf_threshold = kDefaultConfThreshold);

// Orders by descending score with ties broken by (scale, cell y, cell x,
// quadrant, class); input order settles anything left.
std::vector<Detection> rank_detections(std::span<const Detection> dets);

// Greedy class-wise suppression: a detection is dropped when a kept detection
// of the same class overlaps it with IoU > iou_threshold. Output is in rank
// order.
std::vector<Detection> nms(std::span<const Detection> dets,
                           double iou_threshold = kDefaultNmsThreshold);

// Line-oriented JSON: one {"x1","y1","x2","y2","score","class","scale"} object
// per line. Lines starting with '#' are comments.
std::string detection_to_json_line(const Detection& det);
// A detection read back from its line form carries the score as objectness and
// a one-hot class vector. Throws ParseError naming the source and line.
std::vector<Detection> read_detection_lines(std::istream& in, const std::string& source);

}  // namespace objectbox
