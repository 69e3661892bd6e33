#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "objectbox/codec.hpp"
#include "objectbox/scene.hpp"

namespace objectbox {

// Which cells regress an object at each pyramid level.
enum class LocationStrategy {
  center,                     // the cell containing the box center
  aug_center,                 // center cell plus up to two neighbours
  h_centers,                  // cells of the center-to-corner midpoints
  aug_center_plus_h_centers,
  four_corners,               // cells containing the four box corners
  four_corners_plus_center,
};

std::string_view to_string(LocationStrategy s);
// Throws ConfigError listing the valid names.
LocationStrategy parse_location_strategy(std::string_view name);

enum class RecordRole { center, neighbor, h_center, corner };
std::string_view to_string(RecordRole r);

struct AssignMode {
  LocationStrategy strategy = LocationStrategy::aug_center;
  // Size limits m_0 < m_1 < ... < m_n in pixels, one more entry than there are
  // scales, starting at 0 and ending at +inf. Empty means no constraint.
  std::optional<std::vector<double>> scale_thresholds;
  // 1, or 4 for one prediction per 2x2 sub-quadrant of a cell.
  int predictions_per_cell = 1;

  void validate(std::size_t num_scales) const;
};

// The four threshold sets of the size-constraint ablation.
std::vector<std::vector<double>> scale_threshold_presets();

// One positive training sample.
struct AssignmentRecord {
  std::size_t object_id = 0;
  int class_id = 0;
  std::size_t scale_index = 0;
  Cell cell;
  // Sub-quadrant (0..3, row-major) when predictions_per_cell == 4, else 0.
  int quadrant = 0;
  RecordRole role = RecordRole::center;
  RegressionTarget target;
  BoundingBox box;
};

// Emits positive samples for every object at every level. Records are ordered
// by object, then scale, then role. Center records always carry strictly
// positive targets; a neighbour or corner cell of an object smaller than one
// stride can carry a non-positive distance (see RegressionTarget::all_positive).
// Throws GeometryError for a center on or outside the image border.
std::vector<AssignmentRecord> assign(std::span<const SceneObject> objects,
                                     const ScaleConfig& scale,
                                     const AssignMode& mode = {});

// Drops a record at scale i when the object's longer side is below m_i or
// above m_{i+1}. Identity for empty thresholds.
std::vector<AssignmentRecord> apply_scale_constraints(
    std::span<const AssignmentRecord> records,
    const std::optional<std::vector<double>>& thresholds);

std::map<std::size_t, std::size_t> positives_per_object(
    std::span<const AssignmentRecord> records);

struct CenterCollision {
  Cell cell;
  std::vector<std::size_t> object_ids;
};

struct ScaleCollisions {
  std::size_t scale_index = 0;
  std::vector<CenterCollision> collisions;
};

// Per scale: center cells shared by two or more objects whose boxes overlap.
std::vector<ScaleCollisions> center_collision_audit(
    std::span<const SceneObject> objects, const ScaleConfig& scale);

}  // namespace objectbox
