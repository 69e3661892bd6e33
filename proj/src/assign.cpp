#include "objectbox/assign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "objectbox/errors.hpp"

namespace objectbox {

namespace {

constexpr std::pair<LocationStrategy, std::string_view> kStrategyNames[] = {
    {LocationStrategy::center, "center"},
    {LocationStrategy::aug_center, "aug_center"},
    {LocationStrategy::h_centers, "h_centers"},
    {LocationStrategy::aug_center_plus_h_centers, "aug_center_plus_h_centers"},
    {LocationStrategy::four_corners, "four_corners"},
    {LocationStrategy::four_corners_plus_center, "four_corners_plus_center"},
};

bool uses_center(LocationStrategy s) {
  return s == LocationStrategy::center || s == LocationStrategy::aug_center ||
         s == LocationStrategy::aug_center_plus_h_centers ||
         s == LocationStrategy::four_corners_plus_center;
}

bool uses_neighbors(LocationStrategy s) {
  return s == LocationStrategy::aug_center ||
         s == LocationStrategy::aug_center_plus_h_centers;
}

bool uses_h_centers(LocationStrategy s) {
  return s == LocationStrategy::h_centers ||
         s == LocationStrategy::aug_center_plus_h_centers;
}

bool uses_corners(LocationStrategy s) {
  return s == LocationStrategy::four_corners ||
         s == LocationStrategy::four_corners_plus_center;
}

Cell cell_of_point(double x, double y, double stride) {
  return Cell{static_cast<int>(std::floor(x / stride)),
              static_cast<int>(std::floor(y / stride))};
}

bool in_grid(Cell c, const ScaleConfig& scale, std::size_t i) {
  return c.x >= 0 && c.y >= 0 && c.x < scale.grid_w(i) && c.y < scale.grid_h(i);
}

// Quadrant nearest the box center, relative to the record's own cell.
int quadrant_of(const BoundingBox& box, Cell cell, double stride) {
  const double fx = box.cx() / stride - cell.x;
  const double fy = box.cy() / stride - cell.y;
  return (fx >= 0.5 ? 1 : 0) + (fy >= 0.5 ? 2 : 0);
}

}  // namespace

std::string_view to_string(LocationStrategy s) {
  for (const auto& [value, name] : kStrategyNames) {
    if (value == s) return name;
  }
  return "unknown";
}

LocationStrategy parse_location_strategy(std::string_view name) {
  for (const auto& [value, n] : kStrategyNames) {
    if (n == name) return value;
  }
  std::string valid;
  for (const auto& entry : kStrategyNames) {
    if (!valid.empty()) valid += ", ";
    valid += entry.second;
  }
  throw ConfigError(fmt::format("unknown assignment mode '{}' (valid: {})", name, valid));
}

std::string_view to_string(RecordRole r) {
  switch (r) {
    case RecordRole::center: return "center";
    case RecordRole::neighbor: return "neighbor";
    case RecordRole::h_center: return "h_center";
    case RecordRole::corner: return "corner";
  }
  return "unknown";
}

void AssignMode::validate(std::size_t num_scales) const {
  if (predictions_per_cell != 1 && predictions_per_cell != 4) {
    throw ConfigError(fmt::format("predictions_per_cell must be 1 or 4, got {}",
                                  predictions_per_cell));
  }
  if (!scale_thresholds) return;
  const auto& m = *scale_thresholds;
  if (m.size() != num_scales + 1) {
    throw ConfigError(fmt::format("{} scale thresholds given, need {} for {} scales",
                                  m.size(), num_scales + 1, num_scales));
  }
  if (m.front() != 0.0) throw ConfigError("scale thresholds must start at 0");
  if (!std::isinf(m.back()) || m.back() < 0) {
    throw ConfigError("scale thresholds must end at infinity");
  }
  for (std::size_t i = 1; i < m.size(); ++i) {
    if (!(m[i] > m[i - 1])) {
      throw ConfigError("scale thresholds must be strictly increasing");
    }
  }
}

std::vector<std::vector<double>> scale_threshold_presets() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {{0, 32, 64, inf}, {0, 64, 128, inf}, {0, 128, 256, inf}, {0, 256, 512, inf}};
}

std::vector<AssignmentRecord> assign(std::span<const SceneObject> objects,
                                     const ScaleConfig& scale,
                                     const AssignMode& mode) {
  mode.validate(scale.num_scales());
  std::vector<AssignmentRecord> out;

  for (std::size_t id = 0; id < objects.size(); ++id) {
    const BoundingBox& box = objects[id].box;
    if (!(box.cx() > 0.0 && box.cx() < scale.image_w() && box.cy() > 0.0 &&
          box.cy() < scale.image_h())) {
      throw GeometryError(fmt::format(
          "object {} center ({}, {}) is not strictly inside the {}x{} image", id,
          box.cx(), box.cy(), scale.image_w(), scale.image_h()));
    }
    const CornerBox corners = to_corner(box);

    for (std::size_t si = 0; si < scale.num_scales(); ++si) {
      const double s = scale.stride(si);
      std::vector<std::pair<Cell, RecordRole>> cells;
      auto add = [&](Cell c, RecordRole role) {
        if (!in_grid(c, scale, si)) return;
        for (const auto& existing : cells) {
          if (existing.first == c) return;
        }
        cells.emplace_back(c, role);
      };

      const Cell center = center_cell(box, scale, si);
      if (uses_center(mode.strategy)) add(center, RecordRole::center);
      if (uses_neighbors(mode.strategy)) {
        // Strict inequality: a center on a cell midline adds no neighbour on
        // that axis.
        const double fx = box.cx() / s - center.x;
        const double fy = box.cy() / s - center.y;
        if (fx < 0.5) add(Cell{center.x - 1, center.y}, RecordRole::neighbor);
        if (fx > 0.5) add(Cell{center.x + 1, center.y}, RecordRole::neighbor);
        if (fy < 0.5) add(Cell{center.x, center.y - 1}, RecordRole::neighbor);
        if (fy > 0.5) add(Cell{center.x, center.y + 1}, RecordRole::neighbor);
      }
      if (uses_h_centers(mode.strategy)) {
        add(cell_of_point((box.cx() + corners.x1()) / 2, (box.cy() + corners.y1()) / 2, s),
            RecordRole::h_center);
        add(cell_of_point((box.cx() + corners.x2()) / 2, (box.cy() + corners.y2()) / 2, s),
            RecordRole::h_center);
      }
      if (uses_corners(mode.strategy)) {
        add(cell_of_point(corners.x1(), corners.y1(), s), RecordRole::corner);
        add(cell_of_point(corners.x2(), corners.y1(), s), RecordRole::corner);
        add(cell_of_point(corners.x1(), corners.y2(), s), RecordRole::corner);
        add(cell_of_point(corners.x2(), corners.y2(), s), RecordRole::corner);
      }

      for (const auto& [cell, role] : cells) {
        out.push_back(AssignmentRecord{
            .object_id = id,
            .class_id = objects[id].class_id,
            .scale_index = si,
            .cell = cell,
            .quadrant = mode.predictions_per_cell == 4 ? quadrant_of(box, cell, s) : 0,
            .role = role,
            .target = cell_distances(box, cell, scale, si),
            .box = box,
        });
      }
    }
  }
  if (mode.scale_thresholds) return apply_scale_constraints(out, mode.scale_thresholds);
  return out;
}

std::vector<AssignmentRecord> apply_scale_constraints(
    std::span<const AssignmentRecord> records,
    const std::optional<std::vector<double>>& thresholds) {
  if (!thresholds) return {records.begin(), records.end()};
  const auto& m = *thresholds;
  std::vector<AssignmentRecord> out;
  for (const auto& r : records) {
    if (r.scale_index + 1 >= m.size()) {
      throw ConfigError(fmt::format("no threshold pair for scale {}", r.scale_index));
    }
    const double side = std::max(r.box.w(), r.box.h());
    if (side < m[r.scale_index] || side > m[r.scale_index + 1]) continue;
    out.push_back(r);
  }
  return out;
}

std::map<std::size_t, std::size_t> positives_per_object(
    std::span<const AssignmentRecord> records) {
  std::map<std::size_t, std::size_t> counts;
  for (const auto& r : records) ++counts[r.object_id];
  return counts;
}

std::vector<ScaleCollisions> center_collision_audit(std::span<const SceneObject> objects,
                                                    const ScaleConfig& scale) {
  std::vector<ScaleCollisions> report;
  for (std::size_t si = 0; si < scale.num_scales(); ++si) {
    std::map<Cell, std::vector<std::size_t>> by_cell;
    for (std::size_t id = 0; id < objects.size(); ++id) {
      by_cell[center_cell(objects[id].box, scale, si)].push_back(id);
    }
    ScaleCollisions entry{si, {}};
    for (const auto& [cell, ids] : by_cell) {
      if (ids.size() < 2) continue;
      std::vector<std::size_t> overlapping;
      for (std::size_t a : ids) {
        const CornerBox ca = to_corner(objects[a].box);
        for (std::size_t b : ids) {
          if (a != b && iou_oracle(ca, to_corner(objects[b].box)) > 0.0) {
            overlapping.push_back(a);
            break;
          }
        }
      }
      if (overlapping.size() >= 2) entry.collisions.push_back({cell, std::move(overlapping)});
    }
    report.push_back(std::move(entry));
  }
  return report;
}

}  // namespace objectbox
