#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "objectbox/assign.hpp"
#include "objectbox/codec.hpp"
#include "objectbox/scene.hpp"

namespace objectbox {

struct CocoCategory {
  int id = 0;
  std::string name;
};

struct CocoLoadResult {
  std::vector<Scene> scenes;  // in file order of images[]
  std::vector<CocoCategory> categories;  // class_id indexes this list
  std::vector<int> image_ids;  // parallel to scenes
  std::size_t annotation_count = 0;
  std::size_t converted = 0;
  std::size_t skipped_degenerate = 0;  // w <= 0 or h <= 0
  std::size_t skipped_outside = 0;     // center not strictly inside the image
  std::size_t skipped_crowd = 0;
  std::size_t skipped() const {
    return skipped_degenerate + skipped_outside + skipped_crowd;
  }
};

// Reads an instances-format COCO file. Only image sizes, bboxes, category ids
// and iscrowd are used. Throws ParseError naming the path and field.
CocoLoadResult load_coco(const std::string& path);
CocoLoadResult parse_coco(const std::string& text, const std::string& source);

// [x_topleft, y_topleft, w, h].
std::array<double, 4> to_coco_bbox(const BoundingBox& box);
BoundingBox from_coco_bbox(const std::array<double, 4>& bbox);

struct DatasetStats {
  std::size_t scenes = 0;
  std::size_t objects = 0;
  std::size_t records = 0;
  std::vector<std::size_t> records_per_scale;
  std::size_t min_positives = 0;
  double median_positives = 0.0;
  std::size_t max_positives = 0;
  std::map<std::size_t, std::size_t> positives_histogram;  // count -> objects
  std::vector<std::size_t> collisions_per_scale;
  std::size_t objects_without_positives = 0;
};

// Each scene is mapped onto a pyramid padded to its own image size.
DatasetStats dataset_stats(std::span<const Scene> scenes, const std::vector<int>& strides,
                           const std::vector<double>& gains, const AssignMode& mode);

// Scene files used by the CLI:
// {"image_w": W, "image_h": H, "objects": [{"cx","cy","w","h","class"}, ...]}
Scene load_scene_file(const std::string& path);
Scene parse_scene(const std::string& text, const std::string& source);
std::string scene_to_json(const Scene& scene);

}  // namespace objectbox
