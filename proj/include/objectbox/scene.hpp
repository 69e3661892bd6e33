#pragma once

#include <string>
#include <vector>

#include "objectbox/geom.hpp"

namespace objectbox {

struct SceneObject {
  BoundingBox box;
  int class_id = 0;
};

// One annotated image: its pixel size and the labelled boxes in it.
struct Scene {
  int image_w = 0;
  int image_h = 0;
  std::vector<SceneObject> objects;
  std::string source_id;
};

}  // namespace objectbox
