#include "objectbox/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "objectbox/errors.hpp"
#include "objectbox/format.hpp"

namespace objectbox {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("{}: cannot open file", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: invalid JSON ({})", source, e.what()));
  }
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError(fmt::format("{}: missing field '{}'", where, key));
  }
  return obj[key];
}

const json& array_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_array()) throw ParseError(fmt::format("{}: field '{}' is not an array", where, key));
  return v;
}

double number(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number()) throw ParseError(fmt::format("{}: field '{}' is not a number", where, key));
  return v.get<double>();
}

int integer(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number_integer()) {
    throw ParseError(fmt::format("{}: field '{}' is not an integer", where, key));
  }
  return v.get<int>();
}

bool strictly_inside(const BoundingBox& b, int w, int h) {
  return b.cx() > 0.0 && b.cx() < w && b.cy() > 0.0 && b.cy() < h;
}

}  // namespace

std::array<double, 4> to_coco_bbox(const BoundingBox& box) {
  return {box.cx() - box.w() / 2, box.cy() - box.h() / 2, box.w(), box.h()};
}

BoundingBox from_coco_bbox(const std::array<double, 4>& bbox) {
  return BoundingBox(bbox[0] + bbox[2] / 2, bbox[1] + bbox[3] / 2, bbox[2], bbox[3]);
}

CocoLoadResult load_coco(const std::string& path) { return parse_coco(read_file(path), path); }

CocoLoadResult parse_coco(const std::string& text, const std::string& source) {
  const json root = parse_json(text, source);
  CocoLoadResult out;

  const json& cats = array_field(root, "categories", source);
  std::unordered_map<int, int> class_of_category;
  std::unordered_set<int> seen;
  for (std::size_t i = 0; i < cats.size(); ++i) {
    const std::string where = fmt::format("{}: categories[{}]", source, i);
    CocoCategory c{integer(cats[i], "id", where), ""};
    if (cats[i].contains("name") && cats[i]["name"].is_string()) {
      c.name = cats[i]["name"].get<std::string>();
    }
    if (!seen.insert(c.id).second) {
      throw ParseError(fmt::format("{}: duplicate category id {}", where, c.id));
    }
    out.categories.push_back(c);
  }
  std::sort(out.categories.begin(), out.categories.end(),
            [](const CocoCategory& a, const CocoCategory& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < out.categories.size(); ++i) {
    class_of_category[out.categories[i].id] = static_cast<int>(i);
  }

  const json& images = array_field(root, "images", source);
  std::unordered_map<int, std::size_t> scene_of_image;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = fmt::format("{}: images[{}]", source, i);
    Scene s;
    const int id = integer(images[i], "id", where);
    s.image_w = integer(images[i], "width", where);
    s.image_h = integer(images[i], "height", where);
    if (s.image_w <= 0 || s.image_h <= 0) {
      throw ParseError(fmt::format("{}: non-positive image size", where));
    }
    s.source_id = images[i].contains("file_name") && images[i]["file_name"].is_string()
                      ? images[i]["file_name"].get<std::string>()
                      : std::to_string(id);
    if (!scene_of_image.emplace(id, out.scenes.size()).second) {
      throw ParseError(fmt::format("{}: duplicate image id {}", where, id));
    }
    out.scenes.push_back(std::move(s));
    out.image_ids.push_back(id);
  }

  const json& anns = array_field(root, "annotations", source);
  out.annotation_count = anns.size();
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const std::string where = fmt::format("{}: annotations[{}]", source, i);
    const json& a = anns[i];
    const int image_id = integer(a, "image_id", where);
    const int category_id = integer(a, "category_id", where);
    const json& bbox = field(a, "bbox", where);
    if (!bbox.is_array() || bbox.size() != 4 ||
        !std::all_of(bbox.begin(), bbox.end(), [](const json& v) { return v.is_number(); })) {
      throw ParseError(fmt::format("{}: field 'bbox' must be 4 numbers", where));
    }
    const auto scene_it = scene_of_image.find(image_id);
    if (scene_it == scene_of_image.end()) {
      throw ParseError(fmt::format("{}: field 'image_id' {} names no image", where, image_id));
    }
    const auto cls_it = class_of_category.find(category_id);
    if (cls_it == class_of_category.end()) {
      throw ParseError(
          fmt::format("{}: field 'category_id' {} names no category", where, category_id));
    }
    if (a.contains("iscrowd") && a["iscrowd"].is_number() && a["iscrowd"].get<double>() != 0) {
      ++out.skipped_crowd;
      continue;
    }
    const std::array<double, 4> b{bbox[0].get<double>(), bbox[1].get<double>(),
                                  bbox[2].get<double>(), bbox[3].get<double>()};
    if (!(b[2] > 0.0) || !(b[3] > 0.0)) {
      ++out.skipped_degenerate;
      continue;
    }
    Scene& scene = out.scenes[scene_it->second];
    const BoundingBox box = from_coco_bbox(b);
    if (!strictly_inside(box, scene.image_w, scene.image_h)) {
      ++out.skipped_outside;
      continue;
    }
    scene.objects.push_back(SceneObject{box, cls_it->second});
    ++out.converted;
  }
  return out;
}

DatasetStats dataset_stats(std::span<const Scene> scenes, const std::vector<int>& strides,
                           const std::vector<double>& gains, const AssignMode& mode) {
  DatasetStats stats;
  stats.scenes = scenes.size();
  stats.records_per_scale.assign(strides.size(), 0);
  stats.collisions_per_scale.assign(strides.size(), 0);
  std::vector<std::size_t> counts;

  for (const Scene& scene : scenes) {
    const ScaleConfig scale =
        ScaleConfig::padded_for_image(scene.image_w, scene.image_h, strides, gains);
    const auto records = assign(scene.objects, scale, mode);
    const auto per_object = positives_per_object(records);
    for (std::size_t id = 0; id < scene.objects.size(); ++id) {
      const auto it = per_object.find(id);
      counts.push_back(it == per_object.end() ? 0 : it->second);
    }
    for (const auto& r : records) ++stats.records_per_scale[r.scale_index];
    stats.records += records.size();
    for (const auto& sc : center_collision_audit(scene.objects, scale)) {
      stats.collisions_per_scale[sc.scale_index] += sc.collisions.size();
    }
    stats.objects += scene.objects.size();
  }

  for (std::size_t c : counts) {
    ++stats.positives_histogram[c];
    if (c == 0) ++stats.objects_without_positives;
  }
  if (!counts.empty()) {
    std::sort(counts.begin(), counts.end());
    const std::size_t n = counts.size();
    stats.min_positives = counts.front();
    stats.max_positives = counts.back();
    stats.median_positives = n % 2 ? static_cast<double>(counts[n / 2])
                                   : (counts[n / 2 - 1] + counts[n / 2]) / 2.0;
  }
  return stats;
}

Scene load_scene_file(const std::string& path) { return parse_scene(read_file(path), path); }

Scene parse_scene(const std::string& text, const std::string& source) {
  const json root = parse_json(text, source);
  Scene scene;
  scene.image_w = integer(root, "image_w", source);
  scene.image_h = integer(root, "image_h", source);
  if (scene.image_w <= 0 || scene.image_h <= 0) {
    throw ParseError(fmt::format("{}: non-positive image size", source));
  }
  scene.source_id = source;
  const json& objects = array_field(root, "objects", source);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string where = fmt::format("{}: objects[{}]", source, i);
    const json& o = objects[i];
    const double w = number(o, "w", where), h = number(o, "h", where);
    if (!(w > 0.0) || !(h > 0.0)) {
      throw ParseError(fmt::format("{}: w and h must be > 0", where));
    }
    const int cls = o.contains("class") ? integer(o, "class", where) : 0;
    if (cls < 0) throw ParseError(fmt::format("{}: field 'class' is negative", where));
    scene.objects.push_back(SceneObject{
        BoundingBox(number(o, "cx", where), number(o, "cy", where), w, h), cls});
  }
  return scene;
}

std::string scene_to_json(const Scene& scene) {
  nlohmann::ordered_json root;
  root["image_w"] = scene.image_w;
  root["image_h"] = scene.image_h;
  root["objects"] = nlohmann::ordered_json::array();
  for (const auto& o : scene.objects) {
    nlohmann::ordered_json j;
    j["cx"] = round_for_output(o.box.cx());
    j["cy"] = round_for_output(o.box.cy());
    j["w"] = round_for_output(o.box.w());
    j["h"] = round_for_output(o.box.h());
    j["class"] = o.class_id;
    root["objects"].push_back(j);
  }
  return root.dump(2) + "\n";
}

}  // namespace objectbox
