#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "objectbox/assign.hpp"
#include "objectbox/codec.hpp"
#include "objectbox/errors.hpp"
#include "objectbox/fit.hpp"
#include "objectbox/geom.hpp"
#include "objectbox/gradcheck.hpp"
#include "objectbox/infer.hpp"
#include "objectbox/ingest.hpp"
#include "objectbox/loss.hpp"
#include "objectbox/serialize.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace objectbox;

namespace {

std::vector<SceneObject> to_objects(const std::vector<std::tuple<BoundingBox, int>>& items) {
  std::vector<SceneObject> out;
  for (const auto& [box, cls] : items) out.push_back(SceneObject{box, cls});
  return out;
}

}  // namespace

PYBIND11_MODULE(_objectbox, m) {
  m.doc() = "Anchor-free box geometry: encoding, assignment, SDIoU loss, NMS, fitting";

  py::register_exception<GeometryError>(m, "GeometryError", PyExc_ValueError);
  py::register_exception<RangeError>(m, "RangeError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  // geom
  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init<double, double, double, double>(), "cx"_a, "cy"_a, "w"_a, "h"_a)
      .def_property_readonly("cx", &BoundingBox::cx)
      .def_property_readonly("cy", &BoundingBox::cy)
      .def_property_readonly("w", &BoundingBox::w)
      .def_property_readonly("h", &BoundingBox::h)
      .def("scaled", &BoundingBox::scaled)
      .def("__repr__", [](const BoundingBox& b) {
        std::ostringstream s;
        s << "BoundingBox(cx=" << b.cx() << ", cy=" << b.cy() << ", w=" << b.w()
          << ", h=" << b.h() << ")";
        return s.str();
      });
  py::class_<CornerBox>(m, "CornerBox")
      .def(py::init<double, double, double, double>(), "x1"_a, "y1"_a, "x2"_a, "y2"_a)
      .def_property_readonly("x1", &CornerBox::x1)
      .def_property_readonly("y1", &CornerBox::y1)
      .def_property_readonly("x2", &CornerBox::x2)
      .def_property_readonly("y2", &CornerBox::y2)
      .def_property_readonly("area", &CornerBox::area)
      .def("as_tuple", [](const CornerBox& c) {
        return py::make_tuple(c.x1(), c.y1(), c.x2(), c.y2());
      });
  m.def("to_corner", &to_corner);
  m.def("to_center", &to_center);
  m.def("iou_oracle", &iou_oracle);
  m.def("giou_oracle", &giou_oracle);
  m.def("diou_oracle", &diou_oracle);
  m.def("ciou_oracle", &ciou_oracle);

  // codec
  py::class_<ScaleConfig>(m, "ScaleConfig")
      .def(py::init<int, int, std::vector<int>, std::vector<double>>(), "image_w"_a,
           "image_h"_a, "strides"_a = kDefaultStrides, "gains"_a = kDefaultGains)
      .def_static("padded_for_image", &ScaleConfig::padded_for_image, "image_w"_a,
                  "image_h"_a, "strides"_a = kDefaultStrides, "gains"_a = kDefaultGains)
      .def_property_readonly("strides", &ScaleConfig::strides)
      .def_property_readonly("gains", &ScaleConfig::gains)
      .def_property_readonly("image_w", &ScaleConfig::image_w)
      .def_property_readonly("image_h", &ScaleConfig::image_h)
      .def("grid_w", &ScaleConfig::grid_w)
      .def("grid_h", &ScaleConfig::grid_h);
  py::class_<Cell>(m, "Cell")
      .def(py::init<int, int>(), "x"_a, "y"_a)
      .def_readwrite("x", &Cell::x)
      .def_readwrite("y", &Cell::y)
      .def("__eq__", [](const Cell& a, const Cell& b) { return a == b; })
      .def("as_tuple", [](const Cell& c) { return py::make_tuple(c.x, c.y); });
  py::class_<RegressionTarget>(m, "RegressionTarget")
      .def(py::init([](double l, double t, double r, double b, std::size_t si) {
             return RegressionTarget{l, t, r, b, si};
           }),
           "left"_a, "top"_a, "right"_a, "bottom"_a, "scale_index"_a = 0)
      .def_readwrite("left", &RegressionTarget::left)
      .def_readwrite("top", &RegressionTarget::top)
      .def_readwrite("right", &RegressionTarget::right)
      .def_readwrite("bottom", &RegressionTarget::bottom)
      .def_readwrite("scale_index", &RegressionTarget::scale_index)
      .def("values", &RegressionTarget::values)
      .def("all_positive", &RegressionTarget::all_positive);
  py::class_<RawPrediction>(m, "RawPrediction")
      .def(py::init([](std::array<double, 4> logits, std::size_t si) {
             return RawPrediction{logits, si};
           }),
           "logits"_a, "scale_index"_a = 0)
      .def_readwrite("logits", &RawPrediction::logits)
      .def_readwrite("scale_index", &RawPrediction::scale_index);
  m.def("center_cell", &center_cell);
  m.def("encode", &encode, "box"_a, "cell"_a, "scale"_a, "scale_index"_a);
  m.def("decode", &decode);
  m.def("encode_logit", &encode_logit);
  m.def("representable_range", &representable_range);
  m.def("cell_frame_box", &cell_frame_box);

  // assign
  py::enum_<LocationStrategy>(m, "LocationStrategy")
      .value("center", LocationStrategy::center)
      .value("aug_center", LocationStrategy::aug_center)
      .value("h_centers", LocationStrategy::h_centers)
      .value("aug_center_plus_h_centers", LocationStrategy::aug_center_plus_h_centers)
      .value("four_corners", LocationStrategy::four_corners)
      .value("four_corners_plus_center", LocationStrategy::four_corners_plus_center);
  py::class_<AssignMode>(m, "AssignMode")
      .def(py::init([](LocationStrategy s, std::optional<std::vector<double>> m, int p) {
             return AssignMode{s, std::move(m), p};
           }),
           "strategy"_a = LocationStrategy::aug_center, "scale_thresholds"_a = py::none(),
           "predictions_per_cell"_a = 1)
      .def_readwrite("strategy", &AssignMode::strategy)
      .def_readwrite("scale_thresholds", &AssignMode::scale_thresholds)
      .def_readwrite("predictions_per_cell", &AssignMode::predictions_per_cell);
  py::class_<AssignmentRecord>(m, "AssignmentRecord")
      .def_readonly("object_id", &AssignmentRecord::object_id)
      .def_readonly("class_id", &AssignmentRecord::class_id)
      .def_readonly("scale_index", &AssignmentRecord::scale_index)
      .def_readonly("cell", &AssignmentRecord::cell)
      .def_readonly("quadrant", &AssignmentRecord::quadrant)
      .def_property_readonly("role",
                             [](const AssignmentRecord& r) { return std::string(to_string(r.role)); })
      .def_readonly("target", &AssignmentRecord::target);
  m.def(
      "assign",
      [](const std::vector<std::tuple<BoundingBox, int>>& objects, const ScaleConfig& scale,
         const AssignMode& mode) { return assign(to_objects(objects), scale, mode); },
      "objects"_a, "scale"_a, "mode"_a = AssignMode{});
  m.def("positives_per_object", [](const std::vector<AssignmentRecord>& records) {
    return positives_per_object(records);
  });
  m.def("apply_scale_constraints",
        [](const std::vector<AssignmentRecord>& records,
           std::optional<std::vector<double>> thresholds) {
          return apply_scale_constraints(records, thresholds);
        });
  m.def("center_collision_audit",
        [](const std::vector<std::tuple<BoundingBox, int>>& objects, const ScaleConfig& scale) {
          py::list out;
          for (const auto& sc : center_collision_audit(to_objects(objects), scale)) {
            py::list cols;
            for (const auto& c : sc.collisions) {
              cols.append(py::make_tuple(py::make_tuple(c.cell.x, c.cell.y), c.object_ids));
            }
            out.append(cols);
          }
          return out;
        });

  // loss
  py::enum_<LossKind>(m, "LossKind")
      .value("sdiou", LossKind::sdiou)
      .value("mse", LossKind::mse)
      .value("iou", LossKind::iou)
      .value("giou", LossKind::giou)
      .value("diou", LossKind::diou)
      .value("ciou", LossKind::ciou);
  py::class_<LossConfig>(m, "LossConfig")
      .def(py::init([](double rho, LossKind kind) {
             LossConfig c;
             c.rho = rho;
             c.kind = kind;
             return c;
           }),
           "rho"_a = 1.0, "kind"_a = LossKind::sdiou)
      .def_readwrite("rho", &LossConfig::rho)
      .def_readwrite("kind", &LossConfig::kind);
  py::class_<SdiouParts>(m, "SdiouParts")
      .def_readonly("S", &SdiouParts::S)
      .def_readonly("I", &SdiouParts::I)
      .def_readonly("C", &SdiouParts::C)
      .def_readonly("wI", &SdiouParts::wI)
      .def_readonly("hI", &SdiouParts::hI)
      .def_readonly("wC", &SdiouParts::wC)
      .def_readonly("hC", &SdiouParts::hC)
      .def_readonly("sdiou", &SdiouParts::sdiou)
      .def_readonly("loss", &SdiouParts::loss);
  m.def("sdiou", &sdiou, "pred"_a, "truth"_a, "cfg"_a = LossConfig{});
  m.def("sdiou_grad", &sdiou_grad, "pred"_a, "truth"_a, "cfg"_a = LossConfig{});
  m.def("sdiou_logit_grad", &sdiou_logit_grad, "raw"_a, "truth"_a, "scale"_a,
        "cfg"_a = LossConfig{});
  m.def("baseline_loss", &baseline_loss);
  m.def("baseline_grad", &baseline_grad);
  m.def("bce_with_logits", &bce_with_logits);

  // gradcheck
  m.def(
      "run_gradcheck",
      [](std::size_t samples, std::uint64_t seed, LossKind kind, const ScaleConfig& scale) {
        GradcheckOptions o;
        o.samples = samples;
        o.seed = seed;
        o.loss.kind = kind;
        const GradcheckReport r = run_gradcheck(o, scale);
        return py::dict("samples"_a = r.samples, "failures"_a = r.failures,
                        "worst_rel_err"_a = r.worst(), "passed"_a = r.passed());
      },
      "samples"_a = 1000, "seed"_a = 0, "kind"_a = LossKind::sdiou,
      "scale"_a = ScaleConfig(640, 640));

  // infer
  py::class_<Detection>(m, "Detection")
      .def(py::init([](const CornerBox& box, double obj, std::vector<double> cls,
                       std::size_t scale_index) {
             return Detection{box, obj, std::move(cls), scale_index, Cell{}, 0};
           }),
           "box"_a, "objectness"_a, "class_scores"_a, "scale_index"_a = 0)
      .def_readonly("box", &Detection::box)
      .def_readonly("objectness", &Detection::objectness)
      .def_readonly("class_scores", &Detection::class_scores)
      .def_readonly("scale_index", &Detection::scale_index)
      .def_readonly("cell", &Detection::cell)
      .def("score", &Detection::score)
      .def("best_class", &Detection::best_class)
      .def("to_json_line", &detection_to_json_line);
  py::class_<PredictionGrid>(m, "PredictionGrid")
      .def(py::init<const ScaleConfig&, std::size_t, int>(), "scale"_a, "num_classes"_a,
           "predictions_per_cell"_a = 1)
      .def("set", [](PredictionGrid& g, std::size_t si, Cell c, const std::vector<double>& v,
                     int slot) {
             auto ch = g.at(si, c, slot);
             if (v.size() != ch.size()) throw ConfigError("channel count mismatch");
             std::copy(v.begin(), v.end(), ch.begin());
           },
           "scale_index"_a, "cell"_a, "values"_a, "slot"_a = 0)
      .def("get", [](const PredictionGrid& g, std::size_t si, Cell c, int slot) {
             auto ch = g.at(si, c, slot);
             return std::vector<double>(ch.begin(), ch.end());
           },
           "scale_index"_a, "cell"_a, "slot"_a = 0)
      .def("fill_objectness", &PredictionGrid::fill_objectness);
  m.def(
      "decode_grid",
      [](const PredictionGrid& g, const ScaleConfig& s, double conf) {
        DecodeResult r = decode_grid(g, s, conf);
        return py::make_tuple(r.detections, r.dropped_degenerate);
      },
      "grid"_a, "scale"_a, "conf_threshold"_a = kDefaultConfThreshold);
  m.def(
      "nms", [](const std::vector<Detection>& d, double thr) { return nms(d, thr); }, "dets"_a,
      "iou_threshold"_a = kDefaultNmsThreshold);

  // fit
  py::class_<SceneSpec>(m, "SceneSpec")
      .def(py::init<>())
      .def_readwrite("image_w", &SceneSpec::image_w)
      .def_readwrite("image_h", &SceneSpec::image_h)
      .def_readwrite("object_count", &SceneSpec::object_count)
      .def_readwrite("min_size", &SceneSpec::min_size)
      .def_readwrite("max_size", &SceneSpec::max_size)
      .def_readwrite("num_classes", &SceneSpec::num_classes);
  py::class_<SceneObject>(m, "SceneObject")
      .def_readonly("box", &SceneObject::box)
      .def_readonly("class_id", &SceneObject::class_id);
  py::class_<Scene>(m, "Scene")
      .def(py::init([](int w, int h, const std::vector<std::tuple<BoundingBox, int>>& objects) {
             return Scene{w, h, to_objects(objects), "python"};
           }),
           "image_w"_a, "image_h"_a, "objects"_a)
      .def_readonly("image_w", &Scene::image_w)
      .def_readonly("image_h", &Scene::image_h)
      .def_readonly("objects", &Scene::objects)
      .def_readonly("source_id", &Scene::source_id);
  m.def("generate_scene", &generate_scene, "spec"_a, "seed"_a);
  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("steps", &FitConfig::steps)
      .def_readwrite("learning_rate", &FitConfig::learning_rate)
      .def_readwrite("loss", &FitConfig::loss)
      .def_readwrite("mode", &FitConfig::mode)
      .def_readwrite("multitask", &FitConfig::multitask);
  m.def("fit_scene", [](const Scene& scene, const FitConfig& cfg) {
    return fit_report_json(fit_scene(scene, cfg)).dump();
  });
  m.def("compare_losses", [](const std::vector<Scene>& scenes, const FitConfig& cfg,
                             const std::vector<LossKind>& kinds) {
    return comparison_json(compare_losses(scenes, cfg, kinds)).dump();
  });

  // ingest
  m.def("load_coco", [](const std::string& path) {
    CocoLoadResult r = load_coco(path);
    return py::make_tuple(r.scenes, coco_counts_json(r).dump());
  });
  m.def(
      "dataset_stats",
      [](const std::vector<Scene>& scenes, const AssignMode& mode) {
        return dataset_stats_json(dataset_stats(scenes, kDefaultStrides, kDefaultGains, mode))
            .dump();
      },
      "scenes"_a, "mode"_a = AssignMode{});
}
