#include "objectbox/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "objectbox/assign.hpp"
#include "objectbox/codec.hpp"
#include "objectbox/errors.hpp"
#include "objectbox/fit.hpp"
#include "objectbox/format.hpp"
#include "objectbox/gradcheck.hpp"
#include "objectbox/infer.hpp"
#include "objectbox/ingest.hpp"
#include "objectbox/serialize.hpp"

namespace objectbox {

namespace {

// A failed check (as opposed to bad input); maps to exit code 1.
struct CheckFailed {};

struct Options {
  // Global.
  std::vector<int> strides = kDefaultStrides;
  std::vector<double> gains = kDefaultGains;
  double rho = 1.0;
  double conf_threshold = kDefaultConfThreshold;
  double nms_threshold = kDefaultNmsThreshold;
  std::uint64_t seed = 0;
  std::string output;
  std::string format = "json";

  // Assignment.
  std::string mode = "aug_center";
  std::string thresholds;
  int predictions_per_cell = 1;

  // Inputs.
  std::string input;

  // gradcheck.
  std::size_t samples = 1000;
  double tolerance = 1e-5;

  // fit / compare-losses.
  std::string scene_file;
  std::size_t steps = 500;
  double learning_rate = 0.1;
  std::string losses = "sdiou";
  std::size_t scenes = 1;
  SceneSpec scene;
  bool multitask = false;
  std::string trace;
};

std::optional<std::vector<double>> parse_thresholds(const std::string& text) {
  if (text.empty()) return std::nullopt;
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "inf" || item == "+inf" || item == "infinity") {
      out.push_back(INFINITY);
      continue;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw ConfigError(fmt::format("threshold '{}' is not a number", item));
    }
    out.push_back(v);
  }
  return out;
}

std::vector<LossKind> parse_losses(const std::string& text) {
  std::vector<LossKind> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_loss_kind(item));
  if (out.empty()) throw ConfigError("no loss given");
  return out;
}

AssignMode assign_mode(const Options& o) {
  AssignMode m;
  m.strategy = parse_location_strategy(o.mode);
  m.scale_thresholds = parse_thresholds(o.thresholds);
  m.predictions_per_cell = o.predictions_per_cell;
  m.validate(o.strides.size());
  return m;
}

ordered_json global_config(const Options& o) {
  ordered_json c;
  c["strides"] = o.strides;
  ordered_json gains = ordered_json::array();
  for (double g : o.gains) gains.push_back(number_json(g));
  c["gains"] = gains;
  c["rho"] = number_json(o.rho);
  c["conf_threshold"] = number_json(o.conf_threshold);
  c["nms_threshold"] = number_json(o.nms_threshold);
  c["seed"] = o.seed;
  return c;
}

ordered_json assign_config(const Options& o) {
  ordered_json c = global_config(o);
  c["mode"] = o.mode;
  c["thresholds"] = thresholds_json(parse_thresholds(o.thresholds));
  c["predictions_per_cell"] = o.predictions_per_cell;
  return c;
}

ordered_json fit_config_json(const Options& o) {
  ordered_json c = assign_config(o);
  c["steps"] = o.steps;
  c["learning_rate"] = number_json(o.learning_rate);
  c["multitask"] = o.multitask;
  if (o.scene_file.empty()) {
    ordered_json s;
    s["image_w"] = o.scene.image_w;
    s["image_h"] = o.scene.image_h;
    s["objects"] = o.scene.object_count;
    s["min_size"] = number_json(o.scene.min_size);
    s["max_size"] = number_json(o.scene.max_size);
    s["classes"] = o.scene.num_classes;
    c["scene_spec"] = s;
  } else {
    c["scene_file"] = o.scene_file;
  }
  return c;
}

// Temp file plus rename so readers never see a partial file.
void write_atomically(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError(fmt::format("{}: cannot open for writing", tmp));
    f << content;
    if (!f) throw ParseError(fmt::format("{}: write failed", tmp));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ParseError(fmt::format("{}: rename failed ({})", path, ec.message()));
}

void emit(const Options& o, std::ostream& out, const std::string& content) {
  if (o.output.empty()) {
    out << content;
  } else {
    write_atomically(o.output, content);
  }
}

std::string json_text(const ordered_json& j) { return j.dump(2) + "\n"; }

ScaleConfig scale_for(const Scene& scene, const Options& o) {
  return ScaleConfig::padded_for_image(scene.image_w, scene.image_h, o.strides, o.gains);
}

void run_encode(const Options& o, std::ostream& out) {
  const Scene scene = load_scene_file(o.input);
  const ScaleConfig scale = scale_for(scene, o);
  const auto records = assign(scene.objects, scale, assign_mode(o));
  std::string csv = "# config: " + assign_config(o).dump() + "\n";
  csv += "object,class,scale,cell_x,cell_y,quadrant,role,L,T,R,B\n";
  for (const auto& r : records) {
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.object_id, r.class_id,
                       r.scale_index, r.cell.x, r.cell.y, r.quadrant, to_string(r.role),
                       format_number(r.target.left), format_number(r.target.top),
                       format_number(r.target.right), format_number(r.target.bottom));
  }
  emit(o, out, csv);
}

void run_gradcheck_cmd(const Options& o, std::ostream& out) {
  if (o.samples == 0) throw ConfigError("--samples must be at least 1");
  const std::vector<LossKind> kinds = parse_losses(o.losses);
  const ScaleConfig scale = ScaleConfig::padded_for_image(640, 640, o.strides, o.gains);
  ordered_json root;
  ordered_json cfg = global_config(o);
  cfg["samples"] = o.samples;
  cfg["tolerance"] = number_json(o.tolerance);
  root["config"] = cfg;
  bool ok = true;
  ordered_json results = ordered_json::object();
  for (LossKind k : kinds) {
    GradcheckOptions go;
    go.samples = o.samples;
    go.seed = o.seed;
    go.tolerance = o.tolerance;
    go.loss.rho = o.rho;
    go.loss.kind = k;
    const GradcheckReport rep = run_gradcheck(go, scale);
    results[std::string(to_string(k))] = gradcheck_json(rep);
    ok = ok && rep.passed();
  }
  root["results"] = results;
  root["passed"] = ok;
  emit(o, out, json_text(root));
  if (!ok) throw CheckFailed{};
}

FitConfig fit_config(const Options& o) {
  FitConfig c;
  c.steps = o.steps;
  c.learning_rate = o.learning_rate;
  c.loss.rho = o.rho;
  c.mode = assign_mode(o);
  c.strides = o.strides;
  c.gains = o.gains;
  c.seed = o.seed;
  c.scene = o.scene;
  c.multitask = o.multitask;
  c.validate();
  return c;
}

std::vector<Scene> fit_scenes(const Options& o) {
  if (!o.scene_file.empty()) return {load_scene_file(o.scene_file)};
  std::vector<Scene> scenes;
  for (std::size_t i = 0; i < o.scenes; ++i) scenes.push_back(generate_scene(o.scene, o.seed + i));
  return scenes;
}

void run_fit(const Options& o, std::ostream& out) {
  const std::vector<LossKind> kinds = parse_losses(o.losses);
  if (kinds.size() != 1) throw ConfigError("fit takes exactly one --loss; use compare-losses");
  FitConfig cfg = fit_config(o);
  cfg.loss.kind = kinds.front();
  const std::vector<Scene> scenes = fit_scenes(o);
  ordered_json root;
  ordered_json c = fit_config_json(o);
  c["loss"] = std::string(to_string(cfg.loss.kind));
  root["config"] = c;
  ordered_json reports = ordered_json::array();
  std::string trace = "# config: " + c.dump() + "\n";
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const FitReport rep = fit_scene(scenes[i], cfg);
    ordered_json rj = fit_report_json(rep);
    rj["scene"] = scenes[i].source_id;
    reports.push_back(rj);
    if (scenes.size() > 1) trace += fmt::format("# scene {}\n", scenes[i].source_id);
    trace += fit_trace_csv(rep);
  }
  root["reports"] = reports;
  emit(o, out, json_text(root));
  if (!o.trace.empty()) write_atomically(o.trace, trace);
}

void run_compare(const Options& o, std::ostream& out) {
  const std::vector<LossKind> kinds = parse_losses(o.losses);
  const FitConfig cfg = fit_config(o);
  const std::vector<Scene> scenes = fit_scenes(o);
  const auto rows = compare_losses(scenes, cfg, kinds);
  ordered_json c = fit_config_json(o);
  c["losses"] = o.losses;
  c["scenes"] = scenes.size();
  if (o.format == "csv") {
    std::string csv = "# config: " + c.dump() + "\n";
    csv += "loss,scenes,median_steps_to_iou_0.9,median_steps_to_iou_0.99,mean_success_rate,"
           "mean_final_iou\n";
    auto opt = [](const std::optional<double>& v) {
      return v ? format_number(*v) : std::string("never");
    };
    for (const auto& r : rows) {
      csv += fmt::format("{},{},{},{},{},{}\n", to_string(r.kind), r.scenes,
                         opt(r.median_steps_090), opt(r.median_steps_099),
                         format_number(r.mean_success_rate), format_number(r.mean_final_iou));
    }
    emit(o, out, csv);
    return;
  }
  ordered_json root;
  root["config"] = c;
  root["rows"] = comparison_json(rows);
  emit(o, out, json_text(root));
}

void run_assign_stats(const Options& o, std::ostream& out) {
  const CocoLoadResult coco = load_coco(o.input);
  const AssignMode mode = assign_mode(o);
  ordered_json root;
  ordered_json c = assign_config(o);
  c["input"] = o.input;
  root["config"] = c;
  root["ingest"] = coco_counts_json(coco);
  root["stats"] = dataset_stats_json(dataset_stats(coco.scenes, o.strides, o.gains, mode));
  emit(o, out, json_text(root));
}

void run_audit(const Options& o, std::ostream& out) {
  const CocoLoadResult coco = load_coco(o.input);
  ordered_json root;
  ordered_json c = global_config(o);
  c["input"] = o.input;
  root["config"] = c;
  root["ingest"] = coco_counts_json(coco);
  std::vector<std::size_t> totals(o.strides.size(), 0);
  ordered_json found = ordered_json::array();
  for (const Scene& scene : coco.scenes) {
    for (const auto& sc : center_collision_audit(scene.objects, scale_for(scene, o))) {
      for (const auto& col : sc.collisions) {
        ordered_json j;
        j["scene"] = scene.source_id;
        j["scale"] = sc.scale_index;
        j["cell"] = {col.cell.x, col.cell.y};
        j["objects"] = col.object_ids;
        found.push_back(j);
        ++totals[sc.scale_index];
      }
    }
  }
  root["collisions_per_scale"] = totals;
  root["collisions"] = found;
  emit(o, out, json_text(root));
}

void run_nms(const Options& o, std::ostream& out) {
  std::ifstream in(o.input);
  if (!in) throw ParseError(fmt::format("{}: cannot open file", o.input));
  std::vector<Detection> dets = read_detection_lines(in, o.input);
  std::vector<Detection> passing;
  for (auto& d : dets) {
    if (d.score() >= o.conf_threshold) passing.push_back(std::move(d));
  }
  ordered_json c = global_config(o);
  c["input"] = o.input;
  std::string text = "# config: " + c.dump() + "\n";
  for (const auto& d : nms(passing, o.nms_threshold)) text += detection_to_json_line(d) + "\n";
  emit(o, out, text);
}

void add_assign_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--mode", o.mode,
                  "Location strategy: center, aug_center, h_centers, "
                  "aug_center_plus_h_centers, four_corners, four_corners_plus_center")
      ->capture_default_str();
  cmd->add_option("--thresholds", o.thresholds,
                  "Scale size limits m, e.g. 0,32,64,inf (empty: none)");
  cmd->add_option("--predictions-per-cell", o.predictions_per_cell, "1 or 4")
      ->capture_default_str();
}

void add_fit_flags(CLI::App* cmd, Options& o) {
  add_assign_flags(cmd, o);
  cmd->add_option("--scene", o.scene_file, "Scene JSON file (default: generated scenes)");
  cmd->add_option("--scenes", o.scenes, "Number of generated scenes (seeds seed..seed+n-1)")
      ->capture_default_str();
  cmd->add_option("--objects", o.scene.object_count, "Objects per generated scene")
      ->capture_default_str();
  cmd->add_option("--image-w", o.scene.image_w)->capture_default_str();
  cmd->add_option("--image-h", o.scene.image_h)->capture_default_str();
  cmd->add_option("--min-size", o.scene.min_size, "Smallest side in pixels")
      ->capture_default_str();
  cmd->add_option("--max-size", o.scene.max_size, "Largest side in pixels")
      ->capture_default_str();
  cmd->add_option("--classes", o.scene.num_classes)->capture_default_str();
  cmd->add_option("--steps", o.steps)->capture_default_str();
  cmd->add_option("--lr", o.learning_rate, "Learning rate")->capture_default_str();
  cmd->add_flag("--multitask", o.multitask, "Also learn objectness and class logits");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"ObjectBox box geometry: encoding, assignment, losses, NMS, fitting"};
  app.name("objectbox");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
  app.add_option("--strides", o.strides, "Pyramid strides")->delimiter(',')->capture_default_str();
  app.add_option("--gains", o.gains, "Per-scale decode gains")->delimiter(',')->capture_default_str();
  app.add_option("--rho", o.rho, "SDIoU trade-off")->capture_default_str();
  app.add_option("--conf-threshold", o.conf_threshold)->capture_default_str();
  app.add_option("--nms-threshold", o.nms_threshold)->capture_default_str();
  app.add_option("--seed", o.seed)->capture_default_str();
  app.add_option("-o,--output", o.output, "Output file (default: stdout)");
  app.add_option("--format", o.format, "json or csv (compare-losses)")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  CLI::App* encode_cmd = app.add_subcommand("encode", "Regression targets of a scene as CSV");
  encode_cmd->add_option("scene", o.input, "Scene JSON file")->required();
  add_assign_flags(encode_cmd, o);

  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  grad_cmd->add_option("--samples", o.samples)->capture_default_str();
  grad_cmd->add_option("--tolerance", o.tolerance)->capture_default_str();
  grad_cmd->add_option("--loss", o.losses, "Comma-separated loss kinds")->capture_default_str();

  CLI::App* fit_cmd = app.add_subcommand("fit", "Gradient-descent fit of synthetic scenes");
  add_fit_flags(fit_cmd, o);
  fit_cmd->add_option("--loss", o.losses, "Loss kind")->capture_default_str();
  fit_cmd->add_option("--trace", o.trace, "Write the loss trace CSV here");

  CLI::App* cmp_cmd = app.add_subcommand("compare-losses", "Convergence table per loss kind");
  add_fit_flags(cmp_cmd, o);
  o.losses = "sdiou";
  cmp_cmd->add_option("--loss", o.losses, "Comma-separated loss kinds (default: all)");

  CLI::App* stats_cmd = app.add_subcommand("assign-stats", "Assignment statistics of a COCO file");
  stats_cmd->add_option("coco", o.input, "COCO instances JSON")->required();
  add_assign_flags(stats_cmd, o);

  CLI::App* audit_cmd = app.add_subcommand("audit", "Center-collision audit of a COCO file");
  audit_cmd->add_option("coco", o.input, "COCO instances JSON")->required();

  CLI::App* nms_cmd = app.add_subcommand("nms", "Class-wise NMS over line-JSON detections");
  nms_cmd->add_option("detections", o.input, "Detections, one JSON object per line")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (*cmp_cmd && cmp_cmd->count("--loss") == 0) {
      std::string all;
      for (LossKind k : all_loss_kinds()) all += (all.empty() ? "" : ",") + std::string(to_string(k));
      o.losses = all;
    }
    ScaleConfig::padded_for_image(1, 1, o.strides, o.gains);  // validates strides and gains
    LossConfig{o.rho}.validate();
    if (*encode_cmd) run_encode(o, out);
    else if (*grad_cmd) run_gradcheck_cmd(o, out);
    else if (*fit_cmd) run_fit(o, out);
    else if (*cmp_cmd) run_compare(o, out);
    else if (*stats_cmd) run_assign_stats(o, out);
    else if (*audit_cmd) run_audit(o, out);
    else if (*nms_cmd) run_nms(o, out);
  } catch (const CheckFailed&) {
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace objectbox
