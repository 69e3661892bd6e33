// End-to-end acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "objectbox/assign.hpp"
#include "objectbox/cli.hpp"
#include "objectbox/codec.hpp"
#include "objectbox/fit.hpp"
#include "objectbox/gradcheck.hpp"
#include "objectbox/infer.hpp"
#include "objectbox/ingest.hpp"
#include "objectbox/loss.hpp"
#include "objectbox/random.hpp"

using namespace objectbox;

namespace {

const std::string kData = OBJECTBOX_TEST_DATA;
const std::string kTool = OBJECTBOX_TOOL;

struct Outcome {
  bool ok = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_s,
               const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = budget_s <= 0 || secs < budget_s;
  const bool pass = o.ok && in_time;
  if (!pass) ++failures;
  std::string budget = budget_s > 0 ? fmt::format(" < {:g} s", budget_s) : "";
  std::printf("%s [%d] %s: %s (%.2f s%s)%s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              o.detail.c_str(), secs, budget.c_str(), in_time ? "" : " over time budget");
  std::fflush(stdout);
}

const ScaleConfig kScale(640, 640);

Outcome encoding_identities() {
  Rng rng(1001);
  double worst = 0.0;
  std::size_t nonpositive = 0;
  for (int i = 0; i < 10000; ++i) {
    const BoundingBox box(rng.uniform(1e-3, 640 - 1e-3), rng.uniform(1e-3, 640 - 1e-3),
                          rng.uniform(0.5, 640), rng.uniform(0.5, 640));
    for (std::size_t si = 0; si < 3; ++si) {
      const double s = kScale.stride(si);
      const RegressionTarget t =
          cell_distances(box, center_cell(box, kScale, si), kScale, si);
      worst = std::max({worst, std::abs(t.left + t.right - (box.w() / s + 1)),
                        std::abs(t.top + t.bottom - (box.h() / s + 1))});
      nonpositive += !t.all_positive();
    }
  }
  return {worst < 1e-9 && nonpositive == 0,
          fmt::format("30000 targets, worst sum error {:.3g} (tol 1e-9), non-positive {}", worst,
                      nonpositive)};
}

Outcome decode_round_trip() {
  Rng rng(1002);
  double worst = 0.0;
  for (std::size_t si = 0; si < 3; ++si) {
    const double g = kScale.gain(si);
    for (int i = 0; i < 1000; ++i) {
      RegressionTarget t;
      t.scale_index = si;
      auto draw = [&] {
        double u;
        do u = rng.uniform(); while (u == 0.0);
        return 4 * g * u;
      };
      t.left = draw();
      t.top = draw();
      t.right = draw();
      t.bottom = draw();
      const auto back = decode(encode_logit(t, kScale), kScale).values();
      const auto v = t.values();
      for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(back[k] - v[k]));
    }
  }
  return {worst < 1e-9, fmt::format("3000 targets, worst |decode(encode_logit(t)) - t| {:.3g} "
                                    "(tol 1e-9)",
                                    worst)};
}

Outcome sdiou_fixed_points() {
  // Targets are real encodings, so L + R > 1 and T + B > 1 as for any box.
  Rng rng(1003);
  std::size_t nonzero = 0, not_positive = 0, perturbations = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t si = rng.below(3);
    const BoundingBox box(rng.uniform(1e-3, 640 - 1e-3), rng.uniform(1e-3, 640 - 1e-3),
                          rng.uniform(0.5, 400), rng.uniform(0.5, 400));
    const RegressionTarget t = encode(box, center_cell(box, kScale, si), kScale, si);
    if (sdiou(t, t).loss != 0.0) ++nonzero;
    for (int k = 0; k < 4; ++k) {
      for (double mag : {1e-6, rng.uniform(1e-6, 1.0)}) {
        for (double sign : {1.0, -1.0}) {
          auto v = t.values();
          v[k] += sign * mag;
          ++perturbations;
          if (!(sdiou(RegressionTarget::from_values(v, si), t).loss > 0.0)) ++not_positive;
        }
      }
    }
  }
  return {nonzero == 0 && not_positive == 0,
          fmt::format("1000 targets: loss(t,t) != 0 in {}; {} perturbations >= 1e-6, "
                      "{} without positive loss",
                      nonzero, perturbations, not_positive)};
}

Outcome gradient_suite() {
  GradcheckOptions o;
  o.seed = 1004;
  const auto rep = run_gradcheck(o, kScale);
  return {rep.passed() && rep.samples == 1000,
          fmt::format("{} pairs, h 1e-6, margin 1e-3 ({} redrawn); worst rel-err distance {:.3g}, "
                      "logit {:.3g} (tol 1e-5); failures {}",
                      rep.samples, rep.redrawn_near_switch, rep.worst_distance_rel_err,
                      rep.worst_logit_rel_err, rep.failures)};
}

Outcome fitting_convergence() {
  FitConfig cfg;  // 500 steps, lr 0.1, sdiou
  std::vector<Scene> scenes;
  for (std::uint64_t seed = 0; seed < 100; ++seed) scenes.push_back(generate_scene(cfg.scene, seed));
  std::size_t good = 0;
  for (const Scene& s : scenes) {
    const FitReport r = fit_scene(s, cfg);
    good += !r.objects[0].excluded && r.objects[0].best_iou > 0.99;
  }
  const std::vector<LossKind> kinds{LossKind::sdiou, LossKind::giou};
  const auto rows = compare_losses(scenes, cfg, kinds);
  auto med = [](const std::optional<double>& v) { return v ? fmt::format("{:g}", *v) : "never"; };
  const bool directional = rows[0].median_steps_090 &&
                           (!rows[1].median_steps_090 ||
                            *rows[0].median_steps_090 <= *rows[1].median_steps_090);
  return {good >= 95 && directional,
          fmt::format("final IoU > 0.99 on {}/100 scenes (need >= 95); median steps to 0.9: "
                      "sdiou {} vs giou {} (need sdiou <= giou)",
                      good, med(rows[0].median_steps_090), med(rows[1].median_steps_090))};
}

std::vector<std::size_t> brute_force_nms(const std::vector<Detection>& in, double thr) {
  std::vector<std::size_t> order(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return in[a].score() > in[b].score(); });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    bool drop = false;
    for (std::size_t k : kept)
      drop = drop || (in[k].best_class() == in[i].best_class() && iou_oracle(in[k].box, in[i].box) > thr);
    if (!drop) kept.push_back(i);
  }
  return kept;
}

Outcome nms_equivalence() {
  Rng rng(1006);
  std::size_t mismatched = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = rng.below(21);
    std::vector<Detection> dets;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = rng.uniform(0, 120), y = rng.uniform(0, 120);
      Detection d{CornerBox(x, y, x + rng.uniform(4, 70), y + rng.uniform(4, 70)),
                  rng.uniform(0.01, 1.0), {0.0, 0.0, 0.0}, 0, {}, 0};
      d.class_scores[rng.below(3)] = 1.0;
      dets.push_back(d);
    }
    const auto got = nms(dets, kDefaultNmsThreshold);
    const auto want = brute_force_nms(dets, kDefaultNmsThreshold);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i)
      same = got[i].box == dets[want[i]].box && got[i].score() == dets[want[i]].score();
    mismatched += !same;
  }
  // Effective-config echo of the defaults.
  const std::string path = kData + "/dets_duplicate.jsonl";
  const char* argv[] = {"objectbox", "nms", path.c_str()};
  std::ostringstream out, err;
  const int code = run_cli(3, argv, out, err);
  const std::string text = out.str();
  const std::string header = text.substr(0, text.find('\n'));
  const auto cfg = nlohmann::json::parse(header.substr(std::string("# config: ").size()));
  const double nms_thr = cfg["nms_threshold"], conf = cfg["conf_threshold"];
  const bool echo_ok = code == 0 && nms_thr == 0.6 && conf == 0.001;
  return {mismatched == 0 && echo_ok,
          fmt::format("200 instances, {} differ from brute force; echoed nms_threshold {} "
                      "conf_threshold {}",
                      mismatched, nms_thr, conf)};
}

Outcome size_independence() {
  Rng rng(1007);
  std::size_t changed = 0;
  for (int i = 0; i < 1000; ++i) {
    const BoundingBox b(rng.uniform(1e-3, 640 - 1e-3), rng.uniform(1e-3, 640 - 1e-3),
                        rng.uniform(1, 300), rng.uniform(1, 300));
    std::set<std::tuple<std::size_t, int, int>> ref;
    std::size_t ref_count = 0;
    for (double k : {0.5, 1.0, 2.0, 4.0}) {
      const std::vector<SceneObject> objs{{b.scaled(k), 0}};
      const auto recs = assign(objs, kScale);
      std::set<std::tuple<std::size_t, int, int>> cells;
      for (const auto& r : recs) cells.insert({r.scale_index, r.cell.x, r.cell.y});
      const std::size_t count = positives_per_object(recs).at(0);
      if (k == 0.5) {
        ref = cells;
        ref_count = count;
      } else if (cells != ref || count != ref_count) {
        ++changed;
      }
    }
  }
  return {changed == 0,
          fmt::format("1000 boxes x k in {{0.5,1,2,4}}: {} scalings changed the count or cells",
                      changed)};
}

Outcome threshold_filter() {
  std::ifstream in(kData + "/threshold_table.json");
  const auto table = nlohmann::json::parse(in);
  std::size_t checked = 0, wrong = 0;
  for (const auto& row : table["expected"]) {
    std::vector<double> m;
    for (const auto& v : row["m"]) m.push_back(v.is_string() ? INFINITY : v.get<double>());
    AssignMode mode;
    mode.strategy = LocationStrategy::center;
    for (std::size_t b = 0; b < table["boxes"].size(); ++b) {
      const auto& spec = table["boxes"][b];
      const std::vector<SceneObject> objs{{BoundingBox(320.5, 300.25, spec["w"], spec["h"]), 0}};
      std::vector<std::size_t> scales;
      for (const auto& r : apply_scale_constraints(assign(objs, kScale, mode), m))
        scales.push_back(r.scale_index);
      ++checked;
      if (scales != row["scales"][b].get<std::vector<std::size_t>>()) ++wrong;
    }
  }
  return {checked == 20 && wrong == 0,
          fmt::format("{} (threshold set, box) cases against the committed table, {} wrong",
                      checked, wrong)};
}

Outcome coco_ingestion() {
  const std::string path = kData + "/coco_sample.json";
  const auto coco = load_coco(path);
  const bool accounted = coco.converted + coco.skipped() == coco.annotation_count;
  const auto stats = dataset_stats(coco.scenes, kDefaultStrides, kDefaultGains, AssignMode{});

  std::ifstream in(path);
  const auto raw = nlohmann::json::parse(in);
  // Converted annotations in file order, per image.
  std::map<int, std::vector<std::array<double, 4>>> want;
  std::map<int, std::pair<double, double>> size;
  for (const auto& im : raw["images"]) size[im["id"]] = {im["width"], im["height"]};
  for (const auto& a : raw["annotations"]) {
    const std::array<double, 4> b = a["bbox"];
    const auto [w, h] = size[a["image_id"]];
    const double cx = b[0] + b[2] / 2, cy = b[1] + b[3] / 2;
    if (b[2] <= 0 || b[3] <= 0 || a.value("iscrowd", 0) == 1) continue;
    if (cx <= 0 || cx >= w || cy <= 0 || cy >= h) continue;
    want[a["image_id"]].push_back(b);
  }
  double worst = 0.0;
  bool shapes = coco.scenes.size() <= 50;
  for (std::size_t i = 0; i < coco.scenes.size(); ++i) {
    const auto& exp = want[coco.image_ids[i]];
    if (exp.size() != coco.scenes[i].objects.size()) {
      shapes = false;
      continue;
    }
    for (std::size_t k = 0; k < exp.size(); ++k) {
      const auto got = to_coco_bbox(coco.scenes[i].objects[k].box);
      for (int c = 0; c < 4; ++c) worst = std::max(worst, std::abs(got[c] - exp[k][c]));
    }
  }
  return {accounted && shapes && worst < 1e-9 && stats.collisions_per_scale.size() == 3,
          fmt::format("{} images, {} annotations = {} converted + {} skipped; collisions per scale "
                      "{}/{}/{}; worst round-trip error {:.3g} (tol 1e-9)",
                      coco.scenes.size(), coco.annotation_count, coco.converted, coco.skipped(),
                      stats.collisions_per_scale[0], stats.collisions_per_scale[1],
                      stats.collisions_per_scale[2], worst)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

Outcome cli_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "objectbox_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string coco = kData + "/coco_sample.json";
  struct Cmd {
    std::string name;
    std::string args;  // {out} and {trace} are substituted
    bool trace = false;
  };
  const std::vector<Cmd> cmds{
      {"encode", "encode " + kData + "/scene_small.json"},
      {"gradcheck", "--seed 3 gradcheck --samples 300 --loss sdiou,mse"},
      {"fit", "--seed 5 fit --scenes 2 --objects 3 --trace {trace}", true},
      {"compare-losses", "--seed 2 compare-losses --scenes 3 --steps 120"},
      {"compare-losses-csv", "--format csv compare-losses --scenes 2 --steps 50 --loss sdiou,giou"},
      {"assign-stats", "assign-stats " + coco + " --thresholds 0,64,128,inf"},
      {"audit", "audit " + coco},
      {"nms", "nms " + kData + "/dets_random20.jsonl"},
  };
  std::vector<std::string> differing;
  for (const auto& c : cmds) {
    std::string outputs[2], traces[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = dir / fmt::format("{}_{}.out", c.name, run);
      const fs::path trace = dir / fmt::format("{}_{}.trace", c.name, run);
      std::string args = c.args;
      if (auto p = args.find("{trace}"); p != std::string::npos)
        args.replace(p, 7, trace.string());
      const std::string line =
          fmt::format("\"{}\" -o \"{}\" {} > /dev/null 2>&1", kTool, out.string(), args);
      const int status = std::system(line.c_str());
      if (status != 0) return {false, fmt::format("'{}' exited with status {}", line, status)};
      outputs[run] = slurp(out);
      if (c.trace) traces[run] = slurp(trace);
    }
    if (outputs[0].empty() || outputs[0] != outputs[1] || traces[0] != traces[1])
      differing.push_back(c.name);
  }
  std::string list;
  for (const auto& d : differing) list += " " + d;
  return {differing.empty(),
          fmt::format("{} invocations run twice, byte-identical files: {}", cmds.size(),
                      differing.empty() ? std::string("all") : "differs in" + list)};
}

}  // namespace

int main() {
  criterion(1, "encoding identities", 5, encoding_identities);
  criterion(2, "decode round-trip", 1, decode_round_trip);
  criterion(3, "sdiou fixed points", 1, sdiou_fixed_points);
  criterion(4, "gradient suite", 10, gradient_suite);
  criterion(5, "fitting convergence", 60, fitting_convergence);
  criterion(6, "nms oracle equivalence", 5, nms_equivalence);
  criterion(7, "assignment size independence", 5, size_independence);
  criterion(8, "scale-constraint filter", 1, threshold_filter);
  criterion(9, "coco ingestion", 2, coco_ingestion);
  criterion(10, "cli determinism", 0, cli_determinism);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
