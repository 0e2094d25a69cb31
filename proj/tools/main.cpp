// shadowlane command-line tool.
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shadowlane/attack.hpp"
#include "shadowlane/compositor.hpp"
#include "shadowlane/csv.hpp"
#include "shadowlane/defense.hpp"
#include "shadowlane/image_io.hpp"
#include "shadowlane/lane_detection.hpp"
#include "shadowlane/pattern.hpp"
#include "shadowlane/report.hpp"
#include "shadowlane/safety.hpp"
#include "shadowlane/solar.hpp"

#ifndef SHADOWLANE_VERSION
#define SHADOWLANE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace shadowlane;

namespace {

struct Globals {
  std::uint64_t seed = 42;
  int workers = 1;
};

class Timer {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

bool is_flag(const CLI::Option* o) { return o->get_expected_min() == 0; }

// Resolved value of every long option of `sub` (explicit, config or default).
std::map<std::string, std::string> resolved_params(const CLI::App* sub, const Globals& g) {
  std::map<std::string, std::string> params;
  for (const CLI::Option* o : sub->get_options()) {
    if (o->get_lnames().empty() || o->get_lnames().front() == "help") continue;
    const std::string name = o->get_lnames().front();
    if (is_flag(o)) {
      params[name] = o->count() > 0 ? "true" : "false";
    } else if (o->count() > 0) {
      params[name] = join(o->results(), ",");
    } else {
      params[name] = o->get_default_str();
    }
  }
  params["workers"] = std::to_string(g.workers);
  return params;
}

void finish(const CLI::App* sub, const Globals& g, const fs::path& out_dir, std::vector<std::string> inputs,
            std::vector<std::string> outputs, const Timer& t) {
  report::RunManifest m;
  m.tool_version = SHADOWLANE_VERSION;
  m.subcommand = sub->get_name();
  m.params = resolved_params(sub, g);
  std::erase(inputs, std::string());
  m.inputs = std::move(inputs);
  m.outputs = std::move(outputs);
  m.seed = g.seed;
  m.duration_s = t.seconds();
  report::write_manifest(out_dir.empty() ? fs::path(".") : out_dir, m);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (auto f : csv::split(s)) {
    if (!csv::trim(f).empty()) out.push_back(csv::parse_double(f, 1));
  }
  return out;
}

solar::CivilInstant parse_instant(const std::string& date, const std::string& hhmm) {
  solar::CivilInstant t;
  if (std::sscanf(date.c_str(), "%d-%d-%d", &t.year, &t.month, &t.day) != 3) {
    throw std::invalid_argument("date must be YYYY-MM-DD: " + date);
  }
  int h = 0, m = 0;
  if (std::sscanf(hhmm.c_str(), "%d:%d", &h, &m) != 2) throw std::invalid_argument("time must be HH:MM: " + hhmm);
  t.hour_utc = h + m / 60.0;
  solar::validate(t);
  return t;
}

Calibration calibration_for(const std::optional<std::string>& scene_path) {
  if (scene_path) {
    const RoadScene s = load_scene(*scene_path);
    return {s.camera, s.grid};
  }
  return {CameraModel{}, BevGrid{}};
}

std::vector<fs::path> image_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".ppm" || ext == ".pgm" || ext == ".pnm" || ext == ".png")) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

int run(std::vector<std::string> args) {
  Globals g;
  CLI::App app{"Negative-shadow lane attack toolkit", "shadowlane"};
  app.footer(
      "Option precedence: command-line flag > --config file > built-in default.\n"
      "SHADOWLANE_WORKERS supplies --workers when the flag is absent.\n"
      "Exit codes: 0 success, 1 usage error, 2 runtime failure.");
  app.set_version_flag("--version", SHADOWLANE_VERSION);
  app.set_config("--config", "", "INI/TOML file with [subcommand] sections");
  app.option_defaults()->always_capture_default();
  app.add_option("--seed", g.seed, "Seed for all randomness");
  app.add_option("--workers", g.workers, "Worker threads")->envname("SHADOWLANE_WORKERS")->check(CLI::Range(1, 256));
  app.require_subcommand(1);

  // shadow
  auto* shadow = app.add_subcommand("shadow", "Sun position and occluder shadow length over a time window");
  double lat = 34, lon = -82, height = 10, occ_len = 10, tilt = 90, step_min = 10;
  std::string date = "2023-12-22", time_utc = "13:00", end_utc;
  std::string shadow_out = "-";
  shadow->add_option("--lat", lat, "Latitude, degrees north");
  shadow->add_option("--lon", lon, "Longitude, degrees east");
  shadow->add_option("--date", date, "YYYY-MM-DD");
  shadow->add_option("--time-utc", time_utc, "Start, HH:MM UTC");
  shadow->add_option("--end-utc", end_utc, "End, HH:MM UTC (default start + 1 h)");
  shadow->add_option("--step-min", step_min, "Sampling step, minutes")->check(CLI::PositiveNumber);
  shadow->add_option("--height", height, "Occluder mount height, m");
  shadow->add_option("--length", occ_len, "Occluder panel length, m");
  shadow->add_option("--tilt", tilt, "Panel tilt from vertical, degrees");
  shadow->add_option("--out", shadow_out, "CSV path or - for stdout");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Generate the purged NS configuration grid as CSV batches");
  std::string variant = "geometric", sweep_out;
  std::size_t rows_per_file = 25;
  sweep->add_option("--variant", variant, "literal | geometric")->check(CLI::IsMember({"literal", "geometric"}));
  sweep->add_option("--out", sweep_out, "Output directory")->required();
  sweep->add_option("--rows-per-file", rows_per_file, "Rows per batch file")->check(CLI::PositiveNumber);

  // synth
  auto* synth = app.add_subcommand("synth", "Render the benign scene suite");
  std::string synth_out, offsets = "0,0.6,1.2,1.8";
  double lane_width = 4.0;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--lane-width", lane_width, "Lane width, m")->check(CLI::PositiveNumber);
  synth->add_option("--offsets", offsets, "Camera offsets from the reference marking, m (comma separated)");

  // compose
  auto* comp = app.add_subcommand("compose", "Render one scene with one NS configuration");
  std::string comp_scene, comp_row, comp_out;
  ComposeOptions copts;
  comp->add_option("--scene", comp_scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  comp->add_option("--config", comp_row, "CSV row: width_m,length_m,beta_deg,distance_m,brightness")->required();
  comp->add_option("--out", comp_out, "Output image (.ppm or .png)")->required();
  comp->add_option("--shade-factor", copts.shade_factor, "Canopy luminance factor")->check(CLI::Range(0.0, 1.0));
  comp->add_option("--near", copts.near_m, "Camera to NS near end, m")->check(CLI::PositiveNumber);

  // detect
  auto* det = app.add_subcommand("detect", "Run the reference lane detector");
  std::string det_image, det_mask, det_json;
  std::optional<std::string> det_scene;
  bool plugin = false;
  det->add_option("--image", det_image, "Input image")->check(CLI::ExistingFile);
  det->add_option("--scene", det_scene, "Scene JSON supplying the calibration")->check(CLI::ExistingFile);
  det->add_option("--out-mask", det_mask, "Lane mask image");
  det->add_option("--out-json", det_json, "Lane polylines as JSON lines");
  det->add_flag("--plugin", plugin, "PPM on stdin, plugin wire format on stdout");

  // attack
  auto* att = app.add_subcommand("attack", "Score NS configurations against benign scenes");
  std::string att_mode = "sweep", att_scenes, att_configs, att_detector = "reference", att_out, att_scene, att_row,
              att_grid = "1.05,1.2,1.4,1.8,2.4,3.0";
  std::optional<double> att_threshold;
  ComposeOptions aopts;
  att->add_option("--mode", att_mode, "sweep | brightness")->check(CLI::IsMember({"sweep", "brightness"}));
  att->add_option("--scenes", att_scenes, "Scene directory (sweep mode)");
  att->add_option("--configs", att_configs, "Config CSV file or batch directory (sweep mode)");
  att->add_option("--detector", att_detector, "reference | cmd:<shell command>");
  att->add_option("--threshold", att_threshold, "Success threshold in pixels (default: calibrated)");
  att->add_option("--shade-factor", aopts.shade_factor, "Canopy luminance factor")->check(CLI::Range(0.0, 1.0));
  att->add_option("--scene", att_scene, "Scene JSON (brightness mode)");
  att->add_option("--config", att_row, "CSV row (brightness mode)");
  att->add_option("--brightness-grid", att_grid, "Brightness factors, comma separated (brightness mode)");
  att->add_option("--out", att_out, "Output directory")->required();

  // simulate
  auto* simc = app.add_subcommand("simulate", "Closed-loop lane-centering runs");
  int scenario = 1;
  double speed = 35, length = 20;
  bool grid = false;
  std::string sim_out = "sim_out", scenario_file, speeds = "10,15,20,35,60", lengths = "10,20,30,40,50,60,70";
  simc->add_option("--scenario", scenario, "1 | 2 | 3 (0 = all three with --grid)")->check(CLI::Range(0, 3));
  simc->add_option("--scenario-file", scenario_file, "Scenario spec file, overrides --scenario");
  simc->add_option("--speed", speed, "Speed, mph")->check(CLI::PositiveNumber);
  simc->add_option("--length", length, "NS length, m (0 = benign)");
  simc->add_flag("--grid", grid, "Run the speed x length grid");
  simc->add_option("--speeds", speeds, "Grid speeds, mph");
  simc->add_option("--lengths", lengths, "Grid NS lengths, m");
  simc->add_option("--out", sim_out, "Output directory");

  // defend
  auto* def = app.add_subcommand("defend", "Luminosity-filter images or measure the defense rate");
  std::string def_in, def_params, def_out, def_report, def_outcomes, def_scenes;
  std::optional<double> def_threshold;
  def->add_option("--in", def_in, "Image directory");
  def->add_option("--params", def_params, "Defense parameter file (key = value)");
  def->add_option("--out", def_out, "Output directory")->required();
  def->add_option("--report", def_report, "Report CSV");
  def->add_option("--outcomes", def_outcomes, "Outcome CSV; its successful rows are re-scored");
  def->add_option("--scenes", def_scenes, "Scene directory for --outcomes");
  def->add_option("--threshold", def_threshold, "Success threshold (default: calibrated on the scenes)");

  // report
  auto* rep = app.add_subcommand("report", "SVG and CSV charts from a results directory");
  std::string rep_in, rep_out;
  rep->add_option("--in", rep_in, "Results directory")->required()->check(CLI::ExistingDirectory);
  rep->add_option("--out", rep_out, "Output directory")->required();

  // replay
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  std::string manifest_path;
  replay->add_option("manifest", manifest_path, "manifest.json")->required()->check(CLI::ExistingFile);

  if (args.size() <= 1) {
    std::cerr << app.help();
    return 1;
  }
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  const Timer timer;
  const CLI::App* sub = app.get_subcommands().front();
  try {
    if (sub == shadow) {
      const solar::CivilInstant t0 = parse_instant(date, time_utc);
      const double end = end_utc.empty() ? t0.hour_utc + 1.0 : parse_instant(date, end_utc).hour_utc;
      const auto rows = solar::shadow_series({lat, lon}, {height, occ_len, tilt}, t0, end, step_min);
      if (shadow_out == "-") {
        solar::write_shadow_csv(std::cout, rows);
      } else {
        std::ostringstream ss;
        solar::write_shadow_csv(ss, rows);
        write_file(shadow_out, ss.str());
        finish(sub, g, fs::path(shadow_out).parent_path(), {}, {shadow_out}, timer);
      }
    } else if (sub == sweep) {
      const auto configs = generate_sweep(SweepBounds::standard(), parse_purge_variant(variant));
      const auto files = batch_csv(configs, sweep_out, rows_per_file);
      std::vector<std::string> outs;
      for (const auto& f : files) outs.push_back(f.string());
      finish(sub, g, sweep_out, {}, outs, timer);
      std::cout << configs.size() << " configs in " << files.size() << " files\n";
    } else if (sub == synth) {
      std::vector<std::string> outs;
      int i = 0;
      for (double off : parse_list(offsets)) {
        SynthOptions o;
        o.road = RoadSpec::straight_two_lane(lane_width);
        o.road.seed = g.seed + static_cast<std::uint64_t>(i);
        o.camera_offset_m = off;
        o.id = "scene_" + std::to_string(i++);
        outs.push_back(save_scene(synth_scene(o), synth_out).string());
      }
      finish(sub, g, synth_out, {}, outs, timer);
    } else if (sub == comp) {
      const RoadScene scene = load_scene(comp_scene);
      const NSConfig cfg = parse_config_row(comp_row);
      const ComposeResult r = compose(scene, cfg, copts);
      if (fs::path(comp_out).has_parent_path()) fs::create_directories(fs::path(comp_out).parent_path());
      write_image(comp_out, r.image);
      if (r.noop) std::cerr << "warning: shadow footprint not visible; image unchanged\n";
      finish(sub, g, fs::path(comp_out).parent_path(), {comp_scene}, {comp_out}, timer);
    } else if (sub == det) {
      const ReferenceDetector detector(calibration_for(det_scene));
      if (plugin) {
        std::cin.exceptions(std::ios::badbit);
        const Image img = read_pnm(std::cin);
        write_detection(std::cout, detector.detect(img));
        std::cout.flush();
        return 0;
      }
      if (det_image.empty()) throw CLI::RequiredError("--image");
      const LaneDetectionResult r = detector.detect(read_image(det_image));
      std::vector<std::string> outs;
      if (!det_mask.empty()) {
        write_image(det_mask, r.mask);
        outs.push_back(det_mask);
      }
      if (!det_json.empty()) {
        std::ostringstream ss;
        write_detection(ss, r);
        write_file(det_json, ss.str());
        outs.push_back(det_json);
      }
      std::cout << r.lanes.size() << " lanes\n";
      for (std::size_t i = 0; i < r.lanes.size(); ++i) {
        const auto& l = r.lanes[i];
        std::cout << "lane " << i << ": x(y) = " << csv::fmt_fixed(l.coeffs[0], 3) << " + "
                  << csv::fmt_fixed(l.coeffs[1], 4) << " y + " << csv::fmt_fixed(l.coeffs[2], 5) << " y^2, y in ["
                  << csv::fmt_fixed(l.y_near, 1) << ", " << csv::fmt_fixed(l.y_far, 1) << "] m, width "
                  << csv::fmt_fixed(l.width_m, 2) << " m\n";
      }
      if (!outs.empty()) finish(sub, g, fs::path(outs.front()).parent_path(), {det_image}, outs, timer);
    } else if (sub == att) {
      fs::create_directories(att_out);
      std::vector<std::string> outs;
      if (att_mode == "sweep") {
        if (att_scenes.empty() || att_configs.empty()) throw CLI::RequiredError("--scenes and --configs");
        const auto scenes = load_scenes(att_scenes);
        if (scenes.empty()) throw std::runtime_error("no scenes in " + att_scenes);
        const auto configs = read_config_batch(att_configs);
        const auto detector = make_detector(att_detector, {scenes.front().camera, scenes.front().grid});
        SweepOptions so;
        so.compose = aopts;
        so.workers = g.workers;
        const SweepResult r = run_sweep(scenes, configs, *detector, so, att_threshold);
        std::ostringstream oc;
        write_outcomes_csv(oc, r.outcomes);
        write_file(fs::path(att_out) / "outcomes.csv", oc.str());
        std::ostringstream stats;
        write_stats_csv(stats, {r.per_pair, r.any_scene, r.all_scenes});
        write_file(fs::path(att_out) / "stats.csv", stats.str());
        outs = {(fs::path(att_out) / "outcomes.csv").string(), (fs::path(att_out) / "stats.csv").string()};
        for (const auto& p : report::write_outcome_report(r.outcomes, att_out)) outs.push_back(p.string());
        std::cout << "threshold " << csv::fmt_fixed(r.threshold, 1) << " px, " << r.per_pair.successes << "/"
                  << r.per_pair.total << " pairs succeeded\n";
        finish(sub, g, att_out, {att_scenes, att_configs}, outs, timer);
      } else {
        if (att_scene.empty()) throw CLI::RequiredError("--scene");
        const RoadScene scene = load_scene(att_scene);
        const NSConfig cfg = att_row.empty() ? NSConfig{} : parse_config_row(att_row);
        const auto detector = make_detector(att_detector, {scene.camera, scene.grid});
        BrightnessSweepOptions bo;
        bo.brightness_grid = parse_list(att_grid);
        bo.compose = aopts;
        const auto pts = brightness_sweep(scene, cfg, *detector, bo);
        std::ostringstream ss;
        write_brightness_csv(ss, pts);
        write_file(fs::path(att_out) / "brightness.csv", ss.str());
        outs = {(fs::path(att_out) / "brightness.csv").string()};
        for (const auto& p : report::write_brightness_report(pts, att_out)) outs.push_back(p.string());
        std::cout << ss.str();
        finish(sub, g, att_out, {att_scene}, outs, timer);
      }
    } else if (sub == simc) {
      std::vector<sim::ScenarioSpec> specs;
      if (!scenario_file.empty()) {
        std::ifstream f(scenario_file);
        if (!f) throw std::runtime_error("cannot read " + scenario_file);
        specs.push_back(sim::read_scenario(f));
      } else if (scenario == 0) {
        for (int id = 1; id <= 3; ++id) specs.push_back(sim::builtin_scenario(id));
      } else {
        specs.push_back(sim::builtin_scenario(scenario));
      }
      const sim::SimOptions so;
      const ReferenceDetector detector(sim::sim_calibration(so));
      fs::create_directories(sim_out);
      std::vector<std::string> outs;
      if (grid) {
        const auto gr = sim::run_grid(specs, detector, parse_list(speeds), parse_list(lengths), g.workers, so);
        std::ostringstream ss;
        sim::write_grid_csv(ss, gr);
        write_file(fs::path(sim_out) / "grid.csv", ss.str());
        outs.push_back((fs::path(sim_out) / "grid.csv").string());
        for (const auto& p : report::write_grid_report(gr, sim_out)) outs.push_back(p.string());
        const auto rates = gr.success_by_length();
        for (std::size_t i = 0; i < rates.size(); ++i) {
          std::cout << "length " << csv::fmt(gr.lengths[i]) << " m: " << csv::fmt_fixed(100 * rates[i], 2) << "%\n";
        }
      } else {
        if (specs.size() != 1) throw CLI::ValidationError("--scenario 0 needs --grid");
        const auto benign = sim::run_scenario(specs[0], speed, 0, detector, so);
        const auto run = length > 0 ? sim::run_scenario(specs[0], speed, length, detector, so, &benign.trajectory)
                                    : benign;
        std::ostringstream tr;
        sim::write_trajectory_csv(tr, run.trajectory);
        write_file(fs::path(sim_out) / "trajectory.csv", tr.str());
        sim::GridResult one;
        one.cells.push_back({specs[0].id, speed, length, run.verdict});
        std::ostringstream vs;
        sim::write_grid_csv(vs, one);
        write_file(fs::path(sim_out) / "verdict.csv", vs.str());
        outs = {(fs::path(sim_out) / "trajectory.csv").string(), (fs::path(sim_out) / "verdict.csv").string()};
        const auto& v = run.verdict;
        if (v.inconclusive) {
          std::cout << "inconclusive: " << v.error << '\n';
        } else {
          std::cout << "attack_success=" << v.attack_success << " reaction_time_s="
                    << (v.reaction_time_s ? csv::fmt_fixed(*v.reaction_time_s, 2) : std::string("-"))
                    << " preventable=" << v.takeover_preventable << " combined=" << v.combined
                    << " max_lat_dev_m=" << csv::fmt_fixed(v.max_lat_dev, 3) << '\n';
        }
      }
      finish(sub, g, sim_out, {scenario_file}, outs, timer);
    } else if (sub == def) {
      DefenseParams dp;
      if (!def_params.empty()) {
        std::ifstream f(def_params);
        if (!f) throw std::runtime_error("cannot read " + def_params);
        dp = read_defense_params(f);
      }
      dp.validate();
      fs::create_directories(def_out);
      std::vector<std::string> outs, ins;
      std::ostringstream rep_csv;
      if (!def_outcomes.empty()) {
        if (def_scenes.empty()) throw CLI::RequiredError("--scenes");
        std::ifstream f(def_outcomes);
        if (!f) throw std::runtime_error("cannot read " + def_outcomes);
        std::vector<AttackOutcome> succ;
        for (auto& o : read_outcomes_csv(f)) {
          if (o.success) succ.push_back(std::move(o));
        }
        const auto scenes = load_scenes(def_scenes);
        if (scenes.empty()) throw std::runtime_error("no scenes in " + def_scenes);
        const ReferenceDetector detector({scenes.front().camera, scenes.front().grid});
        double thr = 0;
        if (def_threshold) {
          thr = *def_threshold;
        } else {
          std::vector<LaneDetectionResult> benign;
          for (const auto& s : scenes) benign.push_back(detector.detect(s.image));
          thr = calibrate_threshold(benign);
        }
        const auto ev = defense_rate(succ, scenes, detector, thr, dp, {}, g.workers);
        const auto reg = benign_regressions(scenes, detector, thr, dp);
        rep_csv << "successful_outcomes,defended,defense_rate,benign_scenes,benign_regressions\n"
                << ev.n << ',' << ev.defended << ',' << csv::fmt(ev.rate()) << ',' << scenes.size() << ',' << reg
                << '\n';
        ins = {def_outcomes, def_scenes};
        std::cout << "defense rate " << csv::fmt_fixed(ev.rate(), 4) << " (" << ev.defended << "/" << ev.n
                  << "), benign regressions " << reg << "/" << scenes.size() << '\n';
      } else {
        if (def_in.empty()) throw CLI::RequiredError("--in or --outcomes");
        rep_csv << "image,components,suppressed,filled_px\n";
        for (const auto& p : image_files(def_in)) {
          FilterReport fr;
          const Image out = luminosity_filter(read_image(p), dp, &fr);
          const fs::path dst = fs::path(def_out) / p.filename();
          write_image(dst, out);
          outs.push_back(dst.string());
          rep_csv << p.filename().string() << ',' << fr.components << ',' << fr.suppressed << ',' << fr.filled_px
                  << '\n';
        }
        ins = {def_in};
      }
      const fs::path report_path = def_report.empty() ? fs::path(def_out) / "defense.csv" : fs::path(def_report);
      write_file(report_path, rep_csv.str());
      outs.push_back(report_path.string());
      std::ostringstream ps;
      write_defense_params(ps, dp);
      write_file(fs::path(def_out) / "defense_params.txt", ps.str());
      finish(sub, g, def_out, ins, outs, timer);
    } else if (sub == rep) {
      const auto files = report::write_report(report::load_results(rep_in), rep_out);
      std::vector<std::string> outs;
      for (const auto& f : files) outs.push_back(f.string());
      finish(sub, g, rep_out, {rep_in}, outs, timer);
    } else if (sub == replay) {
      const auto m = report::read_manifest(manifest_path);
      std::vector<std::string> re{args.front(), "--seed", std::to_string(m.seed)};
      if (auto it = m.params.find("workers"); it != m.params.end()) re.insert(re.end(), {"--workers", it->second});
      re.push_back(m.subcommand);
      for (const auto& [k, v] : m.params) {
        if (k == "workers") continue;
        if (v == "true") {
          re.push_back("--" + k);
        } else if (v != "false" && !v.empty()) {
          re.insert(re.end(), {"--" + k, v});
        }
      }
      return run(re);
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args);
}
