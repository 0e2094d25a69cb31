#include "shadowlane/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "shadowlane/csv.hpp"

namespace shadowlane::report {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) { return csv::fmt_fixed(v, 2); }

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

void range(const std::vector<Series>& series, bool use_x, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const auto& s : series) {
    for (double v : use_x ? s.x : s.y) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0;
    hi = 1;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
}

// Chart body without the outer <svg> element.
std::string chart_body(const ChartSpec& spec, const std::vector<Series>& series) {
  const double left = 56, right = 16, top = 32, bottom = 44;
  const double pw = spec.width - left - right, ph = spec.height - top - bottom;
  double x0, x1, y0, y1;
  range(series, true, x0, x1);
  range(series, false, y0, y1);
  if (spec.y_min) y0 = *spec.y_min;
  if (spec.y_max) y1 = *spec.y_max;
  if (y1 - y0 < 1e-12) y1 = y0 + 1;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream o;
  o << "<rect x=\"0\" y=\"0\" width=\"" << spec.width << "\" height=\"" << spec.height << "\" fill=\"#ffffff\"/>\n";
  o << "<text x=\"" << num(spec.width / 2.0) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
    << escape(spec.title) << "</text>\n";
  o << "<g stroke=\"#000000\" stroke-width=\"1\">\n";
  o << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(left + pw) << "\" y2=\""
    << num(top + ph) << "\"/>\n";
  o << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\"" << num(top + ph)
    << "\"/>\n</g>\n";
  o << "<g font-size=\"10\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
    o << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(top + ph + 14) << "\" text-anchor=\"middle\">"
      << csv::fmt_fixed(xv, 2) << "</text>\n";
    o << "<text x=\"" << num(left - 4) << "\" y=\"" << num(py(yv) + 3) << "\" text-anchor=\"end\">"
      << csv::fmt_fixed(yv, 2) << "</text>\n";
    o << "<line x1=\"" << num(left) << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << num(left + pw) << "\" y2=\""
      << num(py(yv)) << "\" stroke=\"#dddddd\"/>\n";
  }
  o << "</g>\n";
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(spec.height - 8.0)
    << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(spec.x_label) << "</text>\n";
  o << "<text x=\"14\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
    << num(top + ph / 2) << ")\">" << escape(spec.y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += num(px(s.x[i])) + "," + num(py(s.y[i]));
    }
    if (!pts.empty()) {
      o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"" << pts << "\"/>\n";
      for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"3\" fill=\"" << colour
          << "\"/>\n";
      }
    }
    o << "<text x=\"" << num(left + pw - 4) << "\" y=\"" << num(top + 12.0 + 14.0 * static_cast<double>(k))
      << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << colour << "\">" << escape(s.name) << "</text>\n";
  }
  return o.str();
}

std::string svg_open(int w, int h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(w) + "\" height=\"" + std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " +
         std::to_string(h) + "\" font-family=\"sans-serif\">\n";
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << s;
  if (!f) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace

std::string svg_chart(const ChartSpec& spec, const std::vector<Series>& series) {
  return svg_open(spec.width, spec.height) + chart_body(spec, series) + "</svg>\n";
}

std::string svg_panels(const std::vector<std::pair<ChartSpec, std::vector<Series>>>& panels, int columns) {
  if (columns < 1) throw std::invalid_argument("columns must be >= 1");
  int cell_w = 0, cell_h = 0;
  for (const auto& [spec, s] : panels) {
    cell_w = std::max(cell_w, spec.width);
    cell_h = std::max(cell_h, spec.height);
  }
  const int n = static_cast<int>(panels.size());
  const int rows = (n + columns - 1) / columns;
  std::string out = svg_open(cell_w * std::min(n, columns), cell_h * rows);
  for (int i = 0; i < n; ++i) {
    out += "<g transform=\"translate(" + std::to_string(i % columns * cell_w) + " " +
           std::to_string(i / columns * cell_h) + ")\">\n";
    out += chart_body(panels[i].first, panels[i].second);
    out += "</g>\n";
  }
  return out + "</svg>\n";
}

std::string RunManifest::to_json() const {
  json j;
  j["tool_version"] = tool_version;
  j["subcommand"] = subcommand;
  j["params"] = params;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["seed"] = seed;
  j["duration_s"] = duration_s;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    RunManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.subcommand = j.at("subcommand").get<std::string>();
    m.params = j.at("params").get<std::map<std::string, std::string>>();
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.duration_s = j.at("duration_s").get<double>();
    return m;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad manifest: ") + e.what());
  }
}

fs::path write_manifest(const fs::path& dir, const RunManifest& m) {
  fs::create_directories(dir);
  const fs::path p = dir / kManifestName;
  write_text(p, m.to_json());
  return p;
}

RunManifest read_manifest(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return RunManifest::from_json(ss.str());
}

ReportInputs load_results(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  ReportInputs in;
  for (const auto& p : files) {
    std::ifstream f(p, std::ios::binary);
    std::string header;
    std::getline(f, header);
    const std::string_view h = csv::trim(header);
    f.clear();
    f.seekg(0);
    try {
      if (h == kOutcomeCsvHeader) {
        auto o = read_outcomes_csv(f);
        in.outcomes.insert(in.outcomes.end(), o.begin(), o.end());
      } else if (h == sim::kGridCsvHeader) {
        auto g = sim::read_grid_csv(f);
        if (!in.grid) {
          in.grid = std::move(g);
        } else {
          auto& dst = *in.grid;
          dst.cells.insert(dst.cells.end(), g.cells.begin(), g.cells.end());
          dst.benign.insert(dst.benign.end(), g.benign.begin(), g.benign.end());
          for (double l : g.lengths)
            if (std::find(dst.lengths.begin(), dst.lengths.end(), l) == dst.lengths.end()) dst.lengths.push_back(l);
          for (double v : g.speeds)
            if (std::find(dst.speeds.begin(), dst.speeds.end(), v) == dst.speeds.end()) dst.speeds.push_back(v);
          std::sort(dst.lengths.begin(), dst.lengths.end());
          std::sort(dst.speeds.begin(), dst.speeds.end());
        }
      } else if (h == kBrightnessCsvHeader) {
        auto b = read_brightness_csv(f);
        in.brightness.insert(in.brightness.end(), b.begin(), b.end());
      }
    } catch (const csv::ParseError& e) {
      throw std::runtime_error(p.filename().string() + ": " + e.what());
    }
  }
  return in;
}

std::vector<fs::path> write_outcome_report(const std::vector<AttackOutcome>& outcomes, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const SweepStats stats = summarize(outcomes, Aggregation::PerPair);
  std::vector<std::pair<ChartSpec, std::vector<Series>>> panels;
  std::string table = "parameter,value,n,success_rate\n";
  for (std::string_view p : kSweepParameters) {
    Series s{"success rate", {}, {}};
    if (auto it = stats.rates.find(std::string(p)); it != stats.rates.end()) {
      for (const auto& [v, b] : it->second) {
        s.x.push_back(v);
        s.y.push_back(b.rate());
        table += std::string(p) + ',' + csv::fmt(v) + ',' + std::to_string(b.n) + ',' + csv::fmt(b.rate()) + '\n';
      }
    }
    ChartSpec spec{"Mean attack outcome by " + std::string(p), std::string(p), "success rate", 0.0, 1.0};
    panels.emplace_back(spec, std::vector<Series>{s});
  }
  std::vector<fs::path> written{out_dir / "outcome_by_parameter.svg", out_dir / "outcome_by_parameter.csv"};
  write_text(written[0], svg_panels(panels, 2));
  write_text(written[1], table);
  return written;
}

std::vector<fs::path> write_grid_report(const std::optional<sim::GridResult>& grid, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  Series success{"attack success", {}, {}}, combined{"success and not preventable", {}, {}};
  std::string table = "length_m,success_rate,combined_rate\n";
  if (grid) {
    const auto rates = grid->success_by_length();
    for (std::size_t i = 0; i < grid->lengths.size(); ++i) {
      const double len = grid->lengths[i];
      std::size_t n = 0, ok = 0;
      for (const auto& c : grid->cells) {
        if (c.length_m != len || c.verdict.inconclusive) continue;
        ++n;
        ok += c.verdict.combined ? 1 : 0;
      }
      const double comb = n ? static_cast<double>(ok) / n : 0.0;
      success.x.push_back(len);
      success.y.push_back(rates[i]);
      combined.x.push_back(len);
      combined.y.push_back(comb);
      table += csv::fmt(len) + ',' + csv::fmt(rates[i]) + ',' + csv::fmt(comb) + '\n';
    }
  }
  std::vector<fs::path> written{out_dir / "success_by_length.svg", out_dir / "success_by_length.csv"};
  write_text(written[0],
             svg_chart({"Success rate by NS length", "NS length (m)", "mean success", 0.0, 1.0}, {success, combined}));
  write_text(written[1], table);
  return written;
}

std::vector<fs::path> write_brightness_report(const std::vector<BrightnessPoint>& pts, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  Series onset{"onset distance", {}, {}};
  std::string table = "brightness,onset_distance_m\n";
  for (const auto& b : pts) {
    table += csv::fmt(b.brightness) + ',' + (b.onset_distance_m ? csv::fmt(*b.onset_distance_m) : "") + '\n';
    if (!b.onset_distance_m) continue;
    onset.x.push_back(b.brightness);
    onset.y.push_back(*b.onset_distance_m);
  }
  std::vector<fs::path> written{out_dir / "brightness_onset.svg", out_dir / "brightness_onset.csv"};
  write_text(written[0],
             svg_chart({"Misdetection onset vs NS brightness", "NS brightness factor", "onset distance (m)", 0.0, {}},
                       {onset}));
  write_text(written[1], table);
  return written;
}

std::vector<fs::path> write_report(const ReportInputs& in, const fs::path& out_dir) {
  std::vector<fs::path> all = write_outcome_report(in.outcomes, out_dir);
  for (auto& p : write_grid_report(in.grid, out_dir)) all.push_back(p);
  for (auto& p : write_brightness_report(in.brightness, out_dir)) all.push_back(p);
  return all;
}

}  // namespace shadowlane::report
