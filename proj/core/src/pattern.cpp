#include "shadowlane/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "shadowlane/csv.hpp"
#include "shadowlane/geometry.hpp"

namespace shadowlane {

void validate(const NSConfig& cfg) {
  auto finite_pos = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!finite_pos(cfg.width_m)) throw std::invalid_argument("NS width must be > 0");
  if (!finite_pos(cfg.length_m)) throw std::invalid_argument("NS length must be > 0");
  if (!std::isfinite(cfg.distance_m) || cfg.distance_m < 0.0) {
    throw std::invalid_argument("NS distance must be >= 0");
  }
  if (!(cfg.beta_deg >= 0.0 && cfg.beta_deg <= 90.0)) throw std::invalid_argument("beta must be in [0,90]");
  if (!(cfg.brightness >= 1.0) || !std::isfinite(cfg.brightness)) {
    throw std::invalid_argument("brightness must be >= 1");
  }
}

PurgeVariant parse_purge_variant(std::string_view s) {
  if (s == "literal" || s == "paper" || s == "PaperLiteral") return PurgeVariant::PaperLiteral;
  if (s == "geometric" || s == "Geometric") return PurgeVariant::Geometric;
  throw std::invalid_argument("unknown purge variant: " + std::string(s));
}

std::string to_string(PurgeVariant v) {
  return v == PurgeVariant::PaperLiteral ? "literal" : "geometric";
}

SweepBounds SweepBounds::standard() {
  SweepBounds b;
  for (int i = 0; i < 20; ++i) {
    b.widths.push_back((2 * i + 1) / 10.0);
    b.distances.push_back((2 * i + 1) / 10.0);
  }
  for (int l = 1; l <= 10; ++l) b.lengths.push_back(l);
  b.lengths.insert(b.lengths.end(), {15.0, 25.0, 40.0});
  b.betas = {0, 5, 10, 15, 30, 45, 90};
  return b;
}

double lateral_extent(const NSConfig& cfg, PurgeVariant variant) {
  const SinCos sc = sincosd(cfg.beta_deg);
  if (variant == PurgeVariant::PaperLiteral) {
    return cfg.distance_m + cfg.width_m * sc.s + cfg.length_m * sc.c;
  }
  return cfg.distance_m + cfg.width_m * sc.c + cfg.length_m * sc.s;
}

bool survives_purge(const NSConfig& cfg, PurgeVariant variant, double lane_width) {
  return lateral_extent(cfg, variant) <= lane_width + kPurgeTolerance;
}

std::vector<NSConfig> generate_sweep(const SweepBounds& bounds, PurgeVariant variant) {
  std::vector<NSConfig> out;
  for (double w : bounds.widths)
    for (double d : bounds.distances)
      for (double l : bounds.lengths)
        for (double b : bounds.betas) {
          const NSConfig cfg{w, l, d, b, bounds.brightness};
          if (survives_purge(cfg, variant, bounds.lane_width)) out.push_back(cfg);
        }
  return out;
}

void write_config_csv(std::ostream& out, const std::vector<NSConfig>& configs) {
  out << kConfigCsvHeader << '\n';
  for (const auto& c : configs) {
    out << csv::fmt(c.width_m) << ',' << csv::fmt(c.length_m) << ',' << csv::fmt(c.beta_deg)
        << ',' << csv::fmt(c.distance_m) << ',' << csv::fmt(c.brightness) << '\n';
  }
}

namespace {

NSConfig parse_fields(std::string_view row, std::size_t line_no) {
  const auto f = csv::split(csv::trim(row));
  if (f.size() != 4 && f.size() != 5) {
    throw csv::ParseError(line_no, "expected 4 or 5 fields, got " + std::to_string(f.size()));
  }
  NSConfig c;
  c.width_m = csv::parse_double(f[0], line_no);
  c.length_m = csv::parse_double(f[1], line_no);
  c.beta_deg = csv::parse_double(f[2], line_no);
  c.distance_m = csv::parse_double(f[3], line_no);
  if (f.size() == 5) c.brightness = csv::parse_double(f[4], line_no);
  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    throw csv::ParseError(line_no, e.what());
  }
  return c;
}

}  // namespace

NSConfig parse_config_row(std::string_view row) { return parse_fields(row, 1); }

std::vector<NSConfig> read_config_csv(std::istream& in) {
  std::vector<NSConfig> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = csv::trim(line);
    if (t.empty()) continue;
    if (line_no == 1 && t.starts_with("width_m")) continue;
    out.push_back(parse_fields(t, line_no));
  }
  return out;
}

std::vector<std::filesystem::path> batch_csv(const std::vector<NSConfig>& configs,
                                             const std::filesystem::path& dir,
                                             std::size_t rows_per_file) {
  if (configs.empty()) throw std::invalid_argument("batch_csv needs at least one config");
  if (rows_per_file == 0) throw std::invalid_argument("rows_per_file must be > 0");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> files;
  for (std::size_t start = 0, idx = 0; start < configs.size(); start += rows_per_file, ++idx) {
    char name[32];
    std::snprintf(name, sizeof name, "configs_%04zu.csv", idx);
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const auto end = std::min(configs.size(), start + rows_per_file);
    write_config_csv(out, std::vector<NSConfig>(configs.begin() + static_cast<std::ptrdiff_t>(start),
                                                configs.begin() + static_cast<std::ptrdiff_t>(end)));
    if (!out) throw std::runtime_error("failed writing " + path.string());
    files.push_back(path);
  }
  return files;
}

std::vector<NSConfig> read_config_batch(const std::filesystem::path& path) {
  auto read_one = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    try {
      return read_config_csv(in);
    } catch (const csv::ParseError& e) {
      throw std::runtime_error(p.string() + ": " + e.what());
    }
  };
  if (!std::filesystem::is_directory(path)) return read_one(path);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<NSConfig> out;
  for (const auto& f : files) {
    auto part = read_one(f);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace shadowlane
