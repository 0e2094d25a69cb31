// Run manifests and the SVG/CSV report bundle.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shadowlane/attack.hpp"
#include "shadowlane/safety.hpp"

namespace shadowlane::report {

struct Series {
  std::string name;
  std::vector<double> x, y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::optional<double> y_min, y_max;  // automatic when unset
  int width = 480;
  int height = 320;
};

/// Standalone SVG line chart. Fixed layout, no timestamps; empty series give bare axes.
std::string svg_chart(const ChartSpec& spec, const std::vector<Series>& series);

/// Charts tiled row-major into one SVG document.
std::string svg_panels(const std::vector<std::pair<ChartSpec, std::vector<Series>>>& panels, int columns);

struct RunManifest {
  std::string tool_version;
  std::string subcommand;
  std::map<std::string, std::string> params;  // fully resolved options
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 42;
  double duration_s = 0;

  [[nodiscard]] std::string to_json() const;
  /// Throws std::invalid_argument on malformed input.
  static RunManifest from_json(std::string_view text);
  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

inline constexpr std::string_view kManifestName = "manifest.json";
std::filesystem::path write_manifest(const std::filesystem::path& dir, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

struct ReportInputs {
  std::vector<AttackOutcome> outcomes;
  std::optional<sim::GridResult> grid;
  std::vector<BrightnessPoint> brightness;
};

/// Every *.csv in `dir` recognised by its header (outcomes, safety grid,
/// brightness); other files are skipped. Throws std::runtime_error naming the
/// file and line on malformed rows.
ReportInputs load_results(const std::filesystem::path& dir);

/// Per-parameter success panels: outcome_by_parameter.{svg,csv}.
std::vector<std::filesystem::path> write_outcome_report(const std::vector<AttackOutcome>& outcomes,
                                                        const std::filesystem::path& out_dir);
/// success_by_length.{svg,csv}; the rates are GridResult::success_by_length().
std::vector<std::filesystem::path> write_grid_report(const std::optional<sim::GridResult>& grid,
                                                     const std::filesystem::path& out_dir);
/// brightness_onset.{svg,csv}.
std::vector<std::filesystem::path> write_brightness_report(const std::vector<BrightnessPoint>& pts,
                                                           const std::filesystem::path& out_dir);

/// Writes outcome_by_parameter, success_by_length and brightness_onset as
/// .svg plus .csv; returns the paths in that order.
std::vector<std::filesystem::path> write_report(const ReportInputs& in, const std::filesystem::path& out_dir);

}  // namespace shadowlane::report
