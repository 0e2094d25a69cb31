// Negative-shadow configurations, the lane-confinement purge and sweep batches.
#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace shadowlane {

struct NSConfig {
  double width_m = 0.16;
  double length_m = 25.0;
  double distance_m = 0.1;
  double beta_deg = 0.0;
  double brightness = 1.8;

  friend bool operator==(const NSConfig&, const NSConfig&) = default;
};

/// Throws std::invalid_argument when a field is out of range.
void validate(const NSConfig& cfg);

enum class PurgeVariant { PaperLiteral, Geometric };

PurgeVariant parse_purge_variant(std::string_view s);  // "literal" | "geometric"
std::string to_string(PurgeVariant v);

struct SweepBounds {
  std::vector<double> widths;
  std::vector<double> distances;
  std::vector<double> lengths;
  std::vector<double> betas;
  double lane_width = 4.0;
  double brightness = 1.8;

  /// W and D in 0.1..3.9 step 0.2, L in {1..10, 15, 25, 40}, beta in {0,5,10,15,30,45,90}.
  static SweepBounds standard();
  [[nodiscard]] std::size_t raw_size() const {
    return widths.size() * distances.size() * lengths.size() * betas.size();
  }
};

/// Slack on the lane-width comparison so grid points landing on the border survive.
inline constexpr double kPurgeTolerance = 1e-9;

double lateral_extent(const NSConfig& cfg, PurgeVariant variant);
bool survives_purge(const NSConfig& cfg, PurgeVariant variant, double lane_width);

/// Cartesian product ordered W-major, then D, L, beta; purged by lane_width.
std::vector<NSConfig> generate_sweep(const SweepBounds& bounds, PurgeVariant variant);

inline constexpr std::string_view kConfigCsvHeader = "width_m,length_m,beta_deg,distance_m,brightness";

void write_config_csv(std::ostream& out, const std::vector<NSConfig>& configs);
/// Throws csv::ParseError carrying the 1-based line number.
std::vector<NSConfig> read_config_csv(std::istream& in);
NSConfig parse_config_row(std::string_view row);

/// Writes ceil(N / rows_per_file) files named configs_NNNN.csv; returns them in order.
std::vector<std::filesystem::path> batch_csv(const std::vector<NSConfig>& configs,
                                             const std::filesystem::path& dir,
                                             std::size_t rows_per_file = 25);

/// Reads every *.csv in `dir` in lexicographic file-name order, or a single file.
std::vector<NSConfig> read_config_batch(const std::filesystem::path& path);

}  // namespace shadowlane
