// Luminosity-filter pre-processing: find bright blobs enclosed by shadow and
// paint them over before lane detection.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <vector>

#include "shadowlane/attack.hpp"
#include "shadowlane/compositor.hpp"
#include "shadowlane/lane_detection.hpp"
#include "shadowlane/raster.hpp"

namespace shadowlane {

struct DefenseParams {
  int margin_px = 4;          // width of the ring inspected around each component
  int window_px = 24;         // half-size of the local surround mean
  double threshold = 18;      // normalized gray levels above the surround mean
  double enclosure = 0.7;     // ring fraction that must be shadow-dark
  double shadow_level = 0.8;  // dark means below this fraction of the pavement level
  int fill_radius_px = 5;
  int grow_px = 1;            // suppressed components are dilated by this much
  int min_area_px = 6;

  void validate() const;
  static DefenseParams disabled() {
    DefenseParams p;
    p.threshold = std::numeric_limits<double>::infinity();
    return p;
  }
};

/// "key = value" lines with DefenseParams field names; '#' starts a comment.
/// Unset keys keep their defaults. Throws csv::ParseError with the line number.
DefenseParams read_defense_params(std::istream& in);
void write_defense_params(std::ostream& out, const DefenseParams& p);

/// Luma rescaled to mean 128 and standard deviation 48.
FloatRaster normalize_luminance(const Image& image);

struct FilterReport {
  std::size_t components = 0;  // bright anomalies found
  std::size_t suppressed = 0;
  std::size_t filled_px = 0;
};

/// Pixels outside the suppressed components (grown by grow_px) are copied unchanged.
Image luminosity_filter(const Image& image, const DefenseParams& params = {}, FilterReport* report = nullptr);

struct DefenseEvaluation {
  std::size_t n = 0;
  std::size_t defended = 0;
  [[nodiscard]] double rate() const { return n == 0 ? 0.0 : static_cast<double>(defended) / n; }
};

/// Re-scores previously successful outcomes with the filter in front of the
/// detector (benign references filtered too). Throws std::invalid_argument on
/// empty input, an unsuccessful outcome, or an unknown scene id.
DefenseEvaluation defense_rate(const std::vector<AttackOutcome>& successes, const std::vector<RoadScene>& scenes,
                               const LaneDetector& detector, double threshold, const DefenseParams& params = {},
                               const ComposeOptions& compose_opts = {}, int workers = 1);

/// Scenes whose filtered detection loses genuine lane pixels (removed > threshold).
std::size_t benign_regressions(const std::vector<RoadScene>& scenes, const LaneDetector& detector, double threshold,
                               const DefenseParams& params = {});

}  // namespace shadowlane
