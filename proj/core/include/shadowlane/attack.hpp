// Attack scoring: pre/post lane differencing, sweep orchestration, summary
// statistics and the brightness/approach experiment.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "shadowlane/compositor.hpp"
#include "shadowlane/lane_detection.hpp"
#include "shadowlane/pattern.hpp"

namespace shadowlane {

struct AttackOutcome {
  std::string scene_id;
  NSConfig config;
  std::size_t added_px = 0;
  std::size_t removed_px = 0;
  bool success = false;

  friend bool operator==(const AttackOutcome&, const AttackOutcome&) = default;
};

struct BinarizeParams {
  int block = 11;  // odd neighbourhood size
  double offset = 2;
};

/// Mean-of-neighbourhood binarization: on where v > max(0, mean - offset).
/// Binary 0/255 masks pass through unchanged.
Mask adaptive_binarize(const Mask& m, const BinarizeParams& p = {});

/// Set difference of two already binarized masks.
AttackOutcome diff_binarized(const Mask& pre, const Mask& post, double threshold);

/// Added/removed lane pixels after binarization; success = added > threshold.
AttackOutcome diff_lanes(const Mask& pre, const Mask& post, double threshold, const BinarizeParams& p = {});
AttackOutcome diff_lanes(const LaneDetectionResult& pre, const LaneDetectionResult& post, double threshold,
                         const BinarizeParams& p = {});

/// Rasterized pixel count of every detected lane, each drawn on its own.
std::vector<std::size_t> lane_pixel_counts(const LaneDetectionResult& r, int band_px = 6);

/// factor x median single-lane pixel count over all benign results.
/// Throws std::invalid_argument when no lane is found anywhere.
double calibrate_threshold(const std::vector<LaneDetectionResult>& benign, double factor = 0.5, int band_px = 6);

enum class Aggregation { PerPair, AnyScene, AllScenes };
std::string to_string(Aggregation a);

struct RateBucket {
  std::size_t n = 0;
  std::size_t successes = 0;
  [[nodiscard]] double rate() const { return n == 0 ? 0.0 : static_cast<double>(successes) / n; }
  friend bool operator==(const RateBucket&, const RateBucket&) = default;
};

struct Moments {
  std::size_t n = 0;
  double mean = 0;
  double stddev = 0;  // population
  friend bool operator==(const Moments&, const Moments&) = default;
};

inline constexpr std::string_view kSweepParameters[] = {"width_m", "length_m", "distance_m", "beta_deg"};

struct SweepStats {
  Aggregation aggregation = Aggregation::PerPair;
  std::size_t total = 0;
  std::size_t successes = 0;
  // parameter name -> parameter value -> bucket
  std::map<std::string, std::map<double, RateBucket>> rates;
  // parameter name -> moments over successful / failed units
  std::map<std::string, Moments> success_moments;
  std::map<std::string, Moments> failure_moments;

  [[nodiscard]] double success_rate() const { return total == 0 ? 0.0 : static_cast<double>(successes) / total; }
  friend bool operator==(const SweepStats&, const SweepStats&) = default;
};

double parameter_value(const NSConfig& c, std::string_view name);

/// Per-pair units, or per-config units succeeding in any / all scenes.
SweepStats summarize(const std::vector<AttackOutcome>& outcomes, Aggregation agg);

struct SweepOptions {
  ComposeOptions compose;
  int workers = 1;
  double threshold_factor = 0.5;
  BinarizeParams binarize;
};

struct SweepResult {
  double threshold = 0;
  std::vector<LaneDetectionResult> benign;  // one per scene
  std::vector<AttackOutcome> outcomes;      // scene-major, configs in input order
  SweepStats per_pair;
  SweepStats any_scene;
  SweepStats all_scenes;
};

/// Thrown by run_sweep when a pair fails; carries the pairs finished so far.
class SweepError : public std::runtime_error {
 public:
  SweepError(const std::string& what, std::vector<AttackOutcome> partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  [[nodiscard]] const std::vector<AttackOutcome>& partial() const { return partial_; }

 private:
  std::vector<AttackOutcome> partial_;
};

/// Calibrates on the benign scenes (unless `threshold` is given) and scores
/// every (scene, config) pair. Output does not depend on the worker count.
SweepResult run_sweep(const std::vector<RoadScene>& scenes, const std::vector<NSConfig>& configs,
                      const LaneDetector& detector, const SweepOptions& opts = {},
                      std::optional<double> threshold = std::nullopt);

inline constexpr std::string_view kOutcomeCsvHeader =
    "scene_id,width_m,length_m,beta_deg,distance_m,brightness,added_px,removed_px,success";
void write_outcomes_csv(std::ostream& out, const std::vector<AttackOutcome>& outcomes);
/// Throws csv::ParseError with the 1-based line number.
std::vector<AttackOutcome> read_outcomes_csv(std::istream& in);

/// Long-form stats table: aggregation,section,parameter,key,n,value
void write_stats_csv(std::ostream& out, const std::vector<SweepStats>& stats);

// Brightness / approach experiment.

struct BrightnessSweepOptions {
  std::vector<double> brightness_grid{1.05, 1.2, 1.4, 1.8, 2.4, 3.0};
  double start_m = 30.0;  // initial camera-to-NS distance
  double stop_m = 2.0;
  double step_m = 0.25;
  double lateral_tolerance_m = 0.15;
  ComposeOptions compose;
};

struct BrightnessPoint {
  double brightness = 0;
  std::optional<double> onset_distance_m;  // camera-to-NS distance at first detection
  std::optional<double> travel_m;          // distance driven before first detection
};

/// Published illuminance endpoints: (lux, misdetection distance in cm).
struct IlluminanceReference {
  double lux;
  double distance_cm;
};
inline constexpr IlluminanceReference kIlluminanceReference[] = {{40.0, 63.5}, {757.0, 10.16}};

/// True when some lane of `r` runs along the NS rectangle of `layer`.
bool lane_tracks_ns(const RoadScene& scene, const ShadowLayer& layer, const LaneDetectionResult& r,
                    double tolerance_m = 0.15);

std::vector<BrightnessPoint> brightness_sweep(const RoadScene& scene, const NSConfig& cfg, const LaneDetector& det,
                                              const BrightnessSweepOptions& opts = {});

inline constexpr std::string_view kBrightnessCsvHeader = "brightness,onset_distance_m,travel_m";
void write_brightness_csv(std::ostream& out, const std::vector<BrightnessPoint>& pts);
/// Throws csv::ParseError with the 1-based line number.
std::vector<BrightnessPoint> read_brightness_csv(std::istream& in);

}  // namespace shadowlane
