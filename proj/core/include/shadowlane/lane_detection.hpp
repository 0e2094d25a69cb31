// Lane detection: result type, detector interface, the classical reference
// pipeline and a subprocess adapter for external detectors.
#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "shadowlane/camera.hpp"
#include "shadowlane/raster.hpp"

namespace shadowlane {

struct Lane {
  std::vector<Vec2> points;  // camera pixels, bottom to top
  double confidence = 0;
  // camera-local road-plane fit X = c0 + c1 Y + c2 Y^2 over [y_near, y_far]
  std::array<double, 3> coeffs{0, 0, 0};
  double y_near = 0;
  double y_far = 0;
  double width_m = 0;  // median ridge width

  [[nodiscard]] double x_at(double y) const { return coeffs[0] + (coeffs[1] + coeffs[2] * y) * y; }
};

struct LaneDetectionResult {
  Mask mask;
  std::vector<Lane> lanes;
};

struct DetectorParams {
  int eq_tiles_x = 8;
  int eq_tiles_y = 8;
  double eq_clip = 96;  // largest per-tile level shift, gray levels
  double grad_low = 0.1;
  double grad_high = 0.3;
  int windows = 20;
  double window_half_width_m = 0.3;
  int min_pixels_per_window = 6;
  int min_windows = 4;
  int poly_degree = 2;
  double marking_width_m = 0.16;
  double max_lane_width_m = 0.40;  // 2.5x marking width; edge bias makes wide ridges read narrow
  double max_lane_angle_deg = 50;
  double base_fraction = 0.6;  // near share of BEV rows used for the base histogram
  int min_peak = 8;
  double min_peak_separation_m = 0.2;
  int band_px = 6;

  void validate() const;
};

struct Calibration {
  CameraModel camera;
  BevGrid grid;
};

/// Tile-wise level equalization: each tile's median is shifted toward the
/// global median (shift capped at `clip`) and shifts are bilinearly blended
/// between tile centres. `valid` may be null.
FloatRaster equalize_tiles(const FloatRaster& in, const Mask* valid, int tiles_x, int tiles_y, double clip);

/// Luma of `image` after the shadow-flattening equalization.
FloatRaster preprocess_only(const Image& image, const DetectorParams& params);

/// Per-row horizontal bands of `band_px` pixels centred on the polyline points.
Mask rasterize_lanes(const std::vector<Lane>& lanes, int width, int height, int band_px);

class LaneDetector {
 public:
  virtual ~LaneDetector() = default;
  virtual LaneDetectionResult detect(const Image& image) const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

class ReferenceDetector final : public LaneDetector {
 public:
  explicit ReferenceDetector(Calibration calib, DetectorParams params = {});

  LaneDetectionResult detect(const Image& image) const override;
  [[nodiscard]] std::string name() const override { return "reference"; }
  [[nodiscard]] const Calibration& calibration() const { return calib_; }
  [[nodiscard]] const DetectorParams& params() const { return params_; }

  /// Intermediate rasters of one run, for inspection and tests.
  struct Trace {
    FloatRaster bev_luma;
    Mask bev_valid;
    FloatRaster equalized;
    Mask edges;
  };
  LaneDetectionResult detect_traced(const Image& image, Trace* trace) const;

 private:
  Calibration calib_;
  DetectorParams params_;
  Mat3 ground_to_image_;
  std::vector<float> map_x_;  // camera sample position per BEV pixel
  std::vector<float> map_y_;
};

/// Runs `command` through the shell with a PPM on stdin; expects a PPM mask
/// followed by JSON lines {"lane":i,"confidence":c,"points":[[x,y],...]}.
class SubprocessDetector final : public LaneDetector {
 public:
  explicit SubprocessDetector(std::string command) : command_(std::move(command)) {}
  LaneDetectionResult detect(const Image& image) const override;
  [[nodiscard]] std::string name() const override { return "cmd:" + command_; }

 private:
  std::string command_;
};

/// Writes the plugin wire format (mask PPM, then one JSON line per lane).
void write_detection(std::ostream& out, const LaneDetectionResult& r);
LaneDetectionResult read_detection(std::istream& in);

/// "reference" or "cmd:<shell command>".
std::unique_ptr<LaneDetector> make_detector(const std::string& spec, const Calibration& calib,
                                            const DetectorParams& params = {});

}  // namespace shadowlane
