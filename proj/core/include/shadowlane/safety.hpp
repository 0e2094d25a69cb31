// Closed-loop kinematic simulation of the three attack scenarios and the
// driver reaction-time model.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shadowlane/compositor.hpp"
#include "shadowlane/geometry.hpp"
#include "shadowlane/lane_detection.hpp"
#include "shadowlane/road.hpp"

namespace shadowlane::sim {

inline constexpr double kWheelbase = 2.85;
inline constexpr double kMaxSteer = 0.4;
inline constexpr double kReactionBudgetS = 2.5;

double mph_to_mps(double mph);

struct VehicleState {
  double x = 0;
  double y = 0;
  double heading = kPi / 2;  // rad, CCW from +x, in (-pi, pi]
  double speed = 0;          // m/s

  [[nodiscard]] Vec2 pos() const { return {x, y}; }
};

/// Kinematic bicycle about the rear axle. Positive steering turns right.
/// Exact for constant steering over dt. Throws on dt outside (0, 0.1].
VehicleState step(const VehicleState& s, double steer, double dt);

struct ControllerParams {
  double lookahead_min_m = 6.0;
  double lookahead_time_s = 1.2;
  double half_lane_m = 1.8;      // offset used when only one boundary is seen
  double camera_ahead_m = 1.4;   // camera position ahead of the rear axle
  double select_y_m = 6.0;       // range at which the innermost boundaries are chosen
  double max_near_m = 12.0;      // lanes starting beyond this range are ignored
  double memory_band_m = 4.0;    // nearest stretch of each frame's corridor centre that is remembered
  double local_window_m = 5.0;   // half-length of the remembered path fitted around the rear axle
};

struct ControlMemory {
  double last_steer = 0;
  std::vector<Vec2> centre_path;  // remembered corridor centre, world frame
};

/// Road-plane polyline fit of one detected lane (camera-local metres).
struct LaneCurve {
  double c0 = 0, c1 = 0, c2 = 0;
  double y_min = 0, y_max = 0;
  // circle through the same points (centre, radius); radius 0 when nearly straight
  Vec2 centre{0, 0};
  double radius = 0;
  [[nodiscard]] double x_at(double y) const { return c0 + (c1 + c2 * y) * y; }
};

/// Position, heading (from +y toward +x) and signed curvature (positive
/// turning toward +x) of a curve at a given forward range.
struct ArcState {
  double x = 0, theta = 0, kappa = 0;
};
ArcState arc_state(const LaneCurve& c, double y);
std::vector<LaneCurve> lane_curves(const LaneDetectionResult& r, const CameraModel& cam);

struct ControlDecision {
  double steer = 0;
  bool held = false;  // no usable boundary, last command repeated
  std::optional<LaneCurve> left, right;
  Vec2 target{0, 0};  // vehicle frame: x right, y forward of the rear axle
};

/// Pure pursuit toward the corridor between the innermost boundaries.
ControlDecision lane_center_control(const LaneDetectionResult& det, const VehicleState& s, const CameraModel& cam,
                                    ControlMemory& mem, const ControllerParams& p = {});

enum class HazardKind { OffRoad, Oncoming, BusStation };
std::string to_string(HazardKind k);

struct NSPlacement {
  double s0 = 0;         // along-road start
  double n_center = 0;   // lateral centre of the stripe at s0 (right positive)
  double width_m = 0.3;
  double angle_deg = 0;  // toward the right positive
};

/// Frenet box [s0, s1] x [n0, n1] on the road.
struct FrenetBox {
  double s0 = 0, s1 = 0, n0 = 0, n1 = 0;
};

struct ScenarioSpec {
  int id = 1;
  std::string name;
  RoadSpec road;
  double start_s = 5;
  double lane_center_n = 1.8;
  double end_s = 100;
  std::vector<NSPlacement> ns;  // stripes "A", "B"
  HazardKind hazard = HazardKind::OffRoad;
  FrenetBox hazard_box;
  // oncoming vehicle (scenario 2)
  bool npc = false;
  double npc_n = -1.8;
  double npc_meet_s = 0;  // road position where the NPC meets an undisturbed victim
  double collision_radius_m = 1.0;

  [[nodiscard]] Polygon hazard_polygon() const;
  void validate() const;
};

/// Built-in geometries: left turn off-road, head-on, bus station.
ScenarioSpec builtin_scenario(int id);

/// Key-value text ("key = value", '#' comments).
void write_scenario(std::ostream& out, const ScenarioSpec& s);
ScenarioSpec read_scenario(std::istream& in);

struct SimOptions {
  double dt = 0.1;
  double timeout_s = 30.0;
  double deviation_m = 0.15;
  CameraModel camera{320, 180, 150.0, 1.5, 9.0};
  BevGrid grid{-6.0, 6.0, 4.0, 34.0, 0.1};
  double shade_factor = 0.55;
  double brightness = 1.8;
  ControllerParams controller;
};

struct TrajectorySample {
  double t, x, y, heading, speed, lat_dev;
};

struct SafetyVerdict {
  bool inconclusive = false;
  std::string error;
  bool attack_success = false;
  std::optional<double> reaction_time_s;
  bool takeover_preventable = false;
  bool combined = false;
  std::optional<double> hazard_t;
  std::optional<double> deviation_t;
  double max_lat_dev = 0;  // from the lane centre
};

struct SimRun {
  SafetyVerdict verdict;
  std::vector<TrajectorySample> trajectory;
};

/// Reaction-time rule: t = d / v; preventable when t > budget.
double reaction_time(double distance_m, double speed_mps);
bool takeover_preventable(double reaction_s);

/// Calibration used by the simulator's detector.
Calibration sim_calibration(const SimOptions& o = {});

/// ns_length <= 0 runs the benign (no-shadow) case. `benign` is the
/// benign trajectory for the same speed, used to locate the first deviation.
SimRun run_scenario(const ScenarioSpec& spec, double speed_mph, double ns_length_m, const LaneDetector& det,
                    const SimOptions& o = {}, const std::vector<TrajectorySample>* benign = nullptr);

/// Frame as the vehicle camera would see it (for inspection).
Image render_frame(const ScenarioSpec& spec, const VehicleState& s, double ns_length_m, const SimOptions& o = {});

struct GridCell {
  int scenario = 0;
  double speed_mph = 0;
  double length_m = 0;
  SafetyVerdict verdict;
};

struct GridResult {
  std::vector<GridCell> cells;  // scenario-major, then speed, then length
  std::vector<GridCell> benign;  // one per scenario x speed (length 0)
  std::vector<double> lengths;
  std::vector<double> speeds;
  /// Mean success over scenarios and speeds for each length.
  [[nodiscard]] std::vector<double> success_by_length() const;
};

inline const std::vector<double> kGridSpeedsMph{10, 15, 20, 35, 60};
inline const std::vector<double> kGridLengthsM{10, 20, 30, 40, 50, 60, 70};

GridResult run_grid(const std::vector<ScenarioSpec>& scenarios, const LaneDetector& det,
                    const std::vector<double>& speeds = kGridSpeedsMph,
                    const std::vector<double>& lengths = kGridLengthsM, int workers = 1, const SimOptions& o = {});

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectorySample>& tr);
inline constexpr std::string_view kGridCsvHeader =
    "scenario,speed_mph,length_m,success,reaction_time_s,preventable,combined,inconclusive";
void write_grid_csv(std::ostream& out, const GridResult& g);
/// Rows with length 0 become benign runs. Throws csv::ParseError with the line number.
GridResult read_grid_csv(std::istream& in);

}  // namespace shadowlane::sim
