#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "noaa_oracle.hpp"
#include "shadowlane/solar.hpp"

namespace sl = shadowlane::solar;

namespace {

double angle_diff(double a, double b) {
  double d = std::fmod(std::abs(a - b), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

}  // namespace

TEST(DayNumber, Epochs) {
  EXPECT_EQ(sl::day_number({2000, 1, 1, 0.0}), 1.0);
  EXPECT_EQ(sl::day_number({1999, 12, 31, 0.0}), 0.0);
  EXPECT_EQ(sl::day_number({2024, 6, 21, 0.0}), 8939.0);
  EXPECT_DOUBLE_EQ(sl::day_number({2000, 1, 1, 12.0}), 1.5);
}

TEST(DayNumber, RejectsInvalidDates) {
  EXPECT_THROW(sl::day_number({2023, 2, 29, 0.0}), std::invalid_argument);
  EXPECT_THROW(sl::day_number({2024, 13, 1, 0.0}), std::invalid_argument);
  EXPECT_THROW(sl::day_number({2024, 4, 31, 0.0}), std::invalid_argument);
  EXPECT_THROW(sl::day_number({2024, 1, 1, 24.0}), std::invalid_argument);
  EXPECT_NO_THROW(sl::day_number({2024, 2, 29, 0.0}));
}

TEST(OrbitalElements, AtEpoch) {
  const auto el = sl::orbital_elements(0.0);
  EXPECT_DOUBLE_EQ(el.M, 356.0470);
  EXPECT_DOUBLE_EQ(el.e, 0.016709);
  EXPECT_DOUBLE_EQ(el.oblecl, 23.4393);
  EXPECT_DOUBLE_EQ(el.w, 282.9404);
  for (double d : {-36500.0, -1000.0, 5000.0, 36500.0}) {
    const auto e2 = sl::orbital_elements(d);
    EXPECT_GT(e2.e, 0.016);
    EXPECT_LT(e2.e, 0.017);
    EXPECT_GE(e2.M, 0.0);
    EXPECT_LT(e2.M, 360.0);
    EXPECT_GT(e2.oblecl, 23.0);
    EXPECT_LT(e2.oblecl, 24.0);
  }
}

TEST(EccentricAnomaly, OneStep) {
  EXPECT_DOUBLE_EQ(sl::eccentric_anomaly(0.0, 0.05), 0.0);
  EXPECT_NEAR(sl::eccentric_anomaly(180.0, 0.05), 180.0, 1e-12);
  const double e = 0.016709;
  EXPECT_NEAR(sl::eccentric_anomaly(90.0, e), 90.0 + 180.0 / M_PI * e, 1e-12);
  EXPECT_NEAR(sl::eccentric_anomaly(90.0, e), 90.957, 1e-3);
}

TEST(Ecliptic, PerihelionAndQuadrature) {
  const double e = 0.016709;
  const auto p = sl::ecliptic_coords(0.0, e, 0.0);
  EXPECT_DOUBLE_EQ(p.x, 1.0 - e);
  EXPECT_DOUBLE_EQ(p.y, 0.0);
  const auto q = sl::ecliptic_coords(90.0, e, 0.0);
  EXPECT_NEAR(q.x, -0.016709, 1e-12);
  EXPECT_NEAR(q.y, 0.99986, 1e-5);
  for (double E = 0; E < 360; E += 7.5) {
    const auto c = sl::ecliptic_coords(E, e, 282.9);
    EXPECT_GT(c.r, 1 - e - 1e-9);
    EXPECT_LT(c.r, 1 + e + 1e-9);
  }
}

TEST(Equatorial, SpecialDirections) {
  sl::EclipticCoords ecl{0, 0, 1.0, 37.0};
  const auto flat = sl::to_equatorial(ecl, 0.0);
  EXPECT_NEAR(flat.z_equat, 0.0, 1e-15);
  EXPECT_NEAR(flat.Decl, 0.0, 1e-12);
  EXPECT_NEAR(flat.y_equat, std::sin(37.0 * M_PI / 180.0), 1e-12);

  ecl.true_longitude = 0.0;
  const auto vernal = sl::to_equatorial(ecl, 23.4393);
  EXPECT_NEAR(vernal.RA, 0.0, 1e-12);
  EXPECT_NEAR(vernal.Decl, 0.0, 1e-12);

  ecl.true_longitude = 90.0;
  const auto solstice = sl::to_equatorial(ecl, 23.4393);
  EXPECT_NEAR(solstice.Decl, 23.4393, 1e-9);
  EXPECT_NEAR(std::hypot(solstice.x_equat, solstice.y_equat, solstice.z_equat), 1.0, 1e-12);
}

TEST(Horizontal, Culmination) {
  EXPECT_NEAR(sl::horizontal_from_hour_angle(0.0, 34.0, 34.0).ALT, 90.0, 1e-9);
  EXPECT_NEAR(sl::horizontal_from_hour_angle(0.0, 0.0, 34.0).ALT, 56.0, 1e-9);
  // due south at culmination for a northern observer
  EXPECT_NEAR(sl::horizontal_from_hour_angle(0.0, 0.0, 34.0).SA, 180.0, 1e-9);
  // morning sun (negative hour angle) lies east
  const auto am = sl::horizontal_from_hour_angle(-60.0, 10.0, 34.0);
  EXPECT_GT(am.SA, 0.0);
  EXPECT_LT(am.SA, 180.0);
}

TEST(Horizontal, UnitNormPreserved) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ha(0, 360), dec(-23.5, 23.5), lat(-90, 90);
  for (int i = 0; i < 500; ++i) {
    const auto h = sl::horizontal_from_hour_angle(ha(rng), dec(rng), lat(rng));
    EXPECT_NEAR(h.x_hor * h.x_hor + h.y_hor * h.y_hor + h.z_hor * h.z_hor, 1.0, 1e-9);
  }
}

TEST(SolarPosition, JuneNoonAgainstOracle) {
  const sl::CivilInstant t{2024, 6, 21, 17.0};
  const sl::Observer obs{34.0, -82.0};
  const auto s = sl::solar_position(t, obs);
  const auto ref = noaa::position(t.year, t.month, t.day, t.hour_utc, obs.latitude, obs.longitude);
  EXPECT_NEAR(s.horizontal.ALT, ref.altitude, 1.0);
  EXPECT_NEAR(s.horizontal.ALT, 79.0, 1.5);
}

TEST(SolarPosition, RandomSamplesAgreeWithOracle) {
  std::mt19937 rng(20240621);
  std::uniform_int_distribution<int> year(1950, 2100), month(1, 12), day(1, 28);
  std::uniform_real_distribution<double> hour(0.0, 23.999), lat(-66.0, 66.0), lon(-180.0, 180.0);
  for (int i = 0; i < 100; ++i) {
    const sl::CivilInstant t{year(rng), month(rng), day(rng), hour(rng)};
    const sl::Observer obs{lat(rng), lon(rng)};
    const auto s = sl::solar_position(t, obs);
    const auto ref = noaa::position(t.year, t.month, t.day, t.hour_utc, obs.latitude, obs.longitude);
    EXPECT_NEAR(s.horizontal.ALT, ref.altitude, 1.0) << "sample " << i;
    if (ref.altitude < 89.0) EXPECT_LT(angle_diff(s.horizontal.SA, ref.azimuth), 1.0) << "sample " << i;
    EXPECT_LE(std::abs(s.equatorial.Decl), s.elements.oblecl + 1e-9);
  }
}

TEST(SolarPosition, AltitudeUnimodalOverDay) {
  const sl::Observer obs{34.0, -82.0};
  double prev = -100;
  bool falling = false;
  for (int m = 0; m < 24 * 60; m += 5) {
    const double alt = sl::solar_position({2024, 3, 10, m / 60.0}, obs).horizontal.ALT;
    if (alt <= 0) continue;
    if (alt < prev) falling = true;
    if (falling) EXPECT_LE(alt, prev + 1e-9);
    prev = alt;
  }
}

TEST(ShadowLength, UnitCases) {
  EXPECT_EQ(sl::shadow_length({10.0, 0.0, 0.0}, 45.0), 10.0);
  EXPECT_EQ(sl::shadow_length({0.0, 10.0, 90.0}, 30.0), 20.0);
  EXPECT_THROW(sl::shadow_length({10.0, 0.0, 0.0}, 0.0), std::domain_error);
  EXPECT_THROW(sl::shadow_length({10.0, 0.0, 0.0}, -5.0), std::domain_error);
  EXPECT_THROW(sl::shadow_length({0.0, 0.0, 0.0}, 30.0), std::invalid_argument);
}

TEST(ShadowLength, DecreasingInAltitude) {
  const sl::OccluderSpec occ{10.0, 10.0, 45.0};
  double prev = sl::shadow_length(occ, 0.5);
  for (double alt = 1.0; alt < 90.0; alt += 0.5) {
    const double s = sl::shadow_length(occ, alt);
    EXPECT_LT(s, prev);
    prev = s;
  }
}
