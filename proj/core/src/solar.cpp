#include "shadowlane/solar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "shadowlane/csv.hpp"
#include "shadowlane/geometry.hpp"

namespace shadowlane::solar {
namespace {

double sind(double a) { return sincosd(a).s; }
double cosd(double a) { return sincosd(a).c; }

// floor division; the day-number formula is written for integer division that
// truncates toward minus infinity.
long fdiv(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

bool is_valid_date(int year, int month, int day) {
  if (month < 1 || month > 12 || day < 1) return false;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  const int limit = kDays[month - 1] + (month == 2 && leap ? 1 : 0);
  return day <= limit;
}

void validate(const CivilInstant& t) {
  if (!is_valid_date(t.year, t.month, t.day)) throw std::invalid_argument("invalid calendar date");
  if (!(t.hour_utc >= 0.0 && t.hour_utc < 24.0)) throw std::invalid_argument("hour_utc must be in [0,24)");
}

void validate(const Observer& obs) {
  if (!(obs.latitude >= -90.0 && obs.latitude <= 90.0)) throw std::invalid_argument("latitude out of range");
  if (!(obs.longitude >= -180.0 && obs.longitude <= 180.0)) throw std::invalid_argument("longitude out of range");
}

void validate(const OccluderSpec& occ) {
  if (!(occ.h >= 0.0) || !(occ.L_occ >= 0.0)) throw std::invalid_argument("occluder dimensions must be >= 0");
  if (occ.h == 0.0 && occ.L_occ == 0.0) throw std::invalid_argument("occluder has no extent");
  if (!(occ.theta >= 0.0 && occ.theta <= 90.0)) throw std::invalid_argument("tilt must be in [0,90]");
}

double day_number(const CivilInstant& t) {
  validate(t);
  const long y = t.year;
  const long m = t.month;
  const long d = 367 * y - fdiv(7 * (y + fdiv(m + 9, 12)), 4) + fdiv(275 * m, 9) + t.day - 730530;
  return static_cast<double>(d) + t.hour_utc / 24.0;
}

OrbitalElements orbital_elements(double d) {
  OrbitalElements el;
  el.d = d;
  el.M = normalize_deg(356.0470 + 0.9856002585 * d);
  el.e = 0.016709 - 1.151e-9 * d;
  el.oblecl = 23.4393 - 3.563e-7 * d;
  el.w = normalize_deg(282.9404 + 4.70935e-5 * d);
  return el;
}

double eccentric_anomaly(double M, double e) {
  return M + rad2deg(e) * sind(M) * (1.0 + e * cosd(M));
}

EclipticCoords ecliptic_coords(double E, double e, double w) {
  EclipticCoords c;
  c.x = cosd(E) - e;
  c.y = sind(E) * std::sqrt(1.0 - e * e);
  c.r = std::hypot(c.x, c.y);
  const double v = rad2deg(std::atan2(c.y, c.x));
  c.true_longitude = normalize_deg(v + w);
  return c;
}

EquatorialCoords to_equatorial(const EclipticCoords& ecl, double oblecl) {
  const double xs = ecl.r * cosd(ecl.true_longitude);
  const double ys = ecl.r * sind(ecl.true_longitude);
  EquatorialCoords q;
  q.x_equat = xs;
  q.y_equat = ys * cosd(oblecl);
  q.z_equat = ys * sind(oblecl);
  q.RA = normalize_deg(rad2deg(std::atan2(q.y_equat, q.x_equat)));
  q.Decl = rad2deg(std::asin(std::clamp(q.z_equat / ecl.r, -1.0, 1.0)));
  return q;
}

double hour_angle(const EquatorialCoords& eq, const Observer& obs, const CivilInstant& t) {
  const OrbitalElements el = orbital_elements(day_number(t));
  // sidereal time at 0h UT from the sun's mean longitude
  const double gmst0 = normalize_deg(el.M + el.w) / 15.0 + 12.0;
  const double lst = gmst0 + t.hour_utc + obs.longitude / 15.0;
  return normalize_deg(15.0 * lst - eq.RA);
}

HorizontalCoords horizontal_from_hour_angle(double ha_deg, double decl_deg, double lat_deg) {
  const double x = cosd(ha_deg) * cosd(decl_deg);
  const double y = sind(ha_deg) * cosd(decl_deg);
  const double z = sind(decl_deg);
  HorizontalCoords h;
  h.x_hor = x * sind(lat_deg) - z * cosd(lat_deg);
  h.y_hor = y;
  h.z_hor = x * cosd(lat_deg) + z * sind(lat_deg);
  h.SA = normalize_deg(rad2deg(std::atan2(h.y_hor, h.x_hor)) + 180.0);
  h.ALT = rad2deg(std::asin(std::clamp(h.z_hor, -1.0, 1.0)));
  return h;
}

HorizontalCoords to_horizontal(const EquatorialCoords& eq, const Observer& obs,
                               const CivilInstant& t) {
  validate(obs);
  return horizontal_from_hour_angle(hour_angle(eq, obs, t), eq.Decl, obs.latitude);
}

SolarState solar_position(const CivilInstant& t, const Observer& obs) {
  validate(obs);
  SolarState s;
  s.elements = orbital_elements(day_number(t));
  s.E = eccentric_anomaly(s.elements.M, s.elements.e);
  s.ecliptic = ecliptic_coords(s.E, s.elements.e, s.elements.w);
  s.equatorial = to_equatorial(s.ecliptic, s.elements.oblecl);
  s.hour_angle = hour_angle(s.equatorial, obs, t);
  s.horizontal = horizontal_from_hour_angle(s.hour_angle, s.equatorial.Decl, obs.latitude);
  return s;
}

double shadow_length(const OccluderSpec& occ, double alt_deg) {
  validate(occ);
  if (!(alt_deg > 0.0)) throw std::domain_error("sun below horizon, shadow undefined");
  const SinCos a = sincosd(alt_deg);
  return occ.h * a.c / a.s + occ.L_occ * sind(occ.theta) / a.s;
}

std::vector<ShadowSample> shadow_series(const Observer& obs, const OccluderSpec& occ, const CivilInstant& t0,
                                        double end_hour_utc, double step_min) {
  validate(t0);
  validate(occ);
  if (!(step_min > 0)) throw std::invalid_argument("step must be positive");
  if (end_hour_utc < t0.hour_utc || end_hour_utc >= 24) throw std::invalid_argument("end time out of range");
  std::vector<ShadowSample> out;
  const auto steps = static_cast<long>(std::floor((end_hour_utc - t0.hour_utc) * 60.0 / step_min + 1e-9));
  for (long i = 0; i <= steps; ++i) {
    ShadowSample s;
    s.t = t0;
    s.t.hour_utc = t0.hour_utc + static_cast<double>(i) * step_min / 60.0;
    const SolarState st = solar_position(s.t, obs);
    s.azimuth_deg = st.horizontal.SA;
    s.altitude_deg = st.horizontal.ALT;
    if (s.altitude_deg > 0) s.shadow_m = shadow_length(occ, s.altitude_deg);
    out.push_back(s);
  }
  return out;
}

void write_shadow_csv(std::ostream& out, const std::vector<ShadowSample>& rows) {
  out << "utc,azimuth_deg,altitude_deg,shadow_m\n";
  for (const auto& r : rows) {
    const long secs = std::lround(r.t.hour_utc * 3600.0);
    char stamp[40];
    std::snprintf(stamp, sizeof stamp, "%04d-%02d-%02dT%02ld:%02ld:%02ldZ", r.t.year, r.t.month, r.t.day, secs / 3600,
                  secs / 60 % 60, secs % 60);
    out << stamp << ',' << csv::fmt_fixed(r.azimuth_deg, 4) << ',' << csv::fmt_fixed(r.altitude_deg, 4) << ','
        << (r.shadow_m ? csv::fmt_fixed(*r.shadow_m, 3) : "") << '\n';
  }
}

}  // namespace shadowlane::solar
