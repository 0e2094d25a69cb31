// Low-precision solar ephemeris and cast-shadow length.
//
// Angles are degrees at every API boundary. The pipeline is
//   day_number -> orbital_elements -> eccentric_anomaly -> ecliptic_coords
//   -> to_equatorial -> to_horizontal
// and solar_position() runs it end to end.
#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

namespace shadowlane::solar {

struct CivilInstant {
  int year = 2000;
  int month = 1;
  int day = 1;
  double hour_utc = 0.0;
};

struct Observer {
  double latitude = 0.0;   // degrees north
  double longitude = 0.0;  // degrees east
};

struct OrbitalElements {
  double d = 0.0;
  double M = 0.0;       // mean anomaly
  double e = 0.0;       // eccentricity
  double oblecl = 0.0;  // obliquity of the ecliptic
  double w = 0.0;       // argument of perihelion
};

struct EclipticCoords {
  double x = 0.0;
  double y = 0.0;
  double r = 0.0;
  double true_longitude = 0.0;
};

struct EquatorialCoords {
  double x_equat = 0.0;
  double y_equat = 0.0;
  double z_equat = 0.0;
  double RA = 0.0;
  double Decl = 0.0;
};

struct HorizontalCoords {
  double x_hor = 0.0;
  double y_hor = 0.0;
  double z_hor = 0.0;
  double SA = 0.0;   // azimuth, 0 = north, 90 = east
  double ALT = 0.0;  // altitude above the horizon
};

struct OccluderSpec {
  double h = 0.0;      // mount height
  double L_occ = 0.0;  // panel length
  double theta = 0.0;  // tilt from vertical
};

struct SolarState {
  OrbitalElements elements;
  double E = 0.0;
  EclipticCoords ecliptic;
  EquatorialCoords equatorial;
  double hour_angle = 0.0;
  HorizontalCoords horizontal;
};

bool is_valid_date(int year, int month, int day);

/// Throws std::invalid_argument for an invalid date, hour or observer.
void validate(const CivilInstant& t);
void validate(const Observer& obs);
void validate(const OccluderSpec& occ);

double day_number(const CivilInstant& t);
OrbitalElements orbital_elements(double d);
double eccentric_anomaly(double M, double e);
EclipticCoords ecliptic_coords(double E, double e, double w);
EquatorialCoords to_equatorial(const EclipticCoords& ecl, double oblecl);

/// Hour angle in degrees for the instant and observer (sidereal time minus RA).
double hour_angle(const EquatorialCoords& eq, const Observer& obs, const CivilInstant& t);

/// Rotates the hour-angle/declination unit vector into the local horizon frame.
HorizontalCoords horizontal_from_hour_angle(double ha_deg, double decl_deg, double lat_deg);

HorizontalCoords to_horizontal(const EquatorialCoords& eq, const Observer& obs,
                               const CivilInstant& t);

SolarState solar_position(const CivilInstant& t, const Observer& obs);

/// Throws std::domain_error when ALT <= 0.
double shadow_length(const OccluderSpec& occ, double alt_deg);

struct ShadowSample {
  CivilInstant t;
  double azimuth_deg = 0;
  double altitude_deg = 0;
  std::optional<double> shadow_m;  // empty while the sun is down
};

/// Samples [t0.hour_utc, end_hour_utc] on t0's date every step_min minutes.
std::vector<ShadowSample> shadow_series(const Observer& obs, const OccluderSpec& occ, const CivilInstant& t0,
                                        double end_hour_utc, double step_min);

/// utc,azimuth_deg,altitude_deg,shadow_m with utc as YYYY-MM-DDTHH:MM:SSZ.
void write_shadow_csv(std::ostream& out, const std::vector<ShadowSample>& rows);

}  // namespace shadowlane::solar
