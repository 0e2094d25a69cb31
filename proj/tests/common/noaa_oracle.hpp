// Independent solar position reference (NOAA solar calculator formulation,
// Julian-century series). Test-only; shares no code with the library.
#pragma once

#include <algorithm>
#include <cmath>

namespace noaa {

struct Position {
  double azimuth;   // degrees clockwise from north
  double altitude;  // degrees, no refraction
};

inline double rad(double d) { return d * M_PI / 180.0; }
inline double deg(double r) { return r * 180.0 / M_PI; }

inline double julian_day(int year, int month, int day, double hour_utc) {
  if (month <= 2) {
    year -= 1;
    month += 12;
  }
  const int a = year / 100;
  const int b = 2 - a + a / 4;
  return std::floor(365.25 * (year + 4716)) + std::floor(30.6001 * (month + 1)) + day + b - 1524.5 +
         hour_utc / 24.0;
}

inline Position position(int year, int month, int day, double hour_utc, double lat, double lon) {
  const double T = (julian_day(year, month, day, hour_utc) - 2451545.0) / 36525.0;
  const double L0 = std::fmod(280.46646 + T * (36000.76983 + T * 0.0003032), 360.0);
  const double M = 357.52911 + T * (35999.05029 - 0.0001537 * T);
  const double e = 0.016708634 - T * (0.000042037 + 0.0000001267 * T);
  const double C = std::sin(rad(M)) * (1.914602 - T * (0.004817 + 0.000014 * T)) +
                   std::sin(rad(2 * M)) * (0.019993 - 0.000101 * T) + std::sin(rad(3 * M)) * 0.000289;
  const double true_long = L0 + C;
  const double omega = 125.04 - 1934.136 * T;
  const double lambda = true_long - 0.00569 - 0.00478 * std::sin(rad(omega));
  const double eps0 = 23.0 + (26.0 + (21.448 - T * (46.815 + T * (0.00059 - T * 0.001813))) / 60.0) / 60.0;
  const double eps = eps0 + 0.00256 * std::cos(rad(omega));
  const double decl = deg(std::asin(std::sin(rad(eps)) * std::sin(rad(lambda))));

  const double y = std::pow(std::tan(rad(eps / 2.0)), 2);
  const double eot = 4.0 * deg(y * std::sin(2 * rad(L0)) - 2 * e * std::sin(rad(M)) +
                               4 * e * y * std::sin(rad(M)) * std::cos(2 * rad(L0)) -
                               0.5 * y * y * std::sin(4 * rad(L0)) - 1.25 * e * e * std::sin(2 * rad(M)));
  double tst = std::fmod(hour_utc * 60.0 + eot + 4.0 * lon, 1440.0);
  if (tst < 0) tst += 1440.0;
  const double ha = tst / 4.0 < 0 ? tst / 4.0 + 180.0 : tst / 4.0 - 180.0;

  const double cos_zen = std::clamp(std::sin(rad(lat)) * std::sin(rad(decl)) +
                                        std::cos(rad(lat)) * std::cos(rad(decl)) * std::cos(rad(ha)),
                                    -1.0, 1.0);
  const double zen = deg(std::acos(cos_zen));
  double az;
  const double denom = std::cos(rad(lat)) * std::sin(rad(zen));
  if (std::abs(denom) > 1e-9) {
    const double c = std::clamp((std::sin(rad(lat)) * std::cos(rad(zen)) - std::sin(rad(decl))) / denom, -1.0, 1.0);
    az = ha > 0 ? std::fmod(deg(std::acos(c)) + 180.0, 360.0) : std::fmod(540.0 - deg(std::acos(c)), 360.0);
  } else {
    az = lat > 0 ? 180.0 : 0.0;
  }
  return {az, 90.0 - zen};
}

}  // namespace noaa
