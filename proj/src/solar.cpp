#include "featstore/solar.hpp"

#include <cmath>

#include "featstore/errors.hpp"

namespace featstore {

namespace {
constexpr double kDeg = M_PI / 180.0;
constexpr double kSolarConstant = 1361.0;  // W/m^2
constexpr double kTransmittance = 0.75;
constexpr double kMaxAirmass = 38.0;
}  // namespace

SolarPosition solar_position(double latitude_deg, double longitude_deg, int64_t t_utc) {
    if (latitude_deg < -90.0 || latitude_deg > 90.0 || !std::isfinite(latitude_deg))
        throw Error("InvalidLatitude", "latitude out of range: " + std::to_string(latitude_deg));

    // Meeus, Astronomical Algorithms ch. 25: low-accuracy sun position.
    const double jd = static_cast<double>(t_utc) / 86400.0 + 2440587.5;
    const double n = jd - 2451545.0;
    const double T = n / 36525.0;

    const double L0 = 280.46646 + 36000.76983 * T + 0.0003032 * T * T;
    const double M = 357.52911 + 35999.05029 * T - 0.0001537 * T * T;
    const double Mr = M * kDeg;
    const double C = (1.914602 - 0.004817 * T - 0.000014 * T * T) * std::sin(Mr) +
                     (0.019993 - 0.000101 * T) * std::sin(2.0 * Mr) + 0.000289 * std::sin(3.0 * Mr);
    const double true_long = L0 + C;

    const double omega = (125.04 - 1934.136 * T) * kDeg;
    const double lam = (true_long - 0.00569 - 0.00478 * std::sin(omega)) * kDeg;
    const double eps0 =
        23.0 + 26.0 / 60.0 + 21.448 / 3600.0 -
        (46.8150 * T + 0.00059 * T * T - 0.001813 * T * T * T) / 3600.0;
    const double eps = (eps0 + 0.00256 * std::cos(omega)) * kDeg;

    const double ra = std::atan2(std::cos(eps) * std::sin(lam), std::cos(lam));
    const double dec = std::asin(std::sin(eps) * std::sin(lam));

    double gmst = 280.46061837 + 360.98564736629 * n + 0.000387933 * T * T - T * T * T / 38710000.0;
    gmst = std::fmod(gmst, 360.0);
    if (gmst < 0.0) gmst += 360.0;
    const double lst = gmst + longitude_deg;  // east longitude positive

    double H = lst * kDeg - ra;
    H = std::atan2(std::sin(H), std::cos(H));  // normalize to [-pi, pi]

    const double phi = latitude_deg * kDeg;
    const double alt =
        std::asin(std::sin(phi) * std::sin(dec) + std::cos(phi) * std::cos(dec) * std::cos(H));
    const double az =
        std::atan2(std::sin(H), std::cos(H) * std::sin(phi) - std::tan(dec) * std::cos(phi));

    SolarPosition out;
    out.altitude = alt / kDeg;
    out.azimuth = std::fmod(az / kDeg + 180.0, 360.0);  // measured from North, clockwise
    if (out.azimuth < 0.0) out.azimuth += 360.0;
    if (out.azimuth >= 360.0) out.azimuth = 0.0;

    if (out.altitude > 0.0) {
        const double s = std::sin(alt);
        const double airmass = std::min(1.0 / s, kMaxAirmass);
        out.clear_sky_radiation = kSolarConstant * s * std::pow(kTransmittance, airmass);
    }
    return out;
}

}  // namespace featstore
