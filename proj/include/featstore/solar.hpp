#pragma once

#include <cstdint>

namespace featstore {

struct SolarPosition {
    double altitude = 0.0;             // degrees above horizon, [-90, 90]
    double azimuth = 0.0;              // degrees clockwise from North, [0, 360)
    double clear_sky_radiation = 0.0;  // W/m^2, >= 0; 0 whenever altitude <= 0
};

// Sun geometry from a low-accuracy ephemeris reduction (Meeus), good to
// well under half a degree over the supported decades. Throws
// InvalidLatitude when |latitude| > 90.
SolarPosition solar_position(double latitude_deg, double longitude_deg, int64_t t_utc);

}  // namespace featstore
