#pragma once

#include <cmath>

namespace koop {

/// Torque-pressure characteristic of the origami pneumatic actuator.
///
/// The coefficient c(theta) = tau/p decays exponentially with the total
/// actuator fold angle: c(theta) = c20 * exp(-lambda * (theta - 20)).
/// Defaults anchor 17 Nm at 30 kPa and a 20 deg actuator angle, halving
/// over the 20..100 deg working range.
struct ActuatorGeometry {
    double c20 = 17.0 / 30.0;          // Nm/kPa at a 20 deg actuator angle
    double lambda = std::log(2.0) / 80.0; // 1/deg decay rate
    double theta_min = 10.0;           // deg, movable actuator range
    double theta_max = 350.0;          // deg
    double knee_offset = 60.0;         // deg, lower-leg connector angle

    bool valid() const {
        return c20 > 0.0 && lambda > 0.0 && theta_min < theta_max;
    }
};

/// Torque per unit pressure (Nm/kPa) at actuator angle theta_act (deg).
/// Throws std::out_of_range outside [theta_min, theta_max].
double torque_coefficient(const ActuatorGeometry& geom, double theta_act_deg);

/// Actuator fold angle for a given knee angle: theta_knee - knee_offset.
inline double knee_to_actuator_angle(const ActuatorGeometry& geom, double theta_knee_deg) {
    return theta_knee_deg - geom.knee_offset;
}

} // namespace koop
