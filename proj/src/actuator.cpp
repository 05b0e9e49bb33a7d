#include "koop/actuator.hpp"

#include <sstream>
#include <stdexcept>

namespace koop {

double torque_coefficient(const ActuatorGeometry& geom, double theta_act_deg) {
    if (theta_act_deg < geom.theta_min) {
        std::ostringstream msg;
        msg << "torque_coefficient: actuator angle " << theta_act_deg
            << " deg below theta_min = " << geom.theta_min << " deg";
        throw std::out_of_range(msg.str());
    }
    if (theta_act_deg > geom.theta_max) {
        std::ostringstream msg;
        msg << "torque_coefficient: actuator angle " << theta_act_deg
            << " deg above theta_max = " << geom.theta_max << " deg";
        throw std::out_of_range(msg.str());
    }
    return geom.c20 * std::exp(-geom.lambda * (theta_act_deg - 20.0));
}

} // namespace koop
