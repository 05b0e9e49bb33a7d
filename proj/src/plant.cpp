#include "koop/plant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace koop {

double step_pressure(const PlantParams& params, double p_kpa, double duty, double dt) {
    if (std::abs(duty) > 1.0 + 1e-12 || std::isnan(duty)) {
        std::ostringstream msg;
        msg << "step_pressure: duty " << duty << " outside [-1, 1]";
        throw std::invalid_argument(msg.str());
    }
    const double p = p_kpa + dt * (params.k_pump * duty - params.k_leak * p_kpa);
    return std::clamp(p, params.p_min, params.p_max);
}

PlantState step_dynamics(const PlantParams& params, const ActuatorGeometry& geom,
                         const PlantState& state, double duty, double dt) {
    const double theta_act = knee_to_actuator_angle(geom, state.theta_deg);
    const double tau_act = torque_coefficient(geom, theta_act) * state.pressure_kpa;
    const double tau_grav = -params.gravity_torque *
                            std::sin((state.theta_deg - params.theta0) * kDegToRad);
    const double tau_mus = muscle_torque(params, state);

    const double omega = state.omega_deg_s * kDegToRad; // rad/s
    const double domega = (-params.damping * omega + tau_grav + tau_act + tau_mus) /
                          params.inertia;

    PlantState next = state;
    double omega_next = omega + dt * domega;
    double theta_next = state.theta_deg + dt * omega_next * kRadToDeg;
    if (theta_next <= params.theta_lo) {
        theta_next = params.theta_lo;
        omega_next = std::max(omega_next, 0.0);
    } else if (theta_next >= params.theta_hi) {
        theta_next = params.theta_hi;
        omega_next = std::min(omega_next, 0.0);
    }
    next.theta_deg = theta_next;
    next.omega_deg_s = omega_next * kRadToDeg;
    next.pressure_kpa = step_pressure(params, state.pressure_kpa, duty, dt);

    if (!std::isfinite(next.theta_deg) || !std::isfinite(next.omega_deg_s) ||
        !std::isfinite(next.pressure_kpa)) {
        throw std::runtime_error("step_dynamics: non-finite state after update");
    }
    return next;
}

EmgSynthesizer::EmgSynthesizer(const PlantParams& params, std::uint64_t seed)
    : gain_{params.emg_gain_ext, params.emg_gain_flex},
      noise_std_(params.emg_noise_std),
      carrier_rng_{Rng(seed).fork(101), Rng(seed).fork(102)},
      noise_rng_{Rng(seed).fork(201), Rng(seed).fork(202)} {
    BandpassFilter proto = design_bandpass(kEmgRate, 50.0, 150.0);
    carrier_scale_ = 1.0 / std::sqrt(proto.noise_power_gain());
    carrier_filter_ = {proto, proto};
    carrier_filter_[0].reset();
    carrier_filter_[1].reset();
}

double EmgSynthesizer::next_carrier(int ch) {
    return carrier_scale_ * carrier_filter_[ch].step(carrier_rng_[ch].gaussian());
}

std::array<RawEmgFrame, 2> EmgSynthesizer::tick(double act_ext_cmd, double act_flex_cmd) {
    const std::array<double, 2> act = {act_ext_cmd, act_flex_cmd};
    std::array<RawEmgFrame, 2> frames;
    for (int ch = 0; ch < 2; ++ch) {
        for (int i = 0; i < kEmgSamplesPerTick; ++i) {
            const double noise = noise_std_ > 0.0 ? noise_std_ * noise_rng_[ch].gaussian() : 0.0;
            frames[ch].samples[i] = gain_[ch] * act[ch] * next_carrier(ch) + noise;
        }
    }
    return frames;
}

EmgStreams synthesize_emg(const PlantParams& params,
                          const std::vector<double>& act_ext_cmd,
                          const std::vector<double>& act_flex_cmd,
                          std::uint64_t seed) {
    if (act_ext_cmd.size() != act_flex_cmd.size()) {
        throw std::invalid_argument("synthesize_emg: activation traces differ in length");
    }
    EmgSynthesizer synth(params, seed);
    EmgStreams out;
    out.channels[0].reserve(act_ext_cmd.size() * kEmgSamplesPerTick);
    out.channels[1].reserve(act_ext_cmd.size() * kEmgSamplesPerTick);
    for (std::size_t k = 0; k < act_ext_cmd.size(); ++k) {
        const auto frames = synth.tick(act_ext_cmd[k], act_flex_cmd[k]);
        for (int ch = 0; ch < 2; ++ch) {
            out.channels[ch].insert(out.channels[ch].end(), frames[ch].samples.begin(),
                                    frames[ch].samples.end());
        }
    }
    return out;
}

} // namespace koop
