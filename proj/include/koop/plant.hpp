#pragma once

#include "koop/actuator.hpp"
#include "koop/emg_pipeline.hpp"
#include "koop/rng.hpp"
#include "koop/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace koop {

/// Physical parameters of the simulated human-knee / pneumatic-actuator
/// coupled system. Defaults give shank-scale dynamics; personalization
/// experiments perturb them per subject.
struct PlantParams {
    double inertia = 0.12;        // J, kg m^2 about the knee
    double damping = 0.8;         // b, Nm s/rad
    double gravity_torque = 8.0;  // mgl, Nm
    double theta0 = 90.0;         // rest angle, deg
    double k_pump = 120.0;        // kPa/s at full duty
    double k_leak = 0.5;          // 1/s
    double p_min = -80.0;         // kPa
    double p_max = 80.0;          // kPa
    double tau_ext_max = 12.0;    // Nm, extensor at full activation
    double tau_flex_max = 12.0;   // Nm, flexor at full activation
    double emg_gain_ext = 1.0;    // raw EMG units per unit activation
    double emg_gain_flex = 1.0;
    double emg_noise_std = 0.02;  // additive white noise on raw EMG
    double delay_s = 0.2;         // electromechanical delay, EMG leads torque
    double theta_lo = 80.0;       // joint stop, deg
    double theta_hi = 160.0;      // joint stop, deg
};

struct PlantState {
    double theta_deg = 90.0;
    double omega_deg_s = 0.0;
    double pressure_kpa = 0.0;
    double activation_ext = 0.0;  // applied (post-delay) activation in [0,1]
    double activation_flex = 0.0;
};

/// 20 consecutive raw EMG samples, one control tick of one channel at 2000 Hz.
struct RawEmgFrame {
    std::array<double, kEmgSamplesPerTick> samples{};
};

/// First-order pump/leak pressure update with saturation:
/// p' = clamp(p + dt (k_pump duty - k_leak p), p_min, p_max).
/// The sign of duty selects the inflate/deflate circuit.
/// Throws std::invalid_argument when |duty| > 1.
double step_pressure(const PlantParams& params, double p_kpa, double duty, double dt);

/// One semi-implicit Euler step of
///   J w' = -b w - mgl sin(theta - theta0) + c(theta - offset) p + tau_muscle
/// with tau_muscle = tau_ext_max a_ext - tau_flex_max a_flex using the
/// state's (already delayed) activations. Joint stops clamp theta to
/// [theta_lo, theta_hi] and zero the velocity at contact; pressure is
/// advanced by step_pressure. Throws on non-finite results.
PlantState step_dynamics(const PlantParams& params, const ActuatorGeometry& geom,
                         const PlantState& state, double duty, double dt);

/// Muscle torque produced by the state's applied activations (Nm).
inline double muscle_torque(const PlantParams& params, const PlantState& state) {
    return params.tau_ext_max * state.activation_ext -
           params.tau_flex_max * state.activation_flex;
}

/// Streams raw EMG for the two muscle channels. Each sample is
/// gain * activation * carrier + noise where the carrier is a zero-mean,
/// band-limited (50-150 Hz), unit-variance pseudo-random process. The
/// envelope tracks the commanded activation, which leads applied muscle
/// torque by the electromechanical delay.
class EmgSynthesizer {
public:
    EmgSynthesizer(const PlantParams& params, std::uint64_t seed);

    /// Raw samples for one control tick; activations are the commanded
    /// values held over the tick.
    std::array<RawEmgFrame, 2> tick(double act_ext_cmd, double act_flex_cmd);

private:
    double next_carrier(int ch);

    std::array<double, 2> gain_;
    double noise_std_;
    std::array<BandpassFilter, 2> carrier_filter_;
    double carrier_scale_ = 1.0;
    std::array<Rng, 2> carrier_rng_;
    std::array<Rng, 2> noise_rng_;
};

/// Whole-trace convenience wrapper: activation traces at 100 Hz in, raw
/// 2000 Hz streams out (one per channel). Deterministic per seed.
struct EmgStreams {
    std::array<std::vector<double>, 2> channels;
};
EmgStreams synthesize_emg(const PlantParams& params,
                          const std::vector<double>& act_ext_cmd,
                          const std::vector<double>& act_flex_cmd,
                          std::uint64_t seed);

} // namespace koop
