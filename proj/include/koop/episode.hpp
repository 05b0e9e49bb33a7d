#pragma once

#include "koop/plant.hpp"
#include "koop/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace koop {

enum class Mode { Passive, Active };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& s);

/// Reference trajectory. Sinusoid between lo and hi degrees:
/// (lo+hi)/2 + (hi-lo)/2 * sin(2 pi f t). Constant holds lo.
struct Reference {
    enum class Waveform { Sinusoid, Constant };
    Waveform waveform = Waveform::Sinusoid;
    double freq_hz = 0.2;
    double lo_deg = 90.0;
    double hi_deg = 120.0;

    double at(double t) const;
};

/// Simulated-patient effort policy for Active Mode: proportional effort
/// toward the reference with saturation and rate limiting, scaled by a
/// slowly wandering engagement level so muscle effort is informative
/// without mirroring the robot's controller.
struct PatientPolicy {
    double gain = 0.04;       // activation per degree of tracking error
    double act_max = 0.6;     // activation saturation
    double rate = 2.0;        // max activation slew, 1/s
    double engage_min = 0.4;  // engagement wanders in [engage_min, 1]
    double engage_period_s = 8.0; // mean time between engagement retargets
};

struct StepInput {
    int tick = 0;
    double t = 0.0;
    double dt = kControlDt;
    double theta_deg = 0.0;
    double ref_now_deg = 0.0;
    std::span<const double> ref_future_deg; // ticks k+1, k+2, ...
    std::span<const double> emg1_hist;      // envelopes for ticks 0..k-1
    std::span<const double> emg2_hist;
};

struct StepDiag {
    int qp_iters = 0;
    double kkt_residual = 0.0;
    double solve_ms = 0.0;
    bool solver_fault = false;
};

/// Per-tick duty-cycle controller. Stateful; one instance per episode.
class Controller {
public:
    virtual ~Controller() = default;
    virtual double step(const StepInput& in) = 0;
    virtual StepDiag last_diag() const { return {}; }
    virtual void reset() {}
};

/// Synchronized 100 Hz streams for one episode. The persisted columns are
/// tick, time_s, theta_deg, ref_deg, duty, emg_rms_ch1, emg_rms_ch2, mode,
/// qp_iters, kkt_res, deadline_miss; the remaining vectors are in-memory
/// diagnostics only (wall-clock times are not persisted so that reruns of
/// the same seeds reproduce files byte-for-byte).
struct EpisodeLog {
    double dt = kControlDt;
    Mode mode = Mode::Passive;
    std::vector<double> time_s, theta_deg, ref_deg, duty;
    std::vector<double> emg_rms_ch1, emg_rms_ch2;
    std::vector<int> qp_iters;
    std::vector<double> kkt_residual;
    std::vector<std::uint8_t> deadline_miss;

    // in-memory only
    std::vector<double> act_cmd_ext, act_cmd_flex, muscle_torque_nm, solve_ms;

    int ticks() const { return static_cast<int>(theta_deg.size()); }
};

struct SimScenario {
    Reference ref;
    Mode mode = Mode::Passive;
    double duration_s = 60.0;
    std::uint64_t seed = 1;
    PatientPolicy patient;
    double deadline_ms = 20.0;
};

/// Run one closed-loop episode at 100 Hz. The controller sees the measured
/// angle, the reference, and the EMG envelope history (strictly past
/// ticks); the plant applies muscle activations delayed by the
/// electromechanical delay while the EMG envelope tracks the commanded
/// activation. Deterministic for fixed (params, scenario, controller).
EpisodeLog simulate_episode(const PlantParams& params, const ActuatorGeometry& geom,
                            Controller& controller, const SimScenario& scenario);

void write_episode_log(const EpisodeLog& log, const std::filesystem::path& path);
EpisodeLog read_episode_log(const std::filesystem::path& path);

} // namespace koop
