#include "koop/episode.hpp"

#include "koop/emg_pipeline.hpp"
#include "koop/strfmt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace koop {

std::string to_string(Mode mode) {
    return mode == Mode::Passive ? "passive" : "active";
}

Mode mode_from_string(const std::string& s) {
    if (s == "passive") return Mode::Passive;
    if (s == "active") return Mode::Active;
    throw std::invalid_argument("unknown mode '" + s + "'");
}

double Reference::at(double t) const {
    if (waveform == Waveform::Constant) return lo_deg;
    const double mid = 0.5 * (lo_deg + hi_deg);
    const double amp = 0.5 * (hi_deg - lo_deg);
    return mid + amp * std::sin(2.0 * std::numbers::pi * freq_hz * t);
}

namespace {

/// Commanded-activation generator for the simulated patient.
class Patient {
public:
    Patient(const PatientPolicy& policy, Mode mode, Rng rng)
        : policy_(policy), mode_(mode), rng_(rng), engage_(1.0), engage_target_(1.0) {
        if (mode_ == Mode::Active) {
            engage_ = rng_.uniform(policy_.engage_min, 1.0);
            engage_target_ = engage_;
        }
    }

    // Returns commanded (pre-delay) activations for this tick.
    std::pair<double, double> step(double ref_deg, double theta_deg, double dt) {
        if (mode_ == Mode::Passive) return {0.0, 0.0};
        retarget_countdown_ -= dt;
        if (retarget_countdown_ <= 0.0) {
            engage_target_ = rng_.uniform(policy_.engage_min, 1.0);
            retarget_countdown_ = rng_.uniform(0.5, 1.5) * policy_.engage_period_s;
        }
        const double tau = 0.25 * policy_.engage_period_s;
        engage_ += dt / tau * (engage_target_ - engage_);

        const double err = ref_deg - theta_deg;
        const double want_ext = std::clamp(policy_.gain * std::max(err, 0.0) * engage_,
                                           0.0, policy_.act_max);
        const double want_flex = std::clamp(policy_.gain * std::max(-err, 0.0) * engage_,
                                            0.0, policy_.act_max);
        const double slew = policy_.rate * dt;
        ext_ += std::clamp(want_ext - ext_, -slew, slew);
        flex_ += std::clamp(want_flex - flex_, -slew, slew);
        return {ext_, flex_};
    }

private:
    PatientPolicy policy_;
    Mode mode_;
    Rng rng_;
    double engage_, engage_target_;
    double retarget_countdown_ = 0.0;
    double ext_ = 0.0, flex_ = 0.0;
};

} // namespace

EpisodeLog simulate_episode(const PlantParams& params, const ActuatorGeometry& geom,
                            Controller& controller, const SimScenario& scenario) {
    const double dt = kControlDt;
    const double n_exact = scenario.duration_s / dt;
    const int n = static_cast<int>(std::lround(n_exact));
    if (n <= 0 || std::abs(n_exact - n) > 1e-9) {
        throw std::invalid_argument("simulate_episode: duration must be a positive multiple of 20 ms");
    }

    constexpr int kPreview = 32; // reference ticks exposed beyond the horizon
    std::vector<double> ref(n + kPreview + 1);
    for (int k = 0; k < static_cast<int>(ref.size()); ++k) ref[k] = scenario.ref.at(k * dt);

    const int delay_ticks = static_cast<int>(std::lround(params.delay_s / dt));
    std::vector<double> cmd_ext_hist, cmd_flex_hist;

    EmgSynthesizer synth(params, scenario.seed);
    BandpassFilter env_filter1 = design_bandpass(kEmgRate, 20.0, 450.0);
    BandpassFilter env_filter2 = env_filter1;
    env_filter1.reset();
    env_filter2.reset();

    Patient patient(scenario.patient, scenario.mode, Rng(scenario.seed).fork(11));

    PlantState state;
    state.theta_deg = std::clamp(params.theta0, params.theta_lo, params.theta_hi);

    EpisodeLog log;
    log.dt = dt;
    log.mode = scenario.mode;
    log.time_s.reserve(n);

    controller.reset();

    for (int k = 0; k < n; ++k) {
        const double t = k * dt;

        StepInput in;
        in.tick = k;
        in.t = t;
        in.dt = dt;
        in.theta_deg = state.theta_deg;
        in.ref_now_deg = ref[k];
        in.ref_future_deg = std::span<const double>(ref).subspan(k + 1, kPreview);
        in.emg1_hist = std::span<const double>(log.emg_rms_ch1);
        in.emg2_hist = std::span<const double>(log.emg_rms_ch2);

        const auto t0 = std::chrono::steady_clock::now();
        double duty = controller.step(in);
        const double wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        duty = std::clamp(duty, -1.0, 1.0);
        const StepDiag diag = controller.last_diag();

        const auto [cmd_ext, cmd_flex] = patient.step(ref[k], state.theta_deg, dt);
        cmd_ext_hist.push_back(cmd_ext);
        cmd_flex_hist.push_back(cmd_flex);

        // Applied activation lags the command by the electromechanical delay.
        const int j = k - delay_ticks;
        state.activation_ext = j >= 0 ? cmd_ext_hist[j] : 0.0;
        state.activation_flex = j >= 0 ? cmd_flex_hist[j] : 0.0;

        // Raw EMG for this tick tracks the commanded activation.
        const auto frames = synth.tick(cmd_ext, cmd_flex);
        double acc1 = 0.0, acc2 = 0.0;
        for (int i = 0; i < kEmgSamplesPerTick; ++i) {
            const double f1 = env_filter1.step(frames[0].samples[i]);
            const double f2 = env_filter2.step(frames[1].samples[i]);
            acc1 += f1 * f1;
            acc2 += f2 * f2;
        }

        log.time_s.push_back(t);
        log.theta_deg.push_back(state.theta_deg);
        log.ref_deg.push_back(ref[k]);
        log.duty.push_back(duty);
        log.emg_rms_ch1.push_back(std::sqrt(acc1 / kEmgSamplesPerTick));
        log.emg_rms_ch2.push_back(std::sqrt(acc2 / kEmgSamplesPerTick));
        log.qp_iters.push_back(diag.qp_iters);
        log.kkt_residual.push_back(diag.kkt_residual);
        log.deadline_miss.push_back(wall_ms > scenario.deadline_ms ? 1 : 0);
        log.act_cmd_ext.push_back(cmd_ext);
        log.act_cmd_flex.push_back(cmd_flex);
        log.muscle_torque_nm.push_back(muscle_torque(params, state));
        log.solve_ms.push_back(diag.solve_ms > 0.0 ? diag.solve_ms : wall_ms);

        try {
            state = step_dynamics(params, geom, state, duty, dt);
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << e.what() << " (tick " << k << ")";
            throw std::runtime_error(msg.str());
        }
    }
    return log;
}

void write_episode_log(const EpisodeLog& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_episode_log: cannot open " + path.string());
    out << "tick time_s theta_deg ref_deg duty emg_rms_ch1 emg_rms_ch2 mode"
           " qp_iters kkt_res deadline_miss\n";
    const std::string mode = to_string(log.mode);
    for (int k = 0; k < log.ticks(); ++k) {
        out << k << ' ' << fmt_double(log.time_s[k]) << ' ' << fmt_double(log.theta_deg[k])
            << ' ' << fmt_double(log.ref_deg[k]) << ' ' << fmt_double(log.duty[k]) << ' '
            << fmt_double(log.emg_rms_ch1[k]) << ' ' << fmt_double(log.emg_rms_ch2[k]) << ' '
            << mode << ' ' << log.qp_iters[k] << ' ' << fmt_double(log.kkt_residual[k]) << ' '
            << int(log.deadline_miss[k]) << '\n';
    }
    if (!out) throw std::runtime_error("write_episode_log: write failed for " + path.string());
}

EpisodeLog read_episode_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_episode_log: cannot open " + path.string());
    std::string header;
    std::getline(in, header);
    const std::string expect =
        "tick time_s theta_deg ref_deg duty emg_rms_ch1 emg_rms_ch2 mode"
        " qp_iters kkt_res deadline_miss";
    if (header != expect) {
        throw std::runtime_error("read_episode_log: unexpected header in " + path.string());
    }
    EpisodeLog log;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        long tick = 0;
        std::string t, theta, ref, duty, e1, e2, mode, kkt;
        int qpi = 0, miss = 0;
        if (!(row >> tick >> t >> theta >> ref >> duty >> e1 >> e2 >> mode >> qpi >> kkt >> miss)) {
            throw std::runtime_error("read_episode_log: bad row at line " +
                                     std::to_string(lineno) + " in " + path.string());
        }
        log.mode = mode_from_string(mode);
        log.time_s.push_back(parse_double(t));
        log.theta_deg.push_back(parse_double(theta));
        log.ref_deg.push_back(parse_double(ref));
        log.duty.push_back(parse_double(duty));
        log.emg_rms_ch1.push_back(parse_double(e1));
        log.emg_rms_ch2.push_back(parse_double(e2));
        log.qp_iters.push_back(qpi);
        log.kkt_residual.push_back(parse_double(kkt));
        log.deadline_miss.push_back(static_cast<std::uint8_t>(miss));
    }
    return log;
}

} // namespace koop
