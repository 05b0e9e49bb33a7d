#pragma once

#include "koop/episode.hpp"
#include "koop/koopman_model.hpp"
#include "koop/qp.hpp"

namespace koop {

struct MpcConfig {
    int horizon = 10;    // N
    double q = 1.0;      // tracking-error weight
    double r = 0.25;     // control-effort weight
    double u_min = -1.0;
    double u_max = 1.0;
    double qp_tol = 1e-6;
    int qp_max_iters = 200;
    int delta = 10;      // EMG lead in ticks; horizon must not exceed it

    void validate() const;
};

/// Receding-horizon condensation of the lifted linear model: states are
/// eliminated, leaving the N duty inputs as decision variables in
///   min q ||G u + x_free - x_ref||^2 + r ||u||^2
/// so H = 2 (q G'G + r I) is constant per model and f carries the initial
/// state and the measured EMG feedforward.
class KmpcCondenser {
public:
    KmpcCondenser(const KoopmanModel& model, const MpcConfig& config);

    /// z0 is the current lifted state, ref_scaled the next N scaled
    /// reference values, emg_preview the (m-1) x N block of already
    /// measured, scaled EMG inputs covering the horizon.
    /// Throws std::invalid_argument on a non-finite z0.
    QpProblem build(const Vector& z0, const Vector& ref_scaled,
                    const Matrix& emg_preview) const;

    const Matrix& hessian() const { return hessian_; }
    const Matrix& input_map() const { return g_; }

private:
    MpcConfig config_;
    int m_;
    Matrix pow_rows_;  // (N+1) x d, row t = C A^t
    Vector markov1_;   // N, C A^i B1
    Matrix markov2_;   // N x (m-1), C A^i B2
    Matrix g_;         // N x N lower-triangular input-to-output map
    Matrix hessian_;   // constant 2 (q G'G + r I)
};

/// One-shot condensation, mirroring KmpcCondenser::build.
QpProblem condense(const KoopmanModel& model, const MpcConfig& config, const Vector& z0,
                   const Vector& ref_scaled, const Matrix& emg_preview);

/// Koopman MPC controller: lifts the measured angle, builds the condensed
/// QP with the EMG preview taken from measured history, solves it and
/// applies the first input. On a solver fault the previous duty is held
/// and the tick is flagged.
class KmpcController : public Controller {
public:
    KmpcController(KoopmanModel model, MpcConfig config);

    double step(const StepInput& in) override;
    StepDiag last_diag() const override { return diag_; }
    void reset() override;

    const KoopmanModel& model() const { return model_; }
    const Matrix& qp_hessian() const { return condenser_.hessian(); }
    /// Newest envelope index read during the last step (test hook).
    int last_hist_index_read() const { return last_hist_index_read_; }

private:
    KoopmanModel model_;
    MpcConfig config_;
    KmpcCondenser condenser_;
    Vector warm_;
    double prev_duty_ = 0.0;
    StepDiag diag_;
    int last_hist_index_read_ = -1;
};

struct PidConfig {
    double kp = 0.05;  // duty per degree
    double ki = 0.02;  // duty per degree-second
    double kd = 0.005; // duty per degree/second
    double out_min = -1.0;
    double out_max = 1.0;
    double integral_clamp = 50.0; // deg s
    double d_alpha = 0.2;         // first-order smoothing on the derivative
};

/// PID baseline with clamped, saturation-aware integral and filtered
/// derivative.
class PidController : public Controller {
public:
    explicit PidController(PidConfig config = {}) : config_(config) {}

    double step(const StepInput& in) override;
    void reset() override;

    double integral() const { return integral_; }

private:
    PidConfig config_;
    double integral_ = 0.0;
    double err_filtered_ = 0.0;
    double err_filtered_prev_ = 0.0;
    bool first_ = true;
};

} // namespace koop
