#include "koop/kmpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace koop {

void MpcConfig::validate() const {
    if (horizon < 1) throw std::invalid_argument("MpcConfig: horizon must be >= 1");
    if (!(q > 0.0) || !(r > 0.0)) {
        throw std::invalid_argument("MpcConfig: q and r must be > 0 for a strictly convex QP");
    }
    if (!(u_min < u_max)) throw std::invalid_argument("MpcConfig: u_min must be < u_max");
    if (horizon > delta) {
        throw std::invalid_argument(
            "MpcConfig: horizon exceeds the EMG lead delta; preview would need unmeasured data");
    }
}

KmpcCondenser::KmpcCondenser(const KoopmanModel& model, const MpcConfig& config)
    : config_(config), m_(model.m) {
    config_.validate();
    const int n = config_.horizon;
    const int d = model.d;

    pow_rows_.resize(n + 1, d);
    pow_rows_.row(0).setZero();
    pow_rows_(0, 0) = 1.0; // C = [1 0 ... 0]
    for (int t = 1; t <= n; ++t) {
        pow_rows_.row(t).noalias() = pow_rows_.row(t - 1) * model.A;
    }

    markov1_.resize(n);
    markov2_.resize(n, std::max(m_ - 1, 0));
    for (int i = 0; i < n; ++i) {
        markov1_(i) = pow_rows_.row(i).dot(model.B1);
        if (m_ > 1) markov2_.row(i).noalias() = pow_rows_.row(i) * model.B2;
    }

    g_ = Matrix::Zero(n, n);
    for (int t = 1; t <= n; ++t) {
        for (int j = 0; j < t; ++j) {
            g_(t - 1, j) = markov1_(t - 1 - j);
        }
    }

    hessian_ = 2.0 * (config_.q * g_.transpose() * g_ +
                      config_.r * Matrix::Identity(n, n));
}

QpProblem KmpcCondenser::build(const Vector& z0, const Vector& ref_scaled,
                               const Matrix& emg_preview) const {
    const int n = config_.horizon;
    if (!z0.allFinite()) throw std::invalid_argument("condense: non-finite lifted state");
    if (ref_scaled.size() != n) {
        throw std::invalid_argument("condense: reference preview length != horizon");
    }
    if (m_ > 1 && (emg_preview.rows() != m_ - 1 || emg_preview.cols() != n)) {
        throw std::invalid_argument("condense: EMG preview must be (m-1) x horizon");
    }

    // Input-free response including the EMG feedforward contribution.
    Vector x_free(n);
    for (int t = 1; t <= n; ++t) {
        double x = pow_rows_.row(t).dot(z0);
        if (m_ > 1) {
            for (int j = 0; j < t; ++j) {
                x += markov2_.row(t - 1 - j).dot(emg_preview.col(j));
            }
        }
        x_free(t - 1) = x;
    }

    QpProblem qp;
    qp.H = hessian_;
    qp.f = 2.0 * config_.q * g_.transpose() * (x_free - ref_scaled);
    qp.lo = Vector::Constant(n, config_.u_min);
    qp.hi = Vector::Constant(n, config_.u_max);
    return qp;
}

QpProblem condense(const KoopmanModel& model, const MpcConfig& config, const Vector& z0,
                   const Vector& ref_scaled, const Matrix& emg_preview) {
    return KmpcCondenser(model, config).build(z0, ref_scaled, emg_preview);
}

KmpcController::KmpcController(KoopmanModel model, MpcConfig config)
    : model_(std::move(model)), config_(config), condenser_(model_, config_) {}

void KmpcController::reset() {
    warm_.resize(0);
    prev_duty_ = 0.0;
    diag_ = {};
    last_hist_index_read_ = -1;
}

double KmpcController::step(const StepInput& in) {
    const auto t0 = std::chrono::steady_clock::now();
    const int n = config_.horizon;
    if (static_cast<int>(in.ref_future_deg.size()) < n) {
        throw std::invalid_argument("KmpcController: reference preview shorter than horizon");
    }

    const double x_scaled = model_.scaling.scale_angle(in.theta_deg);
    const Vector z0 = model_.lift(x_scaled);

    Vector ref_scaled(n);
    for (int t = 0; t < n; ++t) {
        ref_scaled(t) = model_.scaling.scale_angle(in.ref_future_deg[t]);
    }

    // EMG preview u2_{k+t} = s_{k+t-delta}: all indices lie in measured
    // history (t < horizon <= delta), zero-padded before the episode start.
    Matrix preview(std::max(model_.m - 1, 0), n);
    last_hist_index_read_ = -1;
    if (model_.m > 1) {
        preview.setZero();
        for (int t = 0; t < n; ++t) {
            const int idx = in.tick + t - config_.delta;
            if (idx < 0) continue;
            if (idx >= static_cast<int>(in.emg1_hist.size()) ||
                idx >= static_cast<int>(in.emg2_hist.size())) {
                throw std::logic_error("KmpcController: EMG preview would read the future");
            }
            preview(0, t) = in.emg1_hist[idx] / model_.scaling.emg_norm(0);
            if (model_.m > 2) preview(1, t) = in.emg2_hist[idx] / model_.scaling.emg_norm(1);
            last_hist_index_read_ = std::max(last_hist_index_read_, idx);
        }
    }

    const QpProblem qp = condenser_.build(z0, ref_scaled, preview);

    double duty = prev_duty_;
    diag_ = {};
    try {
        const QpResult res =
            solve_box_qp(qp, config_.qp_tol, config_.qp_max_iters,
                         warm_.size() == n ? &warm_ : nullptr);
        duty = res.u(0);
        diag_.qp_iters = res.iters;
        diag_.kkt_residual = res.kkt_residual;
        // Warm start for the next tick: shift, repeat the tail.
        warm_.resize(n);
        warm_.head(n - 1) = res.u.tail(n - 1);
        warm_(n - 1) = res.u(n - 1);
    } catch (const std::runtime_error&) {
        diag_.solver_fault = true;
        diag_.qp_iters = config_.qp_max_iters;
        diag_.kkt_residual = -1.0;
        warm_.resize(0);
    }

    duty = std::clamp(duty, config_.u_min, config_.u_max);
    prev_duty_ = duty;
    diag_.solve_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    return duty;
}

double PidController::step(const StepInput& in) {
    const double err = in.ref_now_deg - in.theta_deg;

    err_filtered_ += config_.d_alpha * (err - err_filtered_);
    const double derr = first_ ? 0.0 : (err_filtered_ - err_filtered_prev_) / in.dt;
    err_filtered_prev_ = err_filtered_;
    first_ = false;

    const double next_integral =
        std::clamp(integral_ + err * in.dt, -config_.integral_clamp, config_.integral_clamp);
    const double raw = config_.kp * err + config_.ki * next_integral + config_.kd * derr;
    // Saturation-aware anti-windup: only integrate while it can still help.
    if (raw <= config_.out_max || err < 0.0) {
        if (raw >= config_.out_min || err > 0.0) integral_ = next_integral;
    }
    const double duty = config_.kp * err + config_.ki * integral_ + config_.kd * derr;
    return std::clamp(duty, config_.out_min, config_.out_max);
}

void PidController::reset() {
    integral_ = 0.0;
    err_filtered_ = 0.0;
    err_filtered_prev_ = 0.0;
    first_ = true;
}

} // namespace koop
