#include "koop/train.hpp"

#include "koop/strfmt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace koop {

void ModelGrads::resize_like(const KoopmanModel& model) {
    enc.resize_like(model.encoder);
    A.resize(model.d, model.d);
    B1.resize(model.d);
    B2.resize(model.d, model.m - 1);
    set_zero();
}

void ModelGrads::set_zero() {
    enc.set_zero();
    A.setZero();
    B1.setZero();
    B2.setZero();
}

double multistep_loss(const KoopmanModel& model, std::span<const Batch> batches, double gamma) {
    double loss = 0.0;
    for (const Batch& batch : batches) {
        const int nb = static_cast<int>(batch.x.size());
        if (batch.u.rows() < model.m) {
            throw std::invalid_argument("multistep_loss: batch input rows < model.m");
        }
        const Matrix targets = model.lift_batch(batch.x.transpose());
        Vector zhat = targets.col(0);
        double w = 1.0;
        for (int j = 1; j < nb; ++j) {
            Vector znext = model.A * zhat + model.B1 * batch.u(0, j - 1);
            if (model.m > 1) {
                znext.noalias() += model.B2 * batch.u.col(j - 1).segment(1, model.m - 1);
            }
            zhat = std::move(znext);
            w *= gamma;
            loss += w * (zhat - targets.col(j)).squaredNorm();
        }
    }
    return loss;
}

double loss_and_gradients(const KoopmanModel& model, std::span<const Batch> batches,
                          double gamma, ModelGrads& grads) {
    grads.resize_like(model);
    if (batches.empty()) return 0.0;

    const int d = model.d;
    const int m = model.m;
    const int nb = static_cast<int>(batches[0].x.size());
    const int nbatch = static_cast<int>(batches.size());
    for (const Batch& b : batches) {
        if (static_cast<int>(b.x.size()) != nb) {
            throw std::invalid_argument("loss_and_gradients: mixed window lengths");
        }
        if (b.u.rows() < m || b.u.cols() != nb - 1) {
            throw std::invalid_argument("loss_and_gradients: bad input block shape");
        }
    }

    // All states of the minibatch in one batched encoder pass,
    // column index b * nb + j.
    RowVector xs(nbatch * nb);
    for (int b = 0; b < nbatch; ++b)
        for (int j = 0; j < nb; ++j) xs(b * nb + j) = batches[b].x(j);
    MlpEncoder::Cache cache;
    const Matrix enc_out = model.encoder.forward(xs, cache); // (d-1) x n

    auto target_col = [&](Matrix& dst, int j) {
        for (int b = 0; b < nbatch; ++b) {
            dst(0, b) = xs(b * nb + j);
            dst.col(b).tail(d - 1) = enc_out.col(b * nb + j);
        }
    };

    // Forward rollout of the whole minibatch.
    std::vector<Matrix> zhat(nb), err(nb);
    std::vector<Matrix> u(nb - 1);
    zhat[0].resize(d, nbatch);
    target_col(zhat[0], 0);
    for (int k = 0; k + 1 < nb; ++k) {
        u[k].resize(m, nbatch);
        for (int b = 0; b < nbatch; ++b) u[k].col(b) = batches[b].u.col(k).head(m);
        zhat[k + 1].resize(d, nbatch);
        zhat[k + 1].noalias() = model.A * zhat[k];
        zhat[k + 1].noalias() += model.B1 * u[k].row(0);
        if (m > 1) zhat[k + 1].noalias() += model.B2 * u[k].bottomRows(m - 1);
    }

    std::vector<double> weight(nb);
    weight[0] = 1.0;
    for (int k = 1; k < nb; ++k) weight[k] = weight[k - 1] * gamma;

    double loss = 0.0;
    Matrix target(d, nbatch);
    err[0] = Matrix::Zero(d, nbatch); // zhat_1 == lift(x_1) exactly
    for (int k = 1; k < nb; ++k) {
        target_col(target, k);
        err[k] = zhat[k] - target;
        loss += weight[k] * err[k].squaredNorm();
    }

    // Adjoint sweep: lambda_k = dL/d(zhat_k).
    Matrix grad_b_full = Matrix::Zero(d, m);
    Matrix grad_targets = Matrix::Zero(d, nbatch * nb);
    Matrix lambda = 2.0 * weight[nb - 1] * err[nb - 1];
    for (int k = nb - 1; k >= 1; --k) {
        grads.A.noalias() += lambda * zhat[k - 1].transpose();
        grad_b_full.noalias() += lambda * u[k - 1].transpose();
        for (int b = 0; b < nbatch; ++b) {
            grad_targets.col(b * nb + k) = -2.0 * weight[k] * err[k].col(b);
        }
        Matrix prev = model.A.transpose() * lambda;
        if (k - 1 >= 1) prev.noalias() += 2.0 * weight[k - 1] * err[k - 1];
        lambda = std::move(prev);
    }
    for (int b = 0; b < nbatch; ++b) grad_targets.col(b * nb) = lambda.col(b);

    grads.B1 += grad_b_full.col(0);
    if (m > 1) grads.B2 += grad_b_full.rightCols(m - 1);
    model.encoder.backward(cache, grad_targets.bottomRows(d - 1), grads.enc);

    for (const ParamView& v : grad_views(grads)) {
        for (std::size_t i = 0; i < v.size; ++i) {
            if (!std::isfinite(v.data[i])) {
                throw std::runtime_error("loss_and_gradients: non-finite gradient entry");
            }
        }
    }
    return loss;
}

std::vector<ParamView> param_views(KoopmanModel& model) {
    MlpEncoder& e = model.encoder;
    return {
        {e.w1.data(), static_cast<std::size_t>(e.w1.size())},
        {e.b1.data(), static_cast<std::size_t>(e.b1.size())},
        {e.w2.data(), static_cast<std::size_t>(e.w2.size())},
        {e.b2.data(), static_cast<std::size_t>(e.b2.size())},
        {e.w3.data(), static_cast<std::size_t>(e.w3.size())},
        {e.b3.data(), static_cast<std::size_t>(e.b3.size())},
        {model.A.data(), static_cast<std::size_t>(model.A.size())},
        {model.B1.data(), static_cast<std::size_t>(model.B1.size())},
        {model.B2.data(), static_cast<std::size_t>(model.B2.size())},
    };
}

std::vector<ParamView> grad_views(ModelGrads& grads) {
    MlpEncoder::Grads& e = grads.enc;
    return {
        {e.w1.data(), static_cast<std::size_t>(e.w1.size())},
        {e.b1.data(), static_cast<std::size_t>(e.b1.size())},
        {e.w2.data(), static_cast<std::size_t>(e.w2.size())},
        {e.b2.data(), static_cast<std::size_t>(e.b2.size())},
        {e.w3.data(), static_cast<std::size_t>(e.w3.size())},
        {e.b3.data(), static_cast<std::size_t>(e.b3.size())},
        {grads.A.data(), static_cast<std::size_t>(grads.A.size())},
        {grads.B1.data(), static_cast<std::size_t>(grads.B1.size())},
        {grads.B2.data(), static_cast<std::size_t>(grads.B2.size())},
    };
}

double noam_lr(int step, int model_size, int warmup) {
    const double s = static_cast<double>(std::max(step, 1));
    const double w = static_cast<double>(std::max(warmup, 1));
    return std::pow(static_cast<double>(model_size), -0.5) *
           std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

namespace {

struct AdamState {
    std::vector<Vector> m, v;
    int t = 0;

    explicit AdamState(KoopmanModel& model) {
        for (const ParamView& p : param_views(model)) {
            m.push_back(Vector::Zero(static_cast<Eigen::Index>(p.size)));
            v.push_back(Vector::Zero(static_cast<Eigen::Index>(p.size)));
        }
    }
};

void adam_step(KoopmanModel& model, ModelGrads& grads, AdamState& state, double lr,
               const TrainConfig& cfg, double grad_scale) {
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, state.t);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, state.t);
    auto params = param_views(model);
    auto gview = grad_views(grads);
    for (std::size_t i = 0; i < params.size(); ++i) {
        double* p = params[i].data;
        const double* g = gview[i].data;
        Vector& m = state.m[i];
        Vector& v = state.v[i];
        for (std::size_t j = 0; j < params[i].size; ++j) {
            const double gj = g[j] * grad_scale;
            m(j) = cfg.adam_beta1 * m(j) + (1.0 - cfg.adam_beta1) * gj;
            v(j) = cfg.adam_beta2 * v(j) + (1.0 - cfg.adam_beta2) * gj * gj;
            const double mhat = m(j) / bc1;
            const double vhat = v(j) / bc2;
            p[j] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        }
    }
}

} // namespace

KoopmanModel train(const TrainingSet& set, const TrainConfig& config, TrainStats* stats) {
    if (set.batches.empty()) throw std::invalid_argument("train: dataset is empty");
    const int n = static_cast<int>(set.batches.size());
    const int model_m = config.with_emg ? set.m : 1;

    ScalingSpec scaling;
    scaling.angle_divisor = set.angle_divisor;
    scaling.emg_norm = config.with_emg ? set.emg_norm : Vector(0);

    KoopmanModel model = make_model(config.d, model_m, config.hidden1, config.hidden2,
                                    config.seed, scaling);

    // Held-out split by batch.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng = Rng(config.seed).fork(17);
    split_rng.shuffle(order);
    int n_held = 0;
    if (n >= 2) {
        n_held = static_cast<int>(std::lround(config.holdout_fraction * n));
        n_held = std::clamp(n_held, 1, n - 1);
    }
    std::vector<Batch> held, pool;
    held.reserve(n_held);
    pool.reserve(n - n_held);
    for (int i = 0; i < n; ++i) {
        (i < n_held ? held : pool).push_back(set.batches[order[i]]);
    }

    ModelGrads grads;
    AdamState adam(model);
    Rng shuffle_rng = Rng(config.seed).fork(23);

    auto heldout_loss = [&]() {
        if (held.empty()) return std::numeric_limits<double>::quiet_NaN();
        return multistep_loss(model, held, config.gamma) / static_cast<double>(held.size());
    };

    TrainStats local;
    TrainStats& st = stats ? *stats : local;
    st.curve.clear();
    st.train_batches = static_cast<int>(pool.size());
    st.heldout_batches = n_held;

    KoopmanModel best = model;
    double best_heldout = heldout_loss();
    int best_step = 0;
    double last_heldout = best_heldout;

    std::vector<int> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<Batch> minibatch;
    int step = 0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_rng.shuffle(idx);
        for (std::size_t pos = 0; pos < idx.size(); pos += config.minibatch) {
            const std::size_t end = std::min(pos + config.minibatch, idx.size());
            minibatch.clear();
            for (std::size_t i = pos; i < end; ++i) minibatch.push_back(pool[idx[i]]);
            ++step;

            const double loss = loss_and_gradients(model, minibatch, config.gamma, grads);
            const double mean_loss = loss / static_cast<double>(minibatch.size());
            if (!std::isfinite(mean_loss) || mean_loss > config.divergence_limit) {
                std::ostringstream msg;
                msg << "train: diverged at step " << step << " (loss " << mean_loss << ")";
                throw std::runtime_error(msg.str());
            }
            const double lr = config.lr_scale * noam_lr(step, config.d, config.warmup_steps);
            adam_step(model, grads, adam, lr, config,
                      1.0 / static_cast<double>(minibatch.size()));
            st.curve.push_back({step, lr, mean_loss, last_heldout});
        }
        const double h = heldout_loss();
        last_heldout = h;
        if (!st.curve.empty()) st.curve.back().heldout_loss = h;
        const double score = std::isnan(h) ? st.curve.back().train_loss : h;
        if (best_step == 0 || std::isnan(best_heldout) || score < best_heldout) {
            best_heldout = score;
            best_step = step;
            best = model;
        }
    }

    st.best_heldout = best_heldout;
    st.best_step = best_step;
    return best;
}

void write_metrics(const TrainStats& stats, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_metrics: cannot open " + path.string());
    out << "step lr train_loss heldout_loss\n";
    for (const TrainCurvePoint& p : stats.curve) {
        out << p.step << ' ' << fmt_double(p.lr) << ' ' << fmt_double(p.train_loss) << ' '
            << fmt_double(p.heldout_loss) << '\n';
    }
}

} // namespace koop
