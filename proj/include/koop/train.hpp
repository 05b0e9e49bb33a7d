#pragma once

#include "koop/dataset.hpp"
#include "koop/koopman_model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace koop {

struct TrainConfig {
    int d = 96;
    int hidden1 = 128;
    int hidden2 = 128;
    double gamma = 0.9;
    bool with_emg = true;  // when false the model sees only the duty input
    int minibatch = 64;
    int epochs = 60;
    double holdout_fraction = 0.1;
    int warmup_steps = 400;     // Noam warmup
    double lr_scale = 1.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double divergence_limit = 1e6;
    std::uint64_t seed = 1;
};

/// Gradient bundle shaped like a model's trainable parameters
/// (C is fixed and not trained).
struct ModelGrads {
    MlpEncoder::Grads enc;
    Matrix A;
    Vector B1;
    Matrix B2;

    void resize_like(const KoopmanModel& model);
    void set_zero();
};

/// Discounted multi-step prediction loss, summed over batches and steps:
/// sum_i sum_k gamma^{k-1} ||zhat_k - lift(x_k)||^2. The k = 1 term is
/// identically zero because zhat_1 = lift(x_1).
double multistep_loss(const KoopmanModel& model, std::span<const Batch> batches, double gamma);

/// Loss plus exact reverse-mode gradients (accumulated into grads, which
/// is zeroed first). Throws on non-finite gradients.
double loss_and_gradients(const KoopmanModel& model, std::span<const Batch> batches,
                          double gamma, ModelGrads& grads);

/// Flat views over the trainable parameter blocks, fixed order. Grad views
/// use the same order so optimizers and finite-difference checks can pair
/// them up.
struct ParamView {
    double* data;
    std::size_t size;
};
std::vector<ParamView> param_views(KoopmanModel& model);
std::vector<ParamView> grad_views(ModelGrads& grads);

/// Noam schedule: size^{-1/2} * min(step^{-1/2}, step * warmup^{-3/2}).
double noam_lr(int step, int model_size, int warmup);

struct TrainCurvePoint {
    int step;
    double lr;
    double train_loss;   // mean per batch over the minibatch
    double heldout_loss; // mean per batch, last evaluated value
};

struct TrainStats {
    std::vector<TrainCurvePoint> curve;
    double best_heldout = 0.0;
    int best_step = 0;
    int heldout_batches = 0;
    int train_batches = 0;
};

/// Train a model on the set with Adam + Noam; returns the snapshot with the
/// lowest held-out multi-step loss. Deterministic per config seed.
/// Throws std::runtime_error naming the step on divergence.
KoopmanModel train(const TrainingSet& set, const TrainConfig& config,
                   TrainStats* stats = nullptr);

void write_metrics(const TrainStats& stats, const std::filesystem::path& path);

} // namespace koop
