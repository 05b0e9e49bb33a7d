#include "koop/dataset.hpp"

#include "koop/emg_pipeline.hpp"

#include <cmath>
#include <stdexcept>

namespace koop {

TrainingSet build_dataset(const std::vector<EpisodeLog>& episodes, double angle_divisor,
                          int nb, int stride, int delta) {
    if (nb < 2 || stride < 1 || delta < 0) {
        throw std::invalid_argument("build_dataset: need nb >= 2, stride >= 1, delta >= 0");
    }
    TrainingSet set;
    set.nb = nb;
    set.m = 3;
    set.angle_divisor = angle_divisor;

    // Pooled max-abs EMG normalizer over the whole training set.
    double norm1 = 0.0, norm2 = 0.0;
    for (const EpisodeLog& ep : episodes) {
        for (double v : ep.emg_rms_ch1) norm1 = std::max(norm1, std::abs(v));
        for (double v : ep.emg_rms_ch2) norm2 = std::max(norm2, std::abs(v));
    }
    if (norm1 == 0.0) norm1 = 1.0;
    if (norm2 == 0.0) norm2 = 1.0;
    set.emg_norm = Vector(2);
    set.emg_norm << norm1, norm2;

    for (const EpisodeLog& ep : episodes) {
        const int ticks = ep.ticks();
        if (ticks < nb + delta) {
            ++set.skipped_episodes;
            continue;
        }
        const std::vector<double> u2_1 = align_delay(ep.emg_rms_ch1, delta);
        const std::vector<double> u2_2 = align_delay(ep.emg_rms_ch2, delta);
        for (int start = delta; start + nb <= ticks; start += stride) {
            Batch batch;
            batch.x.resize(nb);
            batch.u.resize(3, nb - 1);
            for (int j = 0; j < nb; ++j) {
                batch.x(j) = ep.theta_deg[start + j] / angle_divisor;
            }
            for (int j = 0; j < nb - 1; ++j) {
                batch.u(0, j) = ep.duty[start + j];
                batch.u(1, j) = u2_1[start + j] / norm1;
                batch.u(2, j) = u2_2[start + j] / norm2;
            }
            set.batches.push_back(std::move(batch));
        }
    }
    return set;
}

} // namespace koop
