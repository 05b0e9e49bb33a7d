#pragma once

#include "koop/episode.hpp"
#include "koop/types.hpp"

#include <vector>

namespace koop {

/// One contiguous trajectory window: nb scaled states and the nb-1 input
/// columns u_k = [duty_k; u2_k] that connect them.
struct Batch {
    Vector x;  // nb
    Matrix u;  // m x (nb - 1)
};

struct TrainingSet {
    int nb = 16;
    int m = 3;
    double angle_divisor = 20.0;
    std::vector<Batch> batches;
    Vector emg_norm;          // per-channel max-abs used for scaling
    int skipped_episodes = 0; // episodes shorter than nb + delta
};

/// Slice episode logs into training batches: sliding windows of length nb
/// with the given stride, starting after the first delta masked ticks.
/// Angles are divided by angle_divisor, duty passes through, and EMG
/// envelopes are delay-aligned by delta then normalized by the pooled
/// max-abs (fallback 1.0 for an all-zero channel). Passive and active
/// episodes are pooled without distinction.
TrainingSet build_dataset(const std::vector<EpisodeLog>& episodes, double angle_divisor,
                          int nb = 16, int stride = 8, int delta = 10);

} // namespace koop
