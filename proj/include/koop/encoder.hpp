#pragma once

#include "koop/rng.hpp"
#include "koop/types.hpp"

namespace koop {

/// Lifting network: scalar in, two tanh hidden layers, linear out.
/// Parameters are public Eigen blocks; forward passes are batched
/// column-wise (one column per sample).
class MlpEncoder {
public:
    Matrix w1, w2, w3; // h1 x 1, h2 x h1, out x h2
    Vector b1, b2, b3;

    MlpEncoder() = default;
    MlpEncoder(int out_dim, int h1, int h2, Rng& rng);

    int out_dim() const { return static_cast<int>(w3.rows()); }
    int hidden1() const { return static_cast<int>(w1.rows()); }
    int hidden2() const { return static_cast<int>(w2.rows()); }

    struct Cache {
        RowVector x;
        Matrix h1, h2; // post-activation
    };

    struct Grads {
        Matrix w1, w2, w3;
        Vector b1, b2, b3;
        void resize_like(const MlpEncoder& enc);
        void set_zero();
    };

    /// out_dim x n outputs for a 1 x n input row.
    Matrix forward(const RowVector& xs) const;
    Matrix forward(const RowVector& xs, Cache& cache) const;

    /// Accumulate parameter gradients for d(loss)/d(output) = grad_out
    /// (out_dim x n), using the cache from the matching forward call.
    void backward(const Cache& cache, const Matrix& grad_out, Grads& grads) const;
};

} // namespace koop
