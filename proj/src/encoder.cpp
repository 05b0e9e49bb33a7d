#include "koop/encoder.hpp"

namespace koop {

MlpEncoder::MlpEncoder(int out_dim, int h1, int h2, Rng& rng) {
    auto randn = [&rng](Eigen::Index r, Eigen::Index c, double std) {
        Matrix m(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i) m(i, j) = std * rng.gaussian();
        return m;
    };
    // The scalar input is an uncentered scaled angle, so the first-layer
    // biases are spread to place activation knees across the input range.
    w1 = randn(h1, 1, 0.5);
    b1 = Vector(h1);
    for (int i = 0; i < h1; ++i) b1(i) = rng.uniform(-1.5, 1.5);
    w2 = randn(h2, h1, 1.0 / std::sqrt(static_cast<double>(h1)));
    b2 = Vector::Zero(h2);
    w3 = randn(out_dim, h2, 0.5 / std::sqrt(static_cast<double>(h2)));
    b3 = Vector::Zero(out_dim);
}

void MlpEncoder::Grads::resize_like(const MlpEncoder& enc) {
    w1.resize(enc.w1.rows(), enc.w1.cols());
    w2.resize(enc.w2.rows(), enc.w2.cols());
    w3.resize(enc.w3.rows(), enc.w3.cols());
    b1.resize(enc.b1.size());
    b2.resize(enc.b2.size());
    b3.resize(enc.b3.size());
    set_zero();
}

void MlpEncoder::Grads::set_zero() {
    w1.setZero();
    w2.setZero();
    w3.setZero();
    b1.setZero();
    b2.setZero();
    b3.setZero();
}

Matrix MlpEncoder::forward(const RowVector& xs) const {
    Cache cache;
    return forward(xs, cache);
}

Matrix MlpEncoder::forward(const RowVector& xs, Cache& cache) const {
    cache.x = xs;
    cache.h1 = ((w1 * xs).colwise() + b1).array().tanh().matrix();
    cache.h2 = ((w2 * cache.h1).colwise() + b2).array().tanh().matrix();
    return (w3 * cache.h2).colwise() + b3;
}

void MlpEncoder::backward(const Cache& cache, const Matrix& grad_out, Grads& grads) const {
    grads.w3.noalias() += grad_out * cache.h2.transpose();
    grads.b3 += grad_out.rowwise().sum();

    Matrix g2 = (w3.transpose() * grad_out).array() *
                (1.0 - cache.h2.array().square());
    grads.w2.noalias() += g2 * cache.h1.transpose();
    grads.b2 += g2.rowwise().sum();

    Matrix g1 = (w2.transpose() * g2).array() *
                (1.0 - cache.h1.array().square());
    grads.w1.noalias() += g1 * cache.x.transpose();
    grads.b1 += g1.rowwise().sum();
}

} // namespace koop
