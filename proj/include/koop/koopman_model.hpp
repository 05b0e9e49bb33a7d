#pragma once

#include "koop/encoder.hpp"
#include "koop/types.hpp"

#include <cstdint>
#include <filesystem>

namespace koop {

/// Data scaling baked into a trained model and applied identically at
/// train and inference time.
struct ScalingSpec {
    double angle_divisor = 20.0;
    Vector emg_norm; // per-channel max-abs normalizer, size = EMG channels

    double scale_angle(double deg) const { return deg / angle_divisor; }
    double unscale_angle(double x) const { return x * angle_divisor; }
};

/// Lifted linear model of the human-robot interaction dynamics:
///   z_{k+1} = A z_k + B1 u1_k + B2 u2_k,  x_k = z_k[0]
/// where z = [x_scaled; encoder(x_scaled)] and the reconstruction row
/// C = [1 0 ... 0] is implicit in the layout.
struct KoopmanModel {
    int d = 96; // lifted dimension
    int m = 3;  // input dimension: duty plus EMG channels
    MlpEncoder encoder; // out_dim = d - 1
    Matrix A;  // d x d
    Vector B1; // d
    Matrix B2; // d x (m - 1)
    ScalingSpec scaling;

    int emg_channels() const { return m - 1; }

    /// Lift one scaled state; z[0] == x exactly.
    /// Throws std::invalid_argument on non-finite input.
    Vector lift(double x_scaled) const;

    /// Column-wise batch lift of a 1 x n row of scaled states.
    Matrix lift_batch(const RowVector& xs) const;

    /// Roll the lifted dynamics from x1 under the input columns
    /// u_1..u_{k-1} (m x (k-1)); returns the full trajectory z_1..z_k
    /// as a d x k matrix. With no inputs, returns just lift(x1).
    Matrix predict_multistep(double x1_scaled, const Matrix& inputs) const;
};

/// Fresh model: identity A, zero B, randomly initialized encoder.
KoopmanModel make_model(int d, int m, int h1, int h2, std::uint64_t seed,
                        ScalingSpec scaling = {});

/// Versioned binary layout; save/load round-trips are bit-exact.
void save_model(const KoopmanModel& model, const std::filesystem::path& path);
KoopmanModel load_model(const std::filesystem::path& path);

} // namespace koop
