#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <numbers>

namespace koop {

using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

/// Control-rate sample period (s). All 100 Hz streams use this tick.
inline constexpr double kControlDt = 0.02;

/// Raw EMG sample rate (Hz) and samples per control tick.
inline constexpr double kEmgRate = 2000.0;
inline constexpr int kEmgSamplesPerTick = 20;

} // namespace koop
