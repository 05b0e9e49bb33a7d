#pragma once

#include <array>
#include <vector>

namespace koop {

/// One second-order section, direct form II transposed.
struct Biquad {
    double b0 = 0.0, b1 = 0.0, b2 = 0.0; // numerator
    double a1 = 0.0, a2 = 0.0;           // denominator (monic a0 = 1)
};

/// Band-pass filter realized as cascaded biquads with streaming state.
/// One instance filters one channel; instances are independent.
class BandpassFilter {
public:
    BandpassFilter() = default;
    explicit BandpassFilter(std::vector<Biquad> sections)
        : sections_(std::move(sections)), state_(sections_.size(), {0.0, 0.0}) {}

    const std::vector<Biquad>& sections() const { return sections_; }

    void reset() {
        for (auto& s : state_) s = {0.0, 0.0};
    }

    /// Filter a single sample, advancing internal state.
    double step(double x) {
        double v = x;
        for (std::size_t i = 0; i < sections_.size(); ++i) {
            const Biquad& q = sections_[i];
            auto& s = state_[i];
            const double y = q.b0 * v + s[0];
            s[0] = q.b1 * v - q.a1 * y + s[1];
            s[1] = q.b2 * v - q.a2 * y;
            v = y;
        }
        return v;
    }

    /// Largest pole magnitude over all sections.
    double max_pole_radius() const;

    /// Steady-state power gain for white-noise input, sum of h[n]^2.
    double noise_power_gain(int tail_samples = 8192) const;

private:
    std::vector<Biquad> sections_;
    std::vector<std::array<double, 2>> state_;
};

/// Design a Butterworth band-pass from an order-2 analog prototype
/// (four discrete poles) via the bilinear transform with frequency
/// pre-warping. Gain is unity at the geometric center frequency and
/// -3 dB at both cut-offs. Throws std::invalid_argument unless
/// 0 < f_lo < f_hi < fs/2.
BandpassFilter design_bandpass(double fs_hz, double f_lo_hz, double f_hi_hz);

/// Causal sample-by-sample filtering of a whole stream. Resets filter
/// state at stream start; output length equals input length. A NaN in
/// the input raises a numeric fault naming the sample index.
std::vector<double> filter_stream(BandpassFilter& filter, const std::vector<double>& raw);

/// RMS over disjoint windows: the k-th output is the root mean square of
/// the k-th `window`-sample block. A trailing partial window is dropped.
std::vector<double> rms_downsample(const std::vector<double>& filtered, int window = 20);

/// Delay-align an envelope: out[k] = envelope[k - delta], zero-padded for
/// the first delta ticks. delta = 0 is the identity.
std::vector<double> align_delay(const std::vector<double>& envelope, int delta);

} // namespace koop
