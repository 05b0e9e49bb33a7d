#include "koop/emg_pipeline.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace koop {

namespace {

using cplx = std::complex<double>;

/// |H(e^{j 2 pi f / fs})| of a biquad cascade with an extra scalar gain.
double cascade_magnitude(const std::vector<Biquad>& sections, double f_hz, double fs_hz) {
    const double w = 2.0 * std::numbers::pi * f_hz / fs_hz;
    const cplx z1 = std::exp(cplx(0.0, -w));
    const cplx z2 = z1 * z1;
    cplx h(1.0, 0.0);
    for (const Biquad& q : sections) {
        h *= (q.b0 + q.b1 * z1 + q.b2 * z2) / (1.0 + q.a1 * z1 + q.a2 * z2);
    }
    return std::abs(h);
}

} // namespace

double BandpassFilter::max_pole_radius() const {
    double r = 0.0;
    for (const Biquad& q : sections_) {
        // roots of z^2 + a1 z + a2
        const cplx disc = std::sqrt(cplx(q.a1 * q.a1 - 4.0 * q.a2, 0.0));
        r = std::max(r, std::abs((-q.a1 + disc) / 2.0));
        r = std::max(r, std::abs((-q.a1 - disc) / 2.0));
    }
    return r;
}

double BandpassFilter::noise_power_gain(int tail_samples) const {
    BandpassFilter probe(sections_);
    double acc = 0.0;
    for (int n = 0; n < tail_samples; ++n) {
        const double h = probe.step(n == 0 ? 1.0 : 0.0);
        acc += h * h;
    }
    return acc;
}

BandpassFilter design_bandpass(double fs_hz, double f_lo_hz, double f_hi_hz) {
    if (!(fs_hz > 0.0) || !(f_lo_hz > 0.0) || !(f_lo_hz < f_hi_hz) || !(f_hi_hz < fs_hz / 2.0)) {
        std::ostringstream msg;
        msg << "design_bandpass: need 0 < f_lo < f_hi < fs/2, got fs=" << fs_hz
            << " f_lo=" << f_lo_hz << " f_hi=" << f_hi_hz;
        throw std::invalid_argument(msg.str());
    }

    // Pre-warped analog edge frequencies (rad/s).
    const double k = 2.0 * fs_hz;
    const double w_lo = k * std::tan(std::numbers::pi * f_lo_hz / fs_hz);
    const double w_hi = k * std::tan(std::numbers::pi * f_hi_hz / fs_hz);
    const double w0 = std::sqrt(w_lo * w_hi);
    const double bw = w_hi - w_lo;

    // Order-2 Butterworth prototype pole in the upper half plane; its
    // conjugate is implied. Low-pass to band-pass doubles the pole count:
    // s^2 - bw*p*s + w0^2 = 0.
    const cplx proto = std::polar(1.0, 3.0 * std::numbers::pi / 4.0);
    const cplx bp = bw * proto;
    const cplx disc = std::sqrt(bp * bp - 4.0 * w0 * w0);
    const std::array<cplx, 2> analog_poles = {(bp + disc) / 2.0, (bp - disc) / 2.0};

    std::vector<Biquad> sections;
    sections.reserve(analog_poles.size());
    for (const cplx& s : analog_poles) {
        // Bilinear transform; the conjugate pole pairs give real biquads.
        const cplx zp = (k + s) / (k - s);
        Biquad q;
        q.a1 = -2.0 * zp.real();
        q.a2 = std::norm(zp);
        // Band-pass zeros at z = +1 and z = -1.
        q.b0 = 1.0;
        q.b1 = 0.0;
        q.b2 = -1.0;
        sections.push_back(q);
    }

    // Normalize to unity gain at the discrete image of the analog center.
    const double f_center = fs_hz / std::numbers::pi * std::atan(w0 / k);
    const double mag = cascade_magnitude(sections, f_center, fs_hz);
    const double g = std::pow(1.0 / mag, 1.0 / static_cast<double>(sections.size()));
    for (Biquad& q : sections) {
        q.b0 *= g;
        q.b1 *= g;
        q.b2 *= g;
    }

    BandpassFilter filter(std::move(sections));
    if (filter.max_pole_radius() >= 1.0) {
        throw std::runtime_error("design_bandpass: unstable design, pole on or outside unit circle");
    }
    return filter;
}

std::vector<double> filter_stream(BandpassFilter& filter, const std::vector<double>& raw) {
    filter.reset();
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (std::isnan(raw[i])) {
            std::ostringstream msg;
            msg << "filter_stream: NaN input at sample index " << i;
            throw std::runtime_error(msg.str());
        }
        out[i] = filter.step(raw[i]);
    }
    return out;
}

std::vector<double> rms_downsample(const std::vector<double>& filtered, int window) {
    if (window <= 0) throw std::invalid_argument("rms_downsample: window must be positive");
    const std::size_t blocks = filtered.size() / static_cast<std::size_t>(window);
    std::vector<double> out(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        double acc = 0.0;
        for (int i = 0; i < window; ++i) {
            const double v = filtered[b * window + i];
            acc += v * v;
        }
        out[b] = std::sqrt(acc / window);
    }
    return out;
}

std::vector<double> align_delay(const std::vector<double>& envelope, int delta) {
    if (delta < 0) throw std::invalid_argument("align_delay: delta must be >= 0");
    std::vector<double> out(envelope.size(), 0.0);
    for (std::size_t k = static_cast<std::size_t>(delta); k < envelope.size(); ++k) {
        out[k] = envelope[k - delta];
    }
    return out;
}

} // namespace koop
