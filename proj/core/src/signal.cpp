#include "mskrt/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "mskrt/errors.hpp"

namespace mskrt {

namespace {

void check_frequency(double f, double fs, const char* what) {
    if (!(fs > 0.0) || !(f > 0.0) || !(f < 0.5 * fs)) {
        throw Error(std::string(what) + ": frequency must lie in (0, fs/2)");
    }
}

// Prewarped analog frequency for the bilinear transform with s = K (z-1)/(z+1).
double warp(double f, double fs) {
    return std::tan(std::numbers::pi * f / fs);
}

} // namespace

double Biquad::dc_gain() const {
    return (b0 + b1 + b2) / (1.0 + a1 + a2);
}

double Biquad::magnitude(double f, double fs) const {
    const std::complex<double> z1 = std::polar(1.0, -2.0 * std::numbers::pi * f / fs);
    const std::complex<double> z2 = z1 * z1;
    return std::abs((b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2));
}

Biquad lowpass_biquad(double cutoff_hz, double fs, double q) {
    check_frequency(cutoff_hz, fs, "lowpass_biquad");
    // H(s) = 1 / (s^2 + s/Q + 1) at normalized frequency, s -> (z-1)/(k (z+1)).
    const double k = warp(cutoff_hz, fs);
    const double k2 = k * k;
    const double norm = 1.0 / (1.0 + k / q + k2);
    Biquad b;
    b.b0 = k2 * norm;
    b.b1 = 2.0 * b.b0;
    b.b2 = b.b0;
    b.a1 = 2.0 * (k2 - 1.0) * norm;
    b.a2 = (1.0 - k / q + k2) * norm;
    return b;
}

Biquad highpass_biquad(double cutoff_hz, double fs, double q) {
    check_frequency(cutoff_hz, fs, "highpass_biquad");
    const double k = warp(cutoff_hz, fs);
    const double k2 = k * k;
    const double norm = 1.0 / (1.0 + k / q + k2);
    Biquad b;
    b.b0 = norm;
    b.b1 = -2.0 * norm;
    b.b2 = norm;
    b.a1 = 2.0 * (k2 - 1.0) * norm;
    b.a2 = (1.0 - k / q + k2) * norm;
    return b;
}

Biquad notch_biquad(double center_hz, double fs, double q) {
    check_frequency(center_hz, fs, "notch_biquad");
    if (!(q > 0.0)) {
        throw Error("notch_biquad: q must be positive");
    }
    const double k = warp(center_hz, fs);
    const double k2 = k * k;
    const double norm = 1.0 / (1.0 + k / q + k2);
    Biquad b;
    b.b0 = (1.0 + k2) * norm;
    b.b1 = 2.0 * (k2 - 1.0) * norm;
    b.b2 = b.b0;
    b.a1 = b.b1;
    b.a2 = (1.0 - k / q + k2) * norm;
    return b;
}

namespace {

std::vector<double> butterworth_qs(int order) {
    if (order < 2 || order % 2 != 0) {
        throw Error("butterworth: order must be a positive even number");
    }
    std::vector<double> qs;
    const int n = order;
    for (int k = 0; k < n / 2; ++k) {
        const double theta = std::numbers::pi * (2.0 * k + 1.0) / (2.0 * n);
        qs.push_back(1.0 / (2.0 * std::sin(theta)));
    }
    return qs;
}

} // namespace

std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double fs) {
    std::vector<Biquad> out;
    for (double q : butterworth_qs(order)) {
        out.push_back(lowpass_biquad(cutoff_hz, fs, q));
    }
    return out;
}

std::vector<Biquad> butterworth_highpass(int order, double cutoff_hz, double fs) {
    std::vector<Biquad> out;
    for (double q : butterworth_qs(order)) {
        out.push_back(highpass_biquad(cutoff_hz, fs, q));
    }
    return out;
}

double BiquadFilter::step(double x) {
    const double y = c_.b0 * x + z1_;
    z1_ = c_.b1 * x - c_.a1 * y + z2_;
    z2_ = c_.b2 * x - c_.a2 * y;
    return y;
}

void BiquadFilter::settle(double x) {
    const double y = c_.dc_gain() * x;
    z2_ = c_.b2 * x - c_.a2 * y;
    z1_ = c_.b1 * x - c_.a1 * y + z2_;
}

std::vector<double> filter(std::span<const Biquad> cascade, std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    for (const Biquad& c : cascade) {
        BiquadFilter f(c);
        for (double& v : y) {
            v = f.step(v);
        }
    }
    return y;
}

std::vector<double> filtfilt(std::span<const Biquad> cascade, std::span<const double> x) {
    if (x.empty()) {
        return {};
    }
    const std::size_t n = x.size();
    const std::size_t pad = std::min<std::size_t>(n - 1, 6 * cascade.size() + 3);
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t k = pad; k >= 1; --k) {
        ext.push_back(2.0 * x[0] - x[k]);
    }
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t k = 1; k <= pad; ++k) {
        ext.push_back(2.0 * x[n - 1] - x[n - 1 - k]);
    }

    for (const Biquad& c : cascade) {
        BiquadFilter f(c);
        f.settle(ext.front());
        for (double& v : ext) {
            v = f.step(v);
        }
        BiquadFilter b(c);
        b.settle(ext.back());
        for (auto it = ext.rbegin(); it != ext.rend(); ++it) {
            *it = b.step(*it);
        }
    }
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
            ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

} // namespace mskrt
