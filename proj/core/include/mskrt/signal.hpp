#pragma once

#include <span>
#include <vector>

namespace mskrt {

/// Second-order IIR section, normalized so a0 = 1:
/// y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;

    /// DC gain (b0 + b1 + b2) / (1 + a1 + a2).
    double dc_gain() const;
    /// |H(e^{jw})| at frequency f for sample rate fs.
    double magnitude(double f, double fs) const;
};

/// Bilinear-transform designs with frequency prewarping.
Biquad lowpass_biquad(double cutoff_hz, double fs, double q = 0.7071067811865476);
Biquad highpass_biquad(double cutoff_hz, double fs, double q = 0.7071067811865476);
Biquad notch_biquad(double center_hz, double fs, double q);

/// Butterworth of order 2*k as k cascaded sections.
std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double fs);
std::vector<Biquad> butterworth_highpass(int order, double cutoff_hz, double fs);

/// Transposed direct form II section with persistent state.
class BiquadFilter {
public:
    explicit BiquadFilter(const Biquad& coeffs) : c_(coeffs) {}
    double step(double x);
    /// Set the state to the steady-state response to a constant input x.
    void settle(double x);
    void reset() { z1_ = z2_ = 0.0; }

private:
    Biquad c_;
    double z1_ = 0.0;
    double z2_ = 0.0;
};

/// Causal filtering through the cascade, zero initial state.
std::vector<double> filter(std::span<const Biquad> cascade, std::span<const double> x);
/// Forward-backward (zero-phase) filtering with odd reflection padding.
std::vector<double> filtfilt(std::span<const Biquad> cascade, std::span<const double> x);

} // namespace mskrt
