#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "mskrt/signal.hpp"

using namespace mskrt;

namespace {

// Analog Butterworth magnitude after the bilinear frequency warp.
double butterworth_gain(double f, double fc, double fs, int order, bool high) {
    const double r = std::tan(std::numbers::pi * f / fs) / std::tan(std::numbers::pi * fc / fs);
    const double x = high ? 1.0 / r : r;
    return 1.0 / std::sqrt(1.0 + std::pow(x, 2 * order));
}

double cascade_gain(const std::vector<Biquad>& c, double f, double fs) {
    double g = 1.0;
    for (const Biquad& b : c) g *= b.magnitude(f, fs);
    return g;
}

std::vector<double> direct_form(const Biquad& c, const std::vector<double>& x) {
    std::vector<double> y(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double x1 = n >= 1 ? x[n - 1] : 0.0, x2 = n >= 2 ? x[n - 2] : 0.0;
        const double y1 = n >= 1 ? y[n - 1] : 0.0, y2 = n >= 2 ? y[n - 2] : 0.0;
        y[n] = c.b0 * x[n] + c.b1 * x1 + c.b2 * x2 - c.a1 * y1 - c.a2 * y2;
    }
    return y;
}

} // namespace

TEST_CASE("magnitude agrees with the transfer function evaluated directly") {
    const Biquad c = lowpass_biquad(12.0, 100.0);
    for (double f : {0.0, 3.0, 12.0, 30.0, 49.0}) {
        const std::complex<double> z = std::polar(1.0, -2.0 * std::numbers::pi * f / 100.0);
        const std::complex<double> h =
            (c.b0 + c.b1 * z + c.b2 * z * z) / (1.0 + c.a1 * z + c.a2 * z * z);
        CHECK(c.magnitude(f, 100.0) == doctest::Approx(std::abs(h)).epsilon(1e-12));
    }
    CHECK(c.dc_gain() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("second-order designs follow the warped Butterworth response") {
    const double fs = 1000.0;
    const Biquad lp = lowpass_biquad(50.0, fs);
    const Biquad hp = highpass_biquad(50.0, fs);
    for (double f : {5.0, 25.0, 50.0, 100.0, 300.0}) {
        CHECK(lp.magnitude(f, fs) == doctest::Approx(butterworth_gain(f, 50.0, fs, 2, false)).epsilon(1e-9));
        CHECK(hp.magnitude(f, fs) == doctest::Approx(butterworth_gain(f, 50.0, fs, 2, true)).epsilon(1e-9));
    }
    CHECK(std::abs(hp.dc_gain()) < 1e-12);
}

TEST_CASE("cascaded Butterworth sections reach the requested order") {
    const double fs = 1000.0;
    const auto lp = butterworth_lowpass(4, 20.0, fs);
    const auto hp = butterworth_highpass(4, 20.0, fs);
    CHECK(lp.size() == 2);
    for (double f : {2.0, 10.0, 20.0, 40.0, 200.0}) {
        CHECK(cascade_gain(lp, f, fs) == doctest::Approx(butterworth_gain(f, 20.0, fs, 4, false)).epsilon(1e-8));
        CHECK(cascade_gain(hp, f, fs) == doctest::Approx(butterworth_gain(f, 20.0, fs, 4, true)).epsilon(1e-8));
    }
}

TEST_CASE("notch removes its center frequency") {
    const Biquad n = notch_biquad(50.0, 1000.0, 10.0);
    CHECK(n.magnitude(50.0, 1000.0) < 1e-12);
    CHECK(n.dc_gain() == doctest::Approx(1.0));
    CHECK(n.magnitude(200.0, 1000.0) > 0.99);
}

TEST_CASE("streaming filter matches the difference equation") {
    const Biquad c = lowpass_biquad(8.0, 100.0);
    std::vector<double> x(64);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.3 * static_cast<double>(i)) + (i == 5 ? 1.0 : 0.0);
    const auto expected = direct_form(c, x);
    BiquadFilter f(c);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(f.step(x[i]) == doctest::Approx(expected[i]).epsilon(1e-12));
    const Biquad cascade[] = {c};
    const auto batch = filter(cascade, x);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(batch[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("settled state holds a constant input") {
    BiquadFilter f(lowpass_biquad(5.0, 100.0));
    f.settle(3.5);
    for (int i = 0; i < 20; ++i) CHECK(f.step(3.5) == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("filtfilt is zero phase") {
    const double fs = 1000.0;
    const auto lp = butterworth_lowpass(2, 40.0, fs);
    std::vector<double> x(2000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * std::numbers::pi * 5.0 * static_cast<double>(i) / fs);
    const auto y = filtfilt(lp, x);
    REQUIRE(y.size() == x.size());
    // squared gain at 5 Hz, no shift away from the edges
    const double g2 = std::pow(butterworth_gain(5.0, 40.0, fs, 2, false), 2);
    for (std::size_t i = 500; i < 1500; ++i) CHECK(y[i] == doctest::Approx(g2 * x[i]).epsilon(1e-3).scale(1.0));

    const std::vector<double> flat(100, 2.0);
    for (double v : filtfilt(lp, flat)) CHECK(v == doctest::Approx(2.0).epsilon(1e-9));
}
