#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mskrt/csv.hpp"

namespace mskrt {

/// Linear interpolation of (t, x) at `at`; t strictly increasing, `at` inside
/// [t.front(), t.back()].
double interpolate(std::span<const double> t, std::span<const double> x, double at);

struct ChannelRmse {
    std::string channel;
    double rmse = 0.0;
    std::size_t samples = 0;
};

/// Per common channel RMSE; b is resampled onto those stamps of a that lie in
/// b's time span. Throws Error when the series do not overlap or share no
/// channel.
std::vector<ChannelRmse> rmse(const CsvTable& a, const CsvTable& b);
double rmse(std::span<const double> t_a, std::span<const double> a, std::span<const double> t_b,
            std::span<const double> b);

struct GaitCycles {
    std::vector<std::vector<double>> cycles;  // each `points` long
    std::vector<double> mean;
    std::vector<double> sd;  // sample standard deviation, 0 for a single cycle
};

/// Cuts (t, x) at consecutive onsets and resamples each cycle to `points`
/// phases 0..100 %. Throws Error when no complete cycle lies inside the data.
GaitCycles gait_normalize(std::span<const double> t, std::span<const double> x,
                          std::span<const double> onsets, std::size_t points = 101);

struct EmgOptions {
    double rate = 1000.0;
    double highpass_hz = 20.0;
    double lowpass_hz = 450.0;
    double notch_hz = 50.0;
    double notch_q = 10.0;
    double envelope_hz = 5.0;
    std::size_t decimation = 10;
    bool normalize = true;
    /// Divisor for normalization; the envelope maximum when unset.
    std::optional<double> reference_max;
};

/// Zero-phase band limiting, notch, full-wave rectification and low-pass
/// envelope, then decimation (1000 Hz -> 100 Hz by default).
std::vector<double> emg_envelope(std::span<const double> raw, const EmgOptions& options = {});

} // namespace mskrt
