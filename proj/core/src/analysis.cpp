#include "mskrt/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "mskrt/errors.hpp"
#include "mskrt/signal.hpp"

namespace mskrt {

double interpolate(std::span<const double> t, std::span<const double> x, double at) {
    if (t.empty() || t.size() != x.size()) {
        throw DimensionError("interpolate: empty or mismatched series");
    }
    if (at < t.front() || at > t.back()) {
        throw Error("interpolate: point outside the series");
    }
    const auto hi = std::lower_bound(t.begin(), t.end(), at);
    const auto k = static_cast<std::size_t>(hi - t.begin());
    if (t[k] == at) {
        return x[k];
    }
    const double u = (at - t[k - 1]) / (t[k] - t[k - 1]);
    return x[k - 1] + u * (x[k] - x[k - 1]);
}

double rmse(std::span<const double> t_a, std::span<const double> a, std::span<const double> t_b,
            std::span<const double> b) {
    if (t_a.size() != a.size() || t_b.size() != b.size()) {
        throw DimensionError("rmse: stamp and value lengths differ");
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t_a.size(); ++i) {
        if (t_b.empty() || t_a[i] < t_b.front() || t_a[i] > t_b.back()) {
            continue;
        }
        const double d = a[i] - interpolate(t_b, b, t_a[i]);
        sum += d * d;
        ++n;
    }
    if (n == 0) {
        throw Error("rmse: series do not overlap in time");
    }
    return std::sqrt(sum / static_cast<double>(n));
}

std::vector<ChannelRmse> rmse(const CsvTable& a, const CsvTable& b) {
    std::vector<ChannelRmse> out;
    for (std::size_t ca = 0; ca < a.channels.size(); ++ca) {
        const auto cb = b.find(a.channels[ca]);
        if (!cb) {
            continue;
        }
        const auto xa = a.column(ca);
        const auto xb = b.column(*cb);
        ChannelRmse r;
        r.channel = a.channels[ca];
        r.rmse = rmse(a.t, xa, b.t, xb);
        for (double t : a.t) {
            if (!b.t.empty() && t >= b.t.front() && t <= b.t.back()) ++r.samples;
        }
        out.push_back(std::move(r));
    }
    if (out.empty()) {
        throw Error("rmse: tables share no channel");
    }
    return out;
}

GaitCycles gait_normalize(std::span<const double> t, std::span<const double> x,
                          std::span<const double> onsets, std::size_t points) {
    if (t.size() != x.size()) {
        throw DimensionError("gait_normalize: stamp and value lengths differ");
    }
    if (points < 2) {
        throw Error("gait_normalize: need at least 2 points per cycle");
    }
    GaitCycles g;
    for (std::size_t k = 0; k + 1 < onsets.size(); ++k) {
        const double a = onsets[k], b = onsets[k + 1];
        if (t.empty() || !(b > a) || a < t.front() || b > t.back()) {
            continue;
        }
        std::vector<double> cycle(points);
        for (std::size_t i = 0; i < points; ++i) {
            const double phase = static_cast<double>(i) / static_cast<double>(points - 1);
            const double at = i + 1 == points ? b : a + phase * (b - a);
            cycle[i] = interpolate(t, x, at);
        }
        g.cycles.push_back(std::move(cycle));
    }
    if (g.cycles.empty()) {
        throw Error("gait_normalize: no complete cycle in the data");
    }
    const double n = static_cast<double>(g.cycles.size());
    g.mean.assign(points, 0.0);
    g.sd.assign(points, 0.0);
    for (std::size_t i = 0; i < points; ++i) {
        for (const auto& c : g.cycles) g.mean[i] += c[i];
        g.mean[i] /= n;
        if (g.cycles.size() > 1) {
            double ss = 0.0;
            for (const auto& c : g.cycles) ss += (c[i] - g.mean[i]) * (c[i] - g.mean[i]);
            g.sd[i] = std::sqrt(ss / (n - 1.0));
        }
    }
    return g;
}

std::vector<double> emg_envelope(std::span<const double> raw, const EmgOptions& o) {
    if (raw.empty()) {
        throw Error("emg_envelope: empty input");
    }
    if (o.decimation == 0) {
        throw Error("emg_envelope: decimation must be positive");
    }
    const auto hp = butterworth_highpass(4, o.highpass_hz, o.rate);
    auto x = filtfilt(hp, raw);
    const auto lp = butterworth_lowpass(4, o.lowpass_hz, o.rate);
    x = filtfilt(lp, x);
    const Biquad notch[] = {notch_biquad(o.notch_hz, o.rate, o.notch_q)};
    x = filtfilt(notch, x);
    for (double& v : x) {
        v = std::abs(v);
    }
    const auto env = butterworth_lowpass(4, o.envelope_hz, o.rate);
    x = filtfilt(env, x);
    if (o.normalize) {
        const double ref = o.reference_max ? *o.reference_max
                                           : *std::max_element(x.begin(), x.end());
        if (ref > 0.0) {
            for (double& v : x) v /= ref;
        }
    }
    std::vector<double> out;
    out.reserve(x.size() / o.decimation + 1);
    for (std::size_t i = 0; i < x.size(); i += o.decimation) {
        out.push_back(x[i]);
    }
    return out;
}

} // namespace mskrt
