#include "mskrt/filter.hpp"

#include <algorithm>
#include <cmath>

#include "mskrt/errors.hpp"

namespace mskrt {

void SplineWindow::validate() const {
    if (window < 4) {
        throw Error("spline window must hold at least 4 samples");
    }
    if (delay >= window) {
        throw Error("spline evaluation delay must be smaller than the window");
    }
    if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
        throw Error("spline smoothing parameter must be finite and non-negative");
    }
}

namespace {

std::vector<double> spacing(std::span<const double> t) {
    std::vector<double> h(t.size() - 1);
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        h[i] = t[i + 1] - t[i];
        if (!(h[i] > 0.0)) {
            throw Error("spline knots must be strictly increasing");
        }
    }
    return h;
}

// Q (n x n-2) and R (n-2 x n-2) of the Reinsch algorithm.
Eigen::MatrixXd build_q(const std::vector<double>& h) {
    const Eigen::Index n = static_cast<Eigen::Index>(h.size()) + 1;
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n - 2);
    for (Eigen::Index j = 1; j + 1 < n; ++j) {
        const double hl = h[static_cast<std::size_t>(j - 1)];
        const double hr = h[static_cast<std::size_t>(j)];
        q(j - 1, j - 1) = 1.0 / hl;
        q(j, j - 1) = -1.0 / hl - 1.0 / hr;
        q(j + 1, j - 1) = 1.0 / hr;
    }
    return q;
}

Eigen::MatrixXd build_system(const std::vector<double>& h, const Eigen::MatrixXd& q,
                             double lambda) {
    const Eigen::Index m = static_cast<Eigen::Index>(h.size()) - 1;
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const std::size_t k = static_cast<std::size_t>(j);
        r(j, j) = (h[k] + h[k + 1]) / 3.0;
        if (j + 1 < m) {
            r(j, j + 1) = h[k + 1] / 6.0;
            r(j + 1, j) = h[k + 1] / 6.0;
        }
    }
    if (lambda > 0.0) {
        r.noalias() += lambda * q.transpose() * q;
    }
    return r;
}

void solve(const Eigen::MatrixXd& q, const Eigen::LDLT<Eigen::MatrixXd>& ldlt, double lambda,
           const Eigen::MatrixXd& y, Eigen::MatrixXd& g, Eigen::MatrixXd& gamma) {
    const Eigen::MatrixXd interior = ldlt.solve(q.transpose() * y);
    g = lambda > 0.0 ? Eigen::MatrixXd(y - lambda * q * interior) : y;
    gamma = Eigen::MatrixXd::Zero(y.rows(), y.cols());
    gamma.middleRows(1, y.rows() - 2) = interior;
}

SmoothingSpline::Eval evaluate_piecewise(std::span<const double> t, const Eigen::MatrixXd& g,
                                         const Eigen::MatrixXd& gamma, double x) {
    const std::size_t n = t.size();
    // Segment i covers [t_i, t_{i+1}]; outside the knots the end pieces extend.
    std::size_t i = static_cast<std::size_t>(
        std::upper_bound(t.begin(), t.end(), x) - t.begin());
    i = std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, n - 2);
    const double h = t[i + 1] - t[i];
    const double u = x - t[i];
    const auto gi = g.row(static_cast<Eigen::Index>(i)).transpose();
    const auto gj = g.row(static_cast<Eigen::Index>(i + 1)).transpose();
    const auto ci = gamma.row(static_cast<Eigen::Index>(i)).transpose();
    const auto cj = gamma.row(static_cast<Eigen::Index>(i + 1)).transpose();
    const Eigen::VectorXd b = (gj - gi) / h - h * (2.0 * ci + cj) / 6.0;
    const Eigen::VectorXd c = ci / 2.0;
    const Eigen::VectorXd d = (cj - ci) / (6.0 * h);
    SmoothingSpline::Eval e;
    e.value = gi + u * (b + u * (c + u * d));
    e.d1 = b + u * (2.0 * c + 3.0 * u * d);
    e.d2 = 2.0 * c + 6.0 * u * d;
    return e;
}

} // namespace

SmoothingSpline::SmoothingSpline(std::span<const double> t, const Eigen::MatrixXd& y,
                                 double smoothing)
    : t_(t.begin(), t.end()) {
    if (t.size() < 4) {
        throw Error("smoothing spline needs at least 4 knots");
    }
    if (static_cast<std::size_t>(y.rows()) != t.size()) {
        throw DimensionError("smoothing spline: value rows differ from knot count");
    }
    if (!(smoothing >= 0.0)) {
        throw Error("smoothing spline: negative smoothing parameter");
    }
    const auto h = spacing(t);
    const Eigen::MatrixXd q = build_q(h);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(build_system(h, q, smoothing));
    solve(q, ldlt, smoothing, y, g_, gamma_);
}

SmoothingSpline::Eval SmoothingSpline::evaluate(double x) const {
    return evaluate_piecewise(t_, g_, gamma_, x);
}

FilterOutput smooth_and_differentiate(const SplineWindow& win, std::span<const double> t,
                                      const Eigen::MatrixXd& y) {
    win.validate();
    if (t.size() != win.window) {
        throw Error("smooth_and_differentiate: window not full");
    }
    const SmoothingSpline spline(t, y, win.smoothing);
    const std::size_t k = win.window - 1 - win.delay;
    auto e = spline.evaluate(t[k]);
    return {t[k], std::move(e.value), std::move(e.d1), std::move(e.d2)};
}

FilterOutput smooth_and_differentiate(const SplineWindow& win, std::span<const double> t,
                                      std::span<const double> y) {
    const Eigen::MatrixXd m =
        Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    return smooth_and_differentiate(win, t, m);
}

SlidingSplineFilter::SlidingSplineFilter(SplineWindow win, std::size_t channels)
    : win_(win), channels_(channels) {
    win_.validate();
    if (channels_ == 0) {
        throw Error("spline filter needs at least one channel");
    }
}

void SlidingSplineFilter::reset() {
    t_.clear();
    y_.clear();
}

std::optional<FilterOutput> SlidingSplineFilter::push(double t,
                                                      const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (static_cast<std::size_t>(y.size()) != channels_) {
        throw DimensionError("spline filter: sample width differs from channel count");
    }
    if (!t_.empty() && !(t > t_.back())) {
        throw Error("spline filter: duplicate or decreasing timestamp");
    }
    t_.push_back(t);
    y_.push_back(y);
    if (t_.size() > win_.window) {
        t_.pop_front();
        y_.pop_front();
    }
    if (t_.size() < win_.window) {
        return std::nullopt;
    }

    const std::vector<double> times(t_.begin(), t_.end());
    const auto h = spacing(times);
    if (h != cached_h_) {
        cached_q_ = build_q(h);
        cached_ldlt_.compute(build_system(h, cached_q_, win_.smoothing));
        cached_h_ = h;
    }
    Eigen::MatrixXd values(static_cast<Eigen::Index>(win_.window),
                           static_cast<Eigen::Index>(channels_));
    for (std::size_t i = 0; i < y_.size(); ++i) {
        values.row(static_cast<Eigen::Index>(i)) = y_[i].transpose();
    }
    Eigen::MatrixXd g, gamma;
    solve(cached_q_, cached_ldlt_, win_.smoothing, values, g, gamma);
    const std::size_t k = win_.window - 1 - win_.delay;
    auto e = evaluate_piecewise(times, g, gamma, times[k]);
    return FilterOutput{times[k], std::move(e.value), std::move(e.d1), std::move(e.d2)};
}

} // namespace mskrt
