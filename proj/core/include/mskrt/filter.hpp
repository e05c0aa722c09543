#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace mskrt {

struct SplineWindow {
    std::size_t window = 50;
    /// Roughness penalty lambda in sum (y - g)^2 + lambda * int g''^2, units of
    /// s^3. 0 gives the natural interpolating spline.
    double smoothing = 0.0;
    /// Evaluation point, in samples back from the newest one.
    std::size_t delay = 25;

    /// Throws Error unless window >= 4 and delay < window and smoothing >= 0.
    void validate() const;
};

/// Natural cubic smoothing spline over a set of knots (Reinsch form), fitted
/// to one or more channels at once.
class SmoothingSpline {
public:
    /// y is knots x channels.
    SmoothingSpline(std::span<const double> t, const Eigen::MatrixXd& y, double smoothing);

    std::size_t channels() const { return static_cast<std::size_t>(g_.cols()); }
    const Eigen::MatrixXd& knot_values() const { return g_; }
    /// Second derivative at every knot (zero at both ends).
    const Eigen::MatrixXd& knot_curvature() const { return gamma_; }

    struct Eval {
        Eigen::VectorXd value, d1, d2;
    };
    Eval evaluate(double x) const;

private:
    std::vector<double> t_;
    Eigen::MatrixXd g_;
    Eigen::MatrixXd gamma_;
};

struct FilterOutput {
    double t = 0.0;
    Eigen::VectorXd value, d1, d2;
};

/// Fit the window and evaluate at the knot W-1-delay. Throws Error if the
/// series length differs from the window or stamps do not strictly increase.
FilterOutput smooth_and_differentiate(const SplineWindow& win, std::span<const double> t,
                                      const Eigen::MatrixXd& y);
FilterOutput smooth_and_differentiate(const SplineWindow& win, std::span<const double> t,
                                      std::span<const double> y);

/// Streaming form: buffers samples and emits one output per input once the
/// window is full. Reuses the factorization while the knot spacing repeats.
class SlidingSplineFilter {
public:
    SlidingSplineFilter(SplineWindow win, std::size_t channels);

    std::optional<FilterOutput> push(double t, const Eigen::Ref<const Eigen::VectorXd>& y);
    void reset();
    const SplineWindow& window() const { return win_; }
    std::size_t channels() const { return channels_; }

private:
    SplineWindow win_;
    std::size_t channels_;
    std::deque<double> t_;
    std::deque<Eigen::VectorXd> y_;

    std::vector<double> cached_h_;
    Eigen::MatrixXd cached_q_;
    Eigen::LDLT<Eigen::MatrixXd> cached_ldlt_;
};

} // namespace mskrt
