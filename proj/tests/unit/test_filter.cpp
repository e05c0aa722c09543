#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/QR>

#include "mskrt/errors.hpp"
#include "mskrt/filter.hpp"

using namespace mskrt;

namespace {

std::vector<double> stamps(std::size_t n, double dt, double t0 = 0.0) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = t0 + dt * static_cast<double>(i);
    return t;
}

} // namespace

TEST_CASE("interpolating spline passes through the knots with natural ends") {
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<double> t{0.0, 0.1, 0.25, 0.3, 0.5, 0.55, 0.8};
    Eigen::MatrixXd y(7, 2);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = U(rng);
    const SmoothingSpline s(t, y, 0.0);
    CHECK((s.knot_values() - y).norm() < 1e-12);
    CHECK(s.knot_curvature().row(0).norm() == 0.0);
    CHECK(s.knot_curvature().row(6).norm() == 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto e = s.evaluate(t[i]);
        CHECK((e.value - y.row(static_cast<Eigen::Index>(i)).transpose()).norm() < 1e-12);
    }
    // d1 and d2 continuous across interior knots; d2 there is the stored curvature
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
        const auto l = s.evaluate(t[i] - 1e-9), r = s.evaluate(t[i] + 1e-9);
        const Eigen::VectorXd g = s.knot_curvature().row(static_cast<Eigen::Index>(i)).transpose();
        CHECK((l.d1 - r.d1).norm() < 1e-6);
        CHECK((l.d2 - g).norm() < 1e-3);
        CHECK((r.d2 - g).norm() < 1e-3);
        CHECK((s.evaluate(t[i]).d2 - g).norm() < 1e-9);
    }
}

TEST_CASE("smoothing leaves straight lines alone") {
    const auto t = stamps(12, 0.01);
    Eigen::MatrixXd y(12, 1);
    for (int i = 0; i < 12; ++i) y(i, 0) = 3.0 - 2.0 * t[static_cast<std::size_t>(i)];
    for (double lambda : {0.0, 1e-4, 1.0}) {
        const SmoothingSpline s(t, y, lambda);
        CHECK((s.knot_values() - y).norm() < 1e-9);
        CHECK(s.evaluate(0.055).d1[0] == doctest::Approx(-2.0).epsilon(1e-8));
    }
}

TEST_CASE("heavy smoothing tends to the least-squares line") {
    std::mt19937_64 rng(53);
    std::normal_distribution<double> N(0.0, 1.0);
    const auto t = stamps(20, 0.05);
    Eigen::MatrixXd y(20, 1);
    for (int i = 0; i < 20; ++i) y(i, 0) = N(rng);
    Eigen::MatrixXd A(20, 2);
    for (int i = 0; i < 20; ++i) A.row(i) << 1.0, t[static_cast<std::size_t>(i)];
    const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(y.col(0));
    const SmoothingSpline s(t, y, 1e9);
    CHECK((s.knot_values().col(0) - A * coef).norm() < 1e-5);
}

TEST_CASE("window output is the spline at the delayed knot") {
    SplineWindow win{10, 0.0, 4};
    const auto t = stamps(10, 0.01, 1.0);
    std::vector<double> y(10);
    for (std::size_t i = 0; i < 10; ++i) y[i] = std::sin(3.0 * t[i]);
    const FilterOutput out = smooth_and_differentiate(win, t, y);
    CHECK(out.t == t[5]);
    CHECK(out.value[0] == doctest::Approx(y[5]).epsilon(1e-12));
    CHECK(out.d1[0] == doctest::Approx(3.0 * std::cos(3.0 * t[5])).epsilon(1e-3));

    CHECK_THROWS_AS(smooth_and_differentiate(win, stamps(9, 0.01), std::vector<double>(9, 0.0)), Error);
    auto bad = t;
    bad[3] = bad[2];
    CHECK_THROWS_AS(smooth_and_differentiate(win, bad, y), Error);
}

TEST_CASE("window parameters are validated") {
    CHECK_NOTHROW(SplineWindow{}.validate());
    CHECK_THROWS_AS((SplineWindow{3, 0.0, 1}.validate()), Error);
    CHECK_THROWS_AS((SplineWindow{10, 0.0, 10}.validate()), Error);
    CHECK_THROWS_AS((SplineWindow{10, -1.0, 2}.validate()), Error);
}

TEST_CASE("sliding filter matches batch fits, including after a spacing change") {
    const SplineWindow win{8, 1e-5, 3};
    SlidingSplineFilter f(win, 2);
    std::vector<double> t;
    std::vector<Eigen::Vector2d> y;
    double now = 0.0;
    for (int i = 0; i < 40; ++i) {
        now += i == 20 ? 0.013 : 0.01;
        t.push_back(now);
        y.emplace_back(std::sin(now * 5.0), std::cos(now * 2.0) + 0.1 * now);
        const auto out = f.push(now, y.back());
        if (i < 7) {
            CHECK_FALSE(out);
            continue;
        }
        REQUIRE(out);
        const std::vector<double> tw(t.end() - 8, t.end());
        Eigen::MatrixXd yw(8, 2);
        for (int k = 0; k < 8; ++k) yw.row(k) = y[y.size() - 8 + static_cast<std::size_t>(k)].transpose();
        const FilterOutput batch = smooth_and_differentiate(win, tw, yw);
        CHECK(out->t == batch.t);
        CHECK((out->value - batch.value).norm() < 1e-12);
        CHECK((out->d1 - batch.d1).norm() < 1e-9);
        CHECK((out->d2 - batch.d2).norm() < 1e-6);
    }
    f.reset();
    CHECK_FALSE(f.push(10.0, Eigen::Vector2d::Zero()));
    CHECK_THROWS_AS(f.push(11.0, Eigen::Vector3d::Zero()), Error);
}
