#include <doctest.h>

#include <string>

#include "mskrt/sync.hpp"

using namespace mskrt;

namespace {

TimedBuffer<int> buffer_of(std::initializer_list<double> stamps) {
    TimedBuffer<int> b;
    int i = 0;
    for (double t : stamps) b.push(t, i++);
    return b;
}

} // namespace

TEST_CASE("timed buffer keeps stamp order and evicts by age and capacity") {
    TimedBuffer<int> b(3, 1.0);
    b.push(0.5, 1);
    b.push(0.2, 2);
    b.push(0.9, 3);
    CHECK(b.entries().front().t == 0.2);
    b.push(1.0, 4);  // over capacity: 0.2 goes
    CHECK(b.size() == 3);
    CHECK(b.entries().front().value == 1);
    b.push(1.8, 5);  // 0.5 is older than 1.8 - 1.0
    CHECK(b.entries().front().t == 0.9);
    CHECK(*b.newest() == 1.8);
    b.discard_before(1.0);
    CHECK(b.size() == 2);
    CHECK_THROWS_AS(TimedBuffer<int>(0), Error);
    CHECK_THROWS_AS(TimedBuffer<int>(4, 0.0), Error);
}

TEST_CASE("nearest prefers the earlier entry on ties") {
    const auto b = buffer_of({0.0, 0.25, 0.75});
    CHECK(b.nearest(0.5) == std::optional<std::size_t>(1));
    CHECK(b.nearest(0.6) == std::optional<std::size_t>(2));
    CHECK_FALSE(TimedBuffer<int>().nearest(1.0));
}

TEST_CASE("delay line releases in order no earlier than the delay") {
    DelayLine<std::string> d(0.26);
    d.push(0.1, "a");
    d.push(0.1, "b");
    d.push(0.13, "c");
    CHECK(d.pop_ready(0.35).empty());
    const auto ready = d.pop_ready(0.36);
    REQUIRE(ready.size() == 2);
    CHECK(ready[0].second == "a");
    CHECK(ready[1].second == "b");
    CHECK(ready[0].first - 0.1 >= 0.26);
    CHECK(*d.next_release() - 0.13 >= 0.26);
    CHECK_THROWS_AS(d.push(0.0, "late"), Error);
    CHECK_THROWS_AS(DelayLine<int>(-1.0), Error);

    // stamps where plain addition would round below the delay
    DelayLine<int> fine(0.26);
    for (int i = 0; i < 2000; ++i) {
        const double t = 0.01 * i;
        fine.push(t, i);
        CHECK(*fine.next_release() >= 0.0);
        for (const auto& [release, v] : fine.pop_ready(1e9)) CHECK(release - 0.01 * v >= 0.26);
    }
}

TEST_CASE("match commits, defers or drops") {
    const double tol = 0.015;
    SUBCASE("exact hit matches immediately") {
        const auto m = match_side(0.5, buffer_of({0.49, 0.5}), tol, false);
        CHECK(m.kind == MatchKind::matched);
        CHECK(m.index == std::optional<std::size_t>(1));
        CHECK(m.dt == 0.0);
    }
    SUBCASE("nearest within tolerance waits for a later sample") {
        CHECK(match_side(0.5, buffer_of({0.49}), tol, false).kind == MatchKind::defer);
        const auto m = match_side(0.5, buffer_of({0.49, 0.515}), tol, false);
        CHECK(m.kind == MatchKind::matched);
        CHECK(m.dt == doctest::Approx(-0.01));
    }
    SUBCASE("end of input settles the decision") {
        CHECK(match_side(0.5, buffer_of({0.49}), tol, true).kind == MatchKind::matched);
        CHECK(match_side(0.5, buffer_of({0.4}), tol, true).kind == MatchKind::drop);
        CHECK(match_side(0.5, TimedBuffer<int>(), tol, true).kind == MatchKind::drop);
        CHECK(match_side(0.5, TimedBuffer<int>(), tol, false).kind == MatchKind::defer);
    }
    SUBCASE("gap wider than tolerance drops") {
        CHECK(match_side(0.5, buffer_of({0.45, 0.55}), tol, false).kind == MatchKind::drop);
        CHECK(match_side(0.5, buffer_of({0.47, 0.52}), tol, false).kind == MatchKind::drop);
    }
    CHECK_THROWS_AS(match_side(0.5, buffer_of({0.5}), -1.0, false), Error);
}

TEST_CASE("combined decision") {
    CHECK(combine({MatchKind::matched, MatchKind::matched}) == MatchKind::matched);
    CHECK(combine({MatchKind::matched, MatchKind::defer}) == MatchKind::defer);
    CHECK(combine({MatchKind::defer, MatchKind::drop}) == MatchKind::drop);
    CHECK(to_string(MatchKind::defer) == "defer");
}
