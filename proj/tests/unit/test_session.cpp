#include <doctest.h>

#include <chrono>
#include <sstream>

#include "fixtures.hpp"
#include "mskrt/errors.hpp"
#include "mskrt/session.hpp"

using namespace mskrt;

namespace {

const char* kSmall = R"(# coordinates a b
sync 0 10 20
orient 0.01 pelvis 1 0 0 0
orient 0.01 torso 0 1 0 0
insole 0.01 L 10 100.5 0.02 -0.01
insole 0.01 R 20 90 0.03 0.01
refq 0.01 0.1 0.2

orient 0.02 pelvis 1 0 0 0   # trailing comment
insole 0.025 left 11 101 0.02 0
reftau 0.02 1 2
)";

Session parse(const std::string& text) {
    std::istringstream in(text);
    return parse_session(in, "test");
}

std::string parse_error(const std::string& text) {
    try {
        parse(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("session text groups frames and bursts") {
    const Session s = parse(kSmall);
    REQUIRE(s.sync);
    CHECK(s.sync->left_tick == 10);
    CHECK(s.sync->right_tick == 20);
    REQUIRE(s.orientations.size() == 2);
    CHECK(s.orientations[0].samples.size() == 2);
    CHECK(s.orientations[0].samples[1].frame == "torso");
    CHECK(s.orientations[0].samples[1].quat.x() == 1.0);
    REQUIRE(s.bursts.size() == 2);
    CHECK(s.bursts[0].records.size() == 2);
    CHECK(s.bursts[0].records[1].side == Side::right);
    CHECK(s.bursts[0].records[0].normal_force == 100.5);
    CHECK(s.bursts[1].arrival_t == 0.025);
    CHECK(s.reference_names == std::vector<std::string>{"a", "b"});
    CHECK(s.refq.size() == 1);
    CHECK(s.reftau.size() == 1);
    CHECK(s.duration() == doctest::Approx(0.025));
}

TEST_CASE("session write and parse round trip exactly") {
    const Session s = load_session(fixtures::data_path("standing.session"));
    std::ostringstream out;
    write_session(out, s);
    const Session back = parse(out.str());
    REQUIRE(back.orientations.size() == s.orientations.size());
    REQUIRE(back.bursts.size() == s.bursts.size());
    for (std::size_t i = 0; i < s.orientations.size(); ++i) {
        CHECK(back.orientations[i].t == s.orientations[i].t);
        for (std::size_t k = 0; k < s.orientations[i].samples.size(); ++k) {
            CHECK(back.orientations[i].samples[k].quat.coeffs() == s.orientations[i].samples[k].quat.coeffs());
        }
    }
    std::ostringstream again;
    write_session(again, back);
    CHECK(again.str() == out.str());
}

TEST_CASE("malformed lines report origin and line number") {
    CHECK(parse_error("orient 0 pelvis 1 0 0\n").find("test:1") != std::string::npos);
    CHECK(parse_error("sync 0 1 2\nbogus 1 2\n").find("test:2") != std::string::npos);
    CHECK_FALSE(parse_error("insole 0 up 1 2 3 4\n").empty());
    CHECK_FALSE(parse_error("orient 0.2 p 1 0 0 0\norient 0.1 p 1 0 0 0\n").empty());
    CHECK_FALSE(parse_error("orient 0 p 1 0 0 x\n").empty());
    CHECK_THROWS_AS(load_session("/nonexistent.session"), ParseError);
}

TEST_CASE("side names") {
    CHECK(parse_side("L") == Side::left);
    CHECK(parse_side("right") == Side::right);
    CHECK(parse_side("r") == Side::right);
    CHECK_THROWS_AS(parse_side("middle"), ParseError);
    CHECK(to_string(Side::left) == "left");
}

TEST_CASE("playback schedule orders equal stamps by channel") {
    const Session s = parse(kSmall);
    const auto sched = playback_schedule(s);
    using K = PlaybackEvent::Kind;
    std::vector<K> kinds;
    for (const auto& e : sched) kinds.push_back(e.kind);
    const std::vector<K> expected{K::sync, K::insole, K::orientation, K::refq, K::orientation, K::reftau, K::insole};
    CHECK(kinds == expected);
    for (std::size_t i = 1; i < sched.size(); ++i) CHECK(sched[i].t >= sched[i - 1].t);
}

TEST_CASE("logical playback delivers everything without waiting") {
    const Session s = load_session(fixtures::data_path("standing.session"));
    std::size_t n = 0;
    const auto start = std::chrono::steady_clock::now();
    playback(s, PlaybackMode::logical, [&](const PlaybackEvent&) { ++n; });
    CHECK(n == playback_schedule(s).size());
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(1));
}

TEST_CASE("realtime playback never delivers early") {
    Session s = parse(kSmall);
    const auto start = std::chrono::steady_clock::now();
    std::vector<double> lag;
    playback(s, PlaybackMode::realtime, [&](const PlaybackEvent& e) {
        const double now = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        lag.push_back(now - e.t);
    });
    REQUIRE(lag.size() == playback_schedule(s).size());
    for (double d : lag) CHECK(d >= 0.0);
}
