#include "catch_amalgamated.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cliff/ingest.hpp"

using namespace cliff;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

struct TempFile {
    std::string path;
    TempFile(const std::string& name, const std::string& content)
        : path(temp_path(name)) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("canonical parser groups rows per person and sorts by time") {
    std::istringstream in(
        "person_id,time_s,x_m,y_m\n"
        "2,1.0,5.0,6.0\n"
        "1,0.4,1.5,2.5\n"
        "1,0.0,1.0,2.0\n"
        "2,1.4,5.5,6.5\n");
    const auto tracks = parse_canonical_tracks(in, "test");
    REQUIRE(tracks.size() == 2);
    CHECK(tracks[0].person_id == 1);
    REQUIRE(tracks[0].points.size() == 2);
    CHECK(tracks[0].points[0].time == 0.0);
    CHECK(tracks[0].points[0].x == 1.0);
    CHECK(tracks[0].points[1].time == 0.4);
    CHECK(tracks[1].person_id == 2);
    CHECK(tracks[1].points[0].y == 6.0);
}

TEST_CASE("canonical parser tolerates CRLF and blank lines") {
    std::istringstream in(
        "person_id,time_s,x_m,y_m\r\n"
        "1,0.0,1.0,2.0\r\n"
        "\r\n"
        "1,0.4,1.1,2.0\r\n");
    const auto tracks = parse_canonical_tracks(in, "test");
    REQUIRE(tracks.size() == 1);
    CHECK(tracks[0].points.size() == 2);
}

TEST_CASE("canonical parser reports malformed rows with line numbers") {
    SECTION("missing header") {
        std::istringstream in("1,0.0,1.0,2.0\n");
        CHECK_THROWS_WITH(parse_canonical_tracks(in, "data.csv"),
                          Catch::Matchers::ContainsSubstring("missing header"));
    }
    SECTION("wrong field count") {
        std::istringstream in("person_id,time_s,x_m,y_m\n1,0.0,1.0\n");
        CHECK_THROWS_WITH(parse_canonical_tracks(in, "data.csv"),
                          Catch::Matchers::ContainsSubstring("data.csv:2"));
    }
    SECTION("non-numeric coordinate") {
        std::istringstream in(
            "person_id,time_s,x_m,y_m\n1,0.0,1.0,2.0\n1,0.4,oops,2.0\n");
        CHECK_THROWS_WITH(parse_canonical_tracks(in, "data.csv"),
                          Catch::Matchers::ContainsSubstring("data.csv:3"));
    }
    SECTION("duplicate timestamp") {
        std::istringstream in(
            "person_id,time_s,x_m,y_m\n7,0.0,1.0,2.0\n7,0.0,1.1,2.0\n");
        CHECK_THROWS_WITH(parse_canonical_tracks(in, "data.csv"),
                          Catch::Matchers::ContainsSubstring("person 7"));
    }
}

TEST_CASE("atc parser converts millimeters and keeps seconds") {
    std::istringstream in(
        "1351039234.567,12345678,12345,-6789,1200,1.2,0.5,0.4\n"
        "1351039234.967,12345678,13345,-6489,1200,1.2,0.5,0.4\n");
    const auto tracks = parse_atc(in, "atc.csv");
    REQUIRE(tracks.size() == 1);
    CHECK(tracks[0].person_id == 12345678);
    REQUIRE(tracks[0].points.size() == 2);
    CHECK(tracks[0].points[0].time == Catch::Approx(1351039234.567));
    CHECK(tracks[0].points[0].x == Catch::Approx(12.345));
    CHECK(tracks[0].points[0].y == Catch::Approx(-6.789));
}

TEST_CASE("atc parser tolerates a header line and flags bad rows") {
    std::istringstream ok(
        "time,person_id,x,y,z,velocity,motion_angle,facing_angle\n"
        "0.0,1,1000,2000,0,1,0,0\n"
        "0.4,1,1400,2000,0,1,0,0\n");
    CHECK(parse_atc(ok, "atc.csv").size() == 1);

    std::istringstream bad("0.0,1,1000,2000\n0.4,1,oops,2000\n");
    CHECK_THROWS_WITH(parse_atc(bad, "atc.csv"),
                      Catch::Matchers::ContainsSubstring("atc.csv:2"));

    std::istringstream narrow("0.0,1,1000\n");
    CHECK_THROWS_WITH(parse_atc(narrow, "atc.csv"),
                      Catch::Matchers::ContainsSubstring("at least 4 fields"));
}

TEST_CASE("thor parser reads the wide per-frame layout") {
    std::istringstream in(
        "Frame,Helmet_2 X,Helmet_2 Y,Helmet_2 Z,Helmet_5 X,Helmet_5 Y\n"
        "100,1000,2000,1700,5000,6000\n"
        "101,1010,2000,1700,,\n"
        "102,1020,2000,1700,5020,6000\n");
    const auto tracks = parse_thor(in, "thor.csv");
    REQUIRE(tracks.size() == 2);
    CHECK(tracks[0].person_id == 2);
    CHECK(tracks[0].points.size() == 3);
    CHECK(tracks[0].points[0].time == Catch::Approx(1.0));  // frame / 100 Hz
    CHECK(tracks[0].points[0].x == Catch::Approx(1.0));
    CHECK(tracks[0].points[1].x == Catch::Approx(1.01));
    // Helmet_5 has a hole at frame 101.
    CHECK(tracks[1].person_id == 5);
    REQUIRE(tracks[1].points.size() == 2);
    CHECK(tracks[1].points[1].time == Catch::Approx(1.02));
}

TEST_CASE("thor parser treats NaN cells as gaps") {
    std::istringstream in(
        "Frame,Walker1 X,Walker1 Y\n"
        "0,0,0\n"
        "1,nan,nan\n"
        "2,20,0\n");
    const auto tracks = parse_thor(in, "thor.csv");
    REQUIRE(tracks.size() == 1);
    CHECK(tracks[0].points.size() == 2);
    CHECK(tracks[0].points[1].time == Catch::Approx(0.02));
}

TEST_CASE("thor parser validates the header") {
    std::istringstream bad_first("Position,H X,H Y\n0,1,2\n");
    CHECK_THROWS_WITH(parse_thor(bad_first, "thor.csv"),
                      Catch::Matchers::ContainsSubstring("Frame"));
    std::istringstream no_pairs("Frame,Something\n0,1\n");
    CHECK_THROWS_WITH(parse_thor(no_pairs, "thor.csv"),
                      Catch::Matchers::ContainsSubstring("column pairs"));
}

TEST_CASE("split_on_gaps cuts where consecutive stamps drift apart") {
    RawTrack track{1, {{0.0, 0, 0}, {0.4, 1, 0}, {0.8, 2, 0},
                       {2.5, 3, 0}, {2.9, 4, 0}}};
    const auto parts = split_on_gaps(track, 0.8);
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].points.size() == 3);
    CHECK(parts[1].points.size() == 2);
    CHECK(parts[1].person_id == 1);

    CHECK(split_on_gaps(track, 10.0).size() == 1);
    CHECK(split_on_gaps(RawTrack{1, {}}, 1.0).empty());
}

TEST_CASE("resample keeps grid-aligned points exact") {
    std::vector<RawPoint> pts;
    for (int i = 0; i <= 10; ++i) {
        pts.push_back({i * 0.4, 1.0 + 0.3 * i, 2.0 - 0.1 * i});
    }
    const Trajectory traj = resample(pts, 2.5, 9);
    CHECK(traj.person_id == 9);
    CHECK(traj.dt == Catch::Approx(0.4));
    REQUIRE(traj.states.size() == 11);
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        CHECK(traj.states[i].x == Catch::Approx(pts[i].x).margin(1e-12));
        CHECK(traj.states[i].y == Catch::Approx(pts[i].y).margin(1e-12));
    }
}

TEST_CASE("resample interpolates linear motion exactly") {
    // 10 Hz data resampled to 2.5 Hz: targets fall between source samples.
    std::vector<RawPoint> pts;
    for (int i = 0; i <= 50; ++i) {
        pts.push_back({0.05 + i * 0.1, 2.0 * (0.05 + i * 0.1), -1.0});
    }
    const Trajectory traj = resample(pts, 2.5);
    REQUIRE(traj.states.size() >= 12);
    for (const auto& s : traj.states) {
        CHECK(s.x == Catch::Approx(2.0 * s.time).margin(1e-12));
        CHECK(s.y == Catch::Approx(-1.0).margin(1e-12));
    }
}

TEST_CASE("resample error on a sinusoid is bounded by the source spacing") {
    // x(t) = sin(2 pi t / 4): interpolation error <= h^2/8 * max|x''|.
    const double omega = two_pi / 4.0;
    std::vector<RawPoint> pts;
    for (int i = 0; i <= 400; ++i) {
        const double t = i * 0.01;
        pts.push_back({t, std::sin(omega * t), 0.0});
    }
    const double bound = 0.01 * 0.01 / 8.0 * omega * omega + 1e-12;
    const Trajectory traj = resample(pts, 2.5);
    for (const auto& s : traj.states) {
        CHECK(std::abs(s.x - std::sin(omega * s.time)) < bound);
    }
}

TEST_CASE("resample rejects degenerate input") {
    CHECK_THROWS_AS(resample({{0.0, 0, 0}}, 2.5), std::invalid_argument);
    CHECK_THROWS_AS(resample({{0.0, 0, 0}, {0.1, 1, 0}}, 2.5),
                    std::runtime_error);  // shorter than one period
    CHECK_THROWS_AS(resample({{0.0, 0, 0}, {1.0, 1, 0}}, 0.0),
                    std::invalid_argument);
}

TEST_CASE("derive_velocities computes finite-difference speed and heading") {
    Trajectory traj;
    traj.dt = 0.5;
    traj.states.resize(4);
    const double xs[] = {0.0, 1.0, 1.0, 0.0};
    const double ys[] = {0.0, 1.0, 1.0, 1.0};
    for (int i = 0; i < 4; ++i) {
        traj.states[i].x = xs[i];
        traj.states[i].y = ys[i];
        traj.states[i].time = i * 0.5;
    }
    derive_velocities(traj);
    CHECK(traj.states[1].rho == Catch::Approx(std::sqrt(2.0) / 0.5));
    CHECK(traj.states[1].theta == Catch::Approx(std::numbers::pi / 4.0));
    // Zero displacement keeps the previous heading, speed drops to zero.
    CHECK(traj.states[2].rho == 0.0);
    CHECK(traj.states[2].theta == Catch::Approx(std::numbers::pi / 4.0));
    // Step back along -x.
    CHECK(traj.states[3].theta == Catch::Approx(std::numbers::pi));
    // First state copies the second.
    CHECK(traj.states[0].rho == traj.states[1].rho);
    CHECK(traj.states[0].theta == traj.states[1].theta);

    Trajectory too_short;
    too_short.states.resize(1);
    CHECK_THROWS_AS(derive_velocities(too_short), std::invalid_argument);
}

TEST_CASE("filter_and_split carves history, current and future") {
    // 60 s at 2.5 Hz = 150 states; O_s = 3.2 s -> 8 observed, future capped
    // at 50 s -> 125 states.
    Trajectory traj;
    traj.person_id = 3;
    traj.dt = 0.4;
    for (int i = 0; i < 150; ++i) {
        State s;
        s.x = i * 0.4;
        s.y = 0.0;
        s.rho = 1.0;
        s.theta = 0.0;
        s.time = i * 0.4;
        traj.states.push_back(s);
    }
    FilterStats stats;
    const auto splits =
        filter_and_split({traj}, SplitOptions{3.2, 50.0, 0.3}, &stats);
    REQUIRE(splits.size() == 1);
    CHECK(stats.kept == 1);
    CHECK(splits[0].history.size() == 8);
    CHECK(splits[0].future.size() == 125);
    CHECK(splits[0].current.x == splits[0].history.back().x);
    CHECK(splits[0].current.time == Catch::Approx(7 * 0.4));
    CHECK(splits[0].future.front().time == Catch::Approx(8 * 0.4));
}

TEST_CASE("filter_and_split keeps short futures and drops slow walkers") {
    auto make = [](int n, double rho) {
        Trajectory t;
        t.dt = 0.4;
        for (int i = 0; i < n; ++i) {
            State s;
            s.x = i * rho * 0.4;
            s.rho = rho;
            s.time = i * 0.4;
            t.states.push_back(s);
        }
        return t;
    };
    // 10 s trajectory = 25 states: 8 observed + 17 future.
    FilterStats stats;
    const auto splits = filter_and_split(
        {make(25, 1.0), make(8, 1.0), make(100, 0.1)},
        SplitOptions{3.2, 50.0, 0.3}, &stats);
    REQUIRE(splits.size() == 1);
    CHECK(splits[0].future.size() == 17);
    CHECK(stats.input == 3);
    CHECK(stats.too_short == 1);  // 8 states leave no future
    CHECK(stats.too_slow == 1);
}

TEST_CASE("canonical write and parse round-trip exactly") {
    Trajectory traj;
    traj.person_id = 77;
    traj.dt = 0.4;
    const double xs[] = {0.1, 1.0 / 3.0, std::numbers::pi * 10, -7.25e-3};
    for (int i = 0; i < 4; ++i) {
        State s;
        s.x = xs[i];
        s.y = xs[3 - i] * 2.0;
        s.time = 1351039234.567 + i * 0.4;
        traj.states.push_back(s);
    }
    std::ostringstream out;
    write_canonical(out, {traj});

    std::istringstream in(out.str());
    const auto tracks = parse_canonical_tracks(in, "roundtrip");
    REQUIRE(tracks.size() == 1);
    REQUIRE(tracks[0].points.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(tracks[0].points[i].time == traj.states[i].time);  // bit exact
        CHECK(tracks[0].points[i].x == traj.states[i].x);
        CHECK(tracks[0].points[i].y == traj.states[i].y);
    }
}

TEST_CASE("load_dataset splits on gaps and resamples") {
    std::string csv = "person_id,time_s,x_m,y_m\n";
    // Two segments separated by a 2 s hole (> 2 periods at 2.5 Hz).
    for (int i = 0; i < 10; ++i) {
        csv += "1," + std::to_string(i * 0.4) + "," + std::to_string(i * 0.4) +
               ",0.0\n";
    }
    for (int i = 0; i < 10; ++i) {
        const double t = 10.0 + i * 0.4;
        csv += "1," + std::to_string(t) + "," + std::to_string(t) + ",5.0\n";
    }
    TempFile file("cliff_test_gap.csv", csv);
    IngestStats stats;
    const auto trajs = load_dataset(file.path, Adapter::canonical, 2.5, &stats);
    REQUIRE(trajs.size() == 2);
    CHECK(stats.raw_tracks == 1);
    CHECK(stats.segments == 2);
    CHECK(trajs[0].states.size() == 10);
    CHECK(trajs[1].states.front().y == Catch::Approx(5.0));
    for (const auto& traj : trajs) {
        for (std::size_t i = 1; i < traj.states.size(); ++i) {
            CHECK(traj.states[i].time - traj.states[i - 1].time ==
                  Catch::Approx(0.4));
        }
    }
}

TEST_CASE("parse_canonical rejects irregular sampling") {
    TempFile good("cliff_test_reg.csv",
                  "person_id,time_s,x_m,y_m\n"
                  "1,0.0,0.0,0.0\n1,0.4,0.4,0.0\n1,0.8,0.8,0.0\n");
    const auto trajs = parse_canonical(good.path);
    REQUIRE(trajs.size() == 1);
    CHECK(trajs[0].dt == Catch::Approx(0.4));
    CHECK(trajs[0].states[1].rho == Catch::Approx(1.0));

    TempFile bad("cliff_test_irr.csv",
                 "person_id,time_s,x_m,y_m\n"
                 "1,0.0,0.0,0.0\n1,0.4,0.4,0.0\n1,1.5,0.8,0.0\n");
    CHECK_THROWS_WITH(parse_canonical(bad.path),
                      Catch::Matchers::ContainsSubstring("irregular"));
}

TEST_CASE("missing input file raises a readable error") {
    CHECK_THROWS_WITH(parse_atc(temp_path("no_such_file_cliff.csv")),
                      Catch::Matchers::ContainsSubstring("cannot open"));
}
