// Dataset ingestion: adapters for the canonical CSV, the ATC shopping-mall
// recordings, and THOR motion-capture exports, plus resampling, velocity
// derivation and observation/ground-truth splitting.
//
// Canonical CSV: header `person_id,time_s,x_m,y_m`, UTF-8, LF endings.
// ATC rows: time_s, person_id, x_mm, y_mm, z_mm, velocity, motion angle,
// facing angle (no header; positions converted mm -> m).
// THOR: wide per-frame layout, `Frame` at 100 Hz (or `Time` in seconds)
// followed by `<Helmet> X`, `<Helmet> Y` [, `<Helmet> Z`] column groups in mm;
// empty or NaN cells leave a gap.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cliff/angles.hpp"
#include "cliff/trajectory.hpp"

namespace cliff {

enum class Adapter { canonical, atc, thor };

inline Adapter adapter_from_name(std::string_view name) {
    if (name == "canonical") return Adapter::canonical;
    if (name == "atc") return Adapter::atc;
    if (name == "thor") return Adapter::thor;
    throw std::invalid_argument("unknown adapter: " + std::string(name));
}

struct FilterStats {
    std::size_t input = 0;
    std::size_t kept = 0;
    std::size_t too_short = 0;
    std::size_t too_slow = 0;
};

struct SplitOptions {
    double obs_horizon_s = 3.2;    // O_s
    double horizon_cap_s = 50.0;   // ground truth kept up to this
    double min_mean_speed = 0.3;   // continuous-motion filter, m/s
};

namespace detail {

inline std::string strip(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(strip(std::string_view(line).substr(start)));
            break;
        }
        out.push_back(strip(std::string_view(line).substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

inline std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return v;
}

inline std::optional<std::int64_t> parse_int(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::int64_t v = 0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return v;
}

[[noreturn]] inline void fail_row(const std::string& source, std::size_t line,
                                  const std::string& what) {
    std::ostringstream msg;
    msg << source << ":" << line << ": " << what;
    throw std::runtime_error(msg.str());
}

/// Groups per-person points, sorts by time, rejects duplicate/backward stamps.
inline std::vector<RawTrack> group_tracks(
    std::map<std::int64_t, std::vector<RawPoint>>& by_person,
    const std::string& source) {
    std::vector<RawTrack> tracks;
    tracks.reserve(by_person.size());
    for (auto& [id, points] : by_person) {
        std::stable_sort(points.begin(), points.end(),
                         [](const RawPoint& a, const RawPoint& b) {
                             return a.time < b.time;
                         });
        for (std::size_t i = 1; i < points.size(); ++i) {
            if (!(points[i].time > points[i - 1].time)) {
                throw std::runtime_error(source + ": non-monotone time for person " +
                                         std::to_string(id));
            }
        }
        tracks.push_back(RawTrack{id, std::move(points)});
    }
    return tracks;
}

inline std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open input file: " + path);
    }
    return in;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Parsers
// ---------------------------------------------------------------------------

inline const std::string canonical_header = "person_id,time_s,x_m,y_m";

/// Canonical CSV -> raw tracks (grouped, time-sorted).
inline std::vector<RawTrack> parse_canonical_tracks(std::istream& in,
                                                    const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(source + ": missing header '" + canonical_header +
                                 "'");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::strip(line) != canonical_header) {
        throw std::runtime_error(source + ": missing header '" + canonical_header +
                                 "'");
    }
    std::map<std::int64_t, std::vector<RawPoint>> by_person;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::strip(line).empty()) continue;
        const auto fields = detail::split_csv(line);
        if (fields.size() != 4) {
            detail::fail_row(source, line_no, "expected 4 fields, got " +
                                                  std::to_string(fields.size()));
        }
        const auto id = detail::parse_int(fields[0]);
        const auto t = detail::parse_double(fields[1]);
        const auto x = detail::parse_double(fields[2]);
        const auto y = detail::parse_double(fields[3]);
        if (!id) detail::fail_row(source, line_no, "bad person_id '" + fields[0] + "'");
        if (!t) detail::fail_row(source, line_no, "bad time_s '" + fields[1] + "'");
        if (!x) detail::fail_row(source, line_no, "bad x_m '" + fields[2] + "'");
        if (!y) detail::fail_row(source, line_no, "bad y_m '" + fields[3] + "'");
        by_person[*id].push_back(RawPoint{*t, *x, *y});
    }
    return detail::group_tracks(by_person, source);
}

/// ATC CSV -> raw tracks. Positions mm -> m; timestamps are already seconds.
inline std::vector<RawTrack> parse_atc(std::istream& in,
                                       const std::string& source) {
    std::map<std::int64_t, std::vector<RawPoint>> by_person;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = detail::strip(line);
        if (stripped.empty()) continue;
        const auto fields = detail::split_csv(line);
        if (line_no == 1 && !detail::parse_double(fields[0])) {
            continue;  // tolerate a header line
        }
        if (fields.size() < 4) {
            detail::fail_row(source, line_no, "expected at least 4 fields, got " +
                                                  std::to_string(fields.size()));
        }
        const auto t = detail::parse_double(fields[0]);
        const auto id = detail::parse_int(fields[1]);
        const auto x_mm = detail::parse_double(fields[2]);
        const auto y_mm = detail::parse_double(fields[3]);
        if (!t) detail::fail_row(source, line_no, "bad time '" + fields[0] + "'");
        if (!id) detail::fail_row(source, line_no, "bad person id '" + fields[1] + "'");
        if (!x_mm) detail::fail_row(source, line_no, "bad x '" + fields[2] + "'");
        if (!y_mm) detail::fail_row(source, line_no, "bad y '" + fields[3] + "'");
        by_person[*id].push_back(RawPoint{*t, *x_mm / 1000.0, *y_mm / 1000.0});
    }
    return detail::group_tracks(by_person, source);
}

inline std::vector<RawTrack> parse_atc(const std::string& path) {
    auto in = detail::open_or_throw(path);
    return parse_atc(in, path);
}

/// THOR wide CSV -> raw tracks. Missing cells (empty or NaN) become gaps.
inline std::vector<RawTrack> parse_thor(std::istream& in,
                                        const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(source + ": missing header");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split_csv(line);
    if (header.empty()) {
        throw std::runtime_error(source + ": missing header");
    }
    const std::string time_col = header[0];
    const bool frame_based =
        time_col == "Frame" || time_col == "frame" || time_col == "FRAME";
    if (!frame_based && time_col != "Time" && time_col != "time") {
        throw std::runtime_error(source +
                                 ": first column must be 'Frame' or 'Time'");
    }

    // Column groups: "<name> X" and "<name> Y" paired by name.
    struct PersonCols {
        std::int64_t id;
        std::size_t x_col, y_col;
    };
    std::map<std::string, std::pair<std::size_t, std::size_t>> groups;
    for (std::size_t c = 1; c < header.size(); ++c) {
        const std::string& h = header[c];
        if (h.size() < 2) continue;
        const char axis = h.back();
        const std::string name = detail::strip(h.substr(0, h.size() - 1));
        if (axis == 'X' || axis == 'x') {
            groups[name].first = c + 1;  // store 1-based, 0 means absent
        } else if (axis == 'Y' || axis == 'y') {
            groups[name].second = c + 1;
        }
    }
    std::vector<PersonCols> persons;
    std::int64_t fallback_id = 0;
    for (const auto& [name, cols] : groups) {
        if (cols.first == 0 || cols.second == 0) continue;
        // Trailing integer in the group name becomes the person id.
        std::size_t d = name.size();
        while (d > 0 && std::isdigit(static_cast<unsigned char>(name[d - 1]))) --d;
        std::int64_t id = ++fallback_id;
        if (d < name.size()) {
            id = *detail::parse_int(name.substr(d));
        }
        persons.push_back(PersonCols{id, cols.first - 1, cols.second - 1});
    }
    if (persons.empty()) {
        throw std::runtime_error(source + ": no '<name> X'/'<name> Y' column pairs");
    }

    std::map<std::int64_t, std::vector<RawPoint>> by_person;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::strip(line).empty()) continue;
        const auto fields = detail::split_csv(line);
        const auto t_raw = detail::parse_double(fields[0]);
        if (!t_raw) {
            detail::fail_row(source, line_no, "bad frame/time '" + fields[0] + "'");
        }
        const double t = frame_based ? *t_raw / 100.0 : *t_raw;
        for (const auto& p : persons) {
            if (p.x_col >= fields.size() || p.y_col >= fields.size()) continue;
            const auto x = detail::parse_double(fields[p.x_col]);
            const auto y = detail::parse_double(fields[p.y_col]);
            if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y)) {
                continue;  // gap
            }
            by_person[p.id].push_back(RawPoint{t, *x / 1000.0, *y / 1000.0});
        }
    }
    return detail::group_tracks(by_person, source);
}

inline std::vector<RawTrack> parse_thor(const std::string& path) {
    auto in = detail::open_or_throw(path);
    return parse_thor(in, path);
}

inline std::vector<RawTrack> parse_raw(const std::string& path, Adapter adapter) {
    auto in = detail::open_or_throw(path);
    switch (adapter) {
        case Adapter::canonical: return parse_canonical_tracks(in, path);
        case Adapter::atc: return parse_atc(in, path);
        case Adapter::thor: return parse_thor(in, path);
    }
    throw std::logic_error("parse_raw: bad adapter");
}

// ---------------------------------------------------------------------------
// Resampling and velocity derivation
// ---------------------------------------------------------------------------

/// Fills rho/theta from finite differences of consecutive positions. Steps
/// with zero displacement carry the previous direction (0 at the start); the
/// first state copies the second's velocity.
inline void derive_velocities(Trajectory& traj) {
    auto& s = traj.states;
    if (s.size() < 2) {
        throw std::invalid_argument("derive_velocities: need at least 2 states");
    }
    double last_theta = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double dx = s[i].x - s[i - 1].x;
        const double dy = s[i].y - s[i - 1].y;
        const double dist = std::hypot(dx, dy);
        const double dt = s[i].time - s[i - 1].time;
        s[i].rho = dist / dt;
        if (dist > 0.0) {
            last_theta = wrap_two_pi(std::atan2(dy, dx));
        }
        s[i].theta = last_theta;
    }
    s[0].rho = s[1].rho;
    s[0].theta = s[1].theta;
}

/// Linearly interpolates raw points onto a uniform grid of period
/// 1/target_hz anchored at the first timestamp, then derives velocities.
inline Trajectory resample(const std::vector<RawPoint>& points, double target_hz,
                           std::int64_t person_id = 0) {
    if (!(target_hz > 0.0)) {
        throw std::invalid_argument("resample: target_hz must be > 0");
    }
    if (points.size() < 2) {
        throw std::invalid_argument("resample: need at least 2 points");
    }
    const double period = 1.0 / target_hz;
    const double t0 = points.front().time;
    const double t_end = points.back().time;
    if (t_end - t0 < period) {
        throw std::runtime_error("resample: track shorter than one period");
    }
    const auto n = static_cast<std::size_t>(
        std::floor((t_end - t0) / period + 1e-9)) + 1;

    Trajectory traj;
    traj.person_id = person_id;
    traj.dt = period;
    traj.states.reserve(n);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t0 + static_cast<double>(i) * period;
        while (seg + 2 < points.size() && points[seg + 1].time < t) ++seg;
        const RawPoint& a = points[seg];
        const RawPoint& b = points[seg + 1];
        const double u = (t - a.time) / (b.time - a.time);
        State st;
        st.time = t;
        st.x = a.x + u * (b.x - a.x);
        st.y = a.y + u * (b.y - a.y);
        traj.states.push_back(st);
    }
    derive_velocities(traj);
    return traj;
}

/// Splits a track wherever consecutive points are more than `max_gap_s`
/// apart. Motion across longer holes is not invented by interpolation.
inline std::vector<RawTrack> split_on_gaps(const RawTrack& track,
                                           double max_gap_s) {
    std::vector<RawTrack> out;
    if (track.points.empty()) return out;
    RawTrack cur{track.person_id, {track.points.front()}};
    for (std::size_t i = 1; i < track.points.size(); ++i) {
        if (track.points[i].time - track.points[i - 1].time > max_gap_s) {
            out.push_back(std::move(cur));
            cur = RawTrack{track.person_id, {}};
        }
        cur.points.push_back(track.points[i]);
    }
    out.push_back(std::move(cur));
    return out;
}

/// Canonical CSV parsed straight into trajectories. Requires regular
/// sampling (10% jitter tolerance); irregular inputs must be resampled.
inline std::vector<Trajectory> parse_canonical(const std::string& path) {
    auto in = detail::open_or_throw(path);
    auto tracks = parse_canonical_tracks(in, path);
    std::vector<Trajectory> out;
    out.reserve(tracks.size());
    for (auto& track : tracks) {
        if (track.points.size() < 2) continue;
        std::vector<double> gaps;
        gaps.reserve(track.points.size() - 1);
        for (std::size_t i = 1; i < track.points.size(); ++i) {
            gaps.push_back(track.points[i].time - track.points[i - 1].time);
        }
        std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
        const double dt = gaps[gaps.size() / 2];
        for (std::size_t i = 1; i < track.points.size(); ++i) {
            const double gap = track.points[i].time - track.points[i - 1].time;
            if (std::abs(gap - dt) > 0.1 * dt) {
                throw std::runtime_error(
                    path + ": irregular sampling for person " +
                    std::to_string(track.person_id) +
                    "; resample the data (e.g. via load_dataset)");
            }
        }
        Trajectory traj;
        traj.person_id = track.person_id;
        traj.dt = dt;
        traj.states.reserve(track.points.size());
        for (const auto& p : track.points) {
            State st;
            st.x = p.x;
            st.y = p.y;
            st.time = p.time;
            traj.states.push_back(st);
        }
        derive_velocities(traj);
        out.push_back(std::move(traj));
    }
    return out;
}

struct IngestStats {
    std::size_t raw_tracks = 0;
    std::size_t segments = 0;
    std::size_t too_short = 0;
};

/// Full ingestion pipeline: parse, split on gaps longer than two sampling
/// periods, resample each segment, derive velocities.
inline std::vector<Trajectory> load_dataset(const std::string& path,
                                            Adapter adapter, double target_hz,
                                            IngestStats* stats = nullptr) {
    const auto tracks = parse_raw(path, adapter);
    const double max_gap = 2.0 / target_hz;
    std::vector<Trajectory> out;
    IngestStats local;
    local.raw_tracks = tracks.size();
    for (const auto& track : tracks) {
        for (const auto& segment : split_on_gaps(track, max_gap)) {
            ++local.segments;
            if (segment.points.size() < 2 ||
                segment.points.back().time - segment.points.front().time <
                    1.0 / target_hz) {
                ++local.too_short;
                continue;
            }
            out.push_back(resample(segment.points, target_hz, segment.person_id));
        }
    }
    if (stats) *stats = local;
    return out;
}

// ---------------------------------------------------------------------------
// Observation / ground-truth splitting
// ---------------------------------------------------------------------------

/// Keeps trajectories long enough to observe for O_s and still have a
/// future, drops trajectories without continuous motion, and splits the rest
/// into (history of O_p states, current state, ground-truth future).
inline std::vector<SplitTrajectory> filter_and_split(
    const std::vector<Trajectory>& trajectories, const SplitOptions& opts,
    FilterStats* stats = nullptr) {
    std::vector<SplitTrajectory> out;
    FilterStats local;
    local.input = trajectories.size();
    for (const auto& traj : trajectories) {
        const auto obs_steps =
            static_cast<std::size_t>(std::llround(opts.obs_horizon_s / traj.dt));
        if (obs_steps < 1 || traj.states.size() < obs_steps + 1) {
            ++local.too_short;
            continue;
        }
        double mean_speed = 0.0;
        for (const auto& s : traj.states) mean_speed += s.rho;
        mean_speed /= static_cast<double>(traj.states.size());
        if (mean_speed < opts.min_mean_speed) {
            ++local.too_slow;
            continue;
        }
        const auto max_future = static_cast<std::size_t>(
            std::llround(opts.horizon_cap_s / traj.dt));
        SplitTrajectory split;
        split.person_id = traj.person_id;
        split.dt = traj.dt;
        split.history.assign(traj.states.begin(), traj.states.begin() + obs_steps);
        split.current = split.history.back();
        const auto future_len =
            std::min(traj.states.size() - obs_steps, max_future);
        split.future.assign(traj.states.begin() + obs_steps,
                            traj.states.begin() + obs_steps + future_len);
        out.push_back(std::move(split));
        ++local.kept;
    }
    if (stats) *stats = local;
    return out;
}

// ---------------------------------------------------------------------------
// Canonical writer (exact round-trip)
// ---------------------------------------------------------------------------

inline void write_canonical(std::ostream& out,
                            const std::vector<Trajectory>& trajectories) {
    out << canonical_header << "\n";
    char buf[96];
    for (const auto& traj : trajectories) {
        for (const auto& s : traj.states) {
            std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g\n",
                          static_cast<long long>(traj.person_id), s.time, s.x, s.y);
            out << buf;
        }
    }
}

inline void write_canonical(const std::string& path,
                            const std::vector<Trajectory>& trajectories) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open output file: " + path);
    }
    write_canonical(out, trajectories);
}

}  // namespace cliff
