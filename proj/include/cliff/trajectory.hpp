// Trajectory containers shared by ingestion, map building and evaluation.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cliff {

/// One raw detection before resampling.
struct RawPoint {
    double time = 0.0;  // seconds
    double x = 0.0;     // meters
    double y = 0.0;
};

/// A person's raw detections, time-ordered.
struct RawTrack {
    std::int64_t person_id = 0;
    std::vector<RawPoint> points;
};

/// Pose plus derived velocity at one sample instant.
struct State {
    double x = 0.0;
    double y = 0.0;
    double rho = 0.0;    // m/s, >= 0
    double theta = 0.0;  // radians, [0, 2pi)
    double time = 0.0;   // seconds
};

/// Uniformly sampled states for one person (or one gap-free segment).
struct Trajectory {
    std::int64_t person_id = 0;
    double dt = 0.0;  // sampling period, seconds
    std::vector<State> states;

    double duration() const {
        return states.size() < 2 ? 0.0 : states.back().time - states.front().time;
    }
};

/// Observation window, anchor state, and ground-truth future of one
/// trajectory. `current` is the last observed state; prediction starts there.
struct SplitTrajectory {
    std::int64_t person_id = 0;
    double dt = 0.0;
    std::vector<State> history;  // first O_p states, oldest first
    State current;               // == history.back()
    std::vector<State> future;   // ground truth, at least one state
};

}  // namespace cliff
