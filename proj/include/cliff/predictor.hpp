// Stochastic long-term motion prediction on a CliffMap, plus the
// constant-velocity baseline.
//
// One rollout: estimate the current velocity from the observation window
// with a Gaussian recency kernel, then repeatedly advance the position one
// step (x_t = x_{t-1} + rho cos(theta) dt), sample a direction from the map
// at the new position, and pull the heading toward the sample by
// d * exp(-beta d^2). Speed never changes during a rollout. When no map cell
// lies within the sampling radius the rollout stops short (that step is not
// emitted) and the prediction is marked incomplete.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cliff/angles.hpp"
#include "cliff/core.hpp"
#include "cliff/map.hpp"
#include "cliff/rng.hpp"
#include "cliff/trajectory.hpp"

namespace cliff {

struct PredictorConfig {
    double beta = 1.0;             // direction-kernel width
    double sampling_radius = 1.0;  // r_s, meters
    double delta_t = 1.0;          // prediction step, seconds
    double horizon_s = 50.0;       // T_s
    double sigma_obs = 1.5;        // recency kernel std for observed velocity
    int num_rollouts = 20;         // k
    std::uint64_t seed = 0;

    void validate() const {
        if (!(beta >= 0.0)) {
            throw std::invalid_argument("PredictorConfig: beta must be >= 0");
        }
        if (!(sampling_radius > 0.0)) {
            throw std::invalid_argument(
                "PredictorConfig: sampling_radius must be > 0");
        }
        if (!(delta_t > 0.0)) {
            throw std::invalid_argument("PredictorConfig: delta_t must be > 0");
        }
        if (!(horizon_s >= delta_t)) {
            throw std::invalid_argument(
                "PredictorConfig: horizon_s must be >= delta_t");
        }
        if (!(sigma_obs > 0.0)) {
            throw std::invalid_argument("PredictorConfig: sigma_obs must be > 0");
        }
        if (num_rollouts < 1) {
            throw std::invalid_argument(
                "PredictorConfig: num_rollouts must be >= 1");
        }
    }

    std::size_t horizon_steps() const {
        return static_cast<std::size_t>(std::llround(horizon_s / delta_t));
    }
};

struct Prediction {
    std::vector<State> states;              // s_{t0+1} onwards
    std::vector<double> sampled_directions; // theta_s per emitted step
    bool complete = false;                  // full horizon reached
};

/// Velocity estimate over the observation window: recency weights
/// g(t) = exp(-t^2 / (2 sigma^2)) / (sigma sqrt(2 pi)), t = 1 for the newest
/// state, normalized to sum 1. Speed is the weighted mean; direction is the
/// weighted circular mean (a plain angle average breaks at the 0/2pi seam).
inline Velocity observed_velocity(const std::vector<State>& history,
                                  double sigma_obs) {
    if (history.empty()) {
        throw std::invalid_argument("observed_velocity: empty history");
    }
    if (!(sigma_obs > 0.0)) {
        throw std::invalid_argument("observed_velocity: sigma_obs must be > 0");
    }
    const std::size_t n = history.size();
    const double norm = 1.0 / (sigma_obs * std::sqrt(two_pi));
    double w_sum = 0.0, rho = 0.0, cs = 0.0, sn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto t = static_cast<double>(n - i);  // newest gets t = 1
        const double w = norm * std::exp(-0.5 * (t / sigma_obs) * (t / sigma_obs));
        w_sum += w;
        rho += w * history[i].rho;
        cs += w * std::cos(history[i].theta);
        sn += w * std::sin(history[i].theta);
    }
    return Velocity(wrap_two_pi(std::atan2(sn, cs)), rho / w_sum);
}

inline double kernel(double x, double beta) {
    return std::exp(-beta * x * x);
}

/// Cell whose direction distribution feeds the next step: among cells with
/// center within r_s of (x, y), the one with the highest motion ratio
/// (ties: nearest center, then lowest grid coordinate).
inline std::optional<std::pair<CellIndex, const CliffCell*>> select_cell(
    const CliffMap& map, double x, double y, double sampling_radius) {
    const auto nearby = map.query_radius(x, y, sampling_radius);
    if (nearby.empty()) return std::nullopt;
    const std::pair<CellIndex, const CliffCell*>* best = &nearby.front();
    auto dist2 = [&](const CliffCell* c) {
        return (c->x - x) * (c->x - x) + (c->y - y) * (c->y - y);
    };
    for (const auto& entry : nearby) {
        const auto& [idx, cell] = entry;
        const auto& [best_idx, best_cell] = *best;
        if (cell->motion_ratio > best_cell->motion_ratio) {
            best = &entry;
        } else if (cell->motion_ratio == best_cell->motion_ratio) {
            const double d = dist2(cell), bd = dist2(best_cell);
            if (d < bd || (d == bd && idx < best_idx)) best = &entry;
        }
    }
    return *best;
}

/// Draws a direction from the selected cell's mixture, or none when the map
/// has no cell within the sampling radius (the rollout stopping condition).
inline std::optional<double> sample_direction(double x, double y,
                                              const CliffMap& map,
                                              double sampling_radius, Rng& rng) {
    const auto cell = select_cell(map, x, y, sampling_radius);
    if (!cell) return std::nullopt;
    return sample_swgmm(cell->second->mixture, rng).theta;
}

/// One prediction step: position advances along the previous velocity; the
/// heading then moves toward theta_s by the kernel-scaled wrapped difference.
/// Without a sample the heading is carried unchanged (pure CVM step).
inline State step(const State& prev, std::optional<double> theta_s,
                  const PredictorConfig& cfg) {
    State next;
    next.x = prev.x + prev.rho * std::cos(prev.theta) * cfg.delta_t;
    next.y = prev.y + prev.rho * std::sin(prev.theta) * cfg.delta_t;
    next.rho = prev.rho;
    next.time = prev.time + cfg.delta_t;
    if (theta_s) {
        const double d = wrap_angle(*theta_s - prev.theta);
        next.theta = wrap_two_pi(prev.theta + d * kernel(d, cfg.beta));
    } else {
        next.theta = prev.theta;
    }
    return next;
}

/// One map-guided rollout from (x0, y0) at the time of the last observed
/// state. The direction is sampled at each step's new position, after the
/// position update.
inline Prediction predict(const std::vector<State>& history, double x0,
                          double y0, const CliffMap& map,
                          const PredictorConfig& cfg, Rng& rng) {
    cfg.validate();
    const Velocity obs = observed_velocity(history, cfg.sigma_obs);
    State cur;
    cur.x = x0;
    cur.y = y0;
    cur.rho = obs.rho;
    cur.theta = obs.theta;
    cur.time = history.back().time;

    Prediction out;
    const std::size_t steps = cfg.horizon_steps();
    out.states.reserve(steps);
    out.sampled_directions.reserve(steps);
    out.complete = true;
    for (std::size_t t = 0; t < steps; ++t) {
        const State moved = step(cur, std::nullopt, cfg);
        const auto theta_s =
            sample_direction(moved.x, moved.y, map, cfg.sampling_radius, rng);
        if (!theta_s) {
            out.complete = false;
            break;
        }
        cur = step(cur, theta_s, cfg);
        out.states.push_back(cur);
        out.sampled_directions.push_back(*theta_s);
    }
    return out;
}

/// k rollouts with per-rollout substreams derived from (seed, trajectory id,
/// rollout index): reproducible regardless of scheduling or worker count.
inline std::vector<Prediction> predict_k(const std::vector<State>& history,
                                         double x0, double y0,
                                         const CliffMap& map,
                                         const PredictorConfig& cfg,
                                         std::uint64_t trajectory_id) {
    cfg.validate();
    std::vector<Prediction> out;
    out.reserve(static_cast<std::size_t>(cfg.num_rollouts));
    for (int r = 0; r < cfg.num_rollouts; ++r) {
        Rng rng(mix_seed(cfg.seed, trajectory_id, static_cast<std::uint64_t>(r)));
        out.push_back(predict(history, x0, y0, map, cfg, rng));
    }
    return out;
}

/// Constant-velocity baseline: straight line at the observed velocity,
/// always complete.
inline Prediction cvm_predict(const std::vector<State>& history, double x0,
                              double y0, double horizon_s, double delta_t,
                              double sigma_obs = 1.5) {
    if (!(delta_t > 0.0) || !(horizon_s >= delta_t)) {
        throw std::invalid_argument("cvm_predict: need horizon_s >= delta_t > 0");
    }
    const Velocity obs = observed_velocity(history, sigma_obs);
    State cur;
    cur.x = x0;
    cur.y = y0;
    cur.rho = obs.rho;
    cur.theta = obs.theta;
    cur.time = history.back().time;

    PredictorConfig stepper;
    stepper.delta_t = delta_t;
    stepper.horizon_s = horizon_s;
    Prediction out;
    const std::size_t steps = stepper.horizon_steps();
    out.states.reserve(steps);
    out.complete = true;
    for (std::size_t t = 0; t < steps; ++t) {
        cur = step(cur, std::nullopt, stepper);
        out.states.push_back(cur);
    }
    return out;
}

}  // namespace cliff
