// Displacement-error metrics and the evaluation harness: ADE/FDE against
// linearly interpolated ground truth, best-of-k variants, per-horizon
// aggregation, and single-parameter sweeps.
//
// Ground truth is passed as the state at prediction start followed by the
// future states; predicted timestamps need not coincide with the recording
// grid (e.g. a 1 s prediction step over 2.5 Hz data), so ground truth
// positions are interpolated at the predicted times. A prediction counts
// toward a horizon's errors up to its last step inside both the horizon and
// the ground-truth extent.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cliff/ingest.hpp"
#include "cliff/map.hpp"
#include "cliff/predictor.hpp"
#include "cliff/trajectory.hpp"

namespace cliff {

namespace detail {

inline constexpr double time_eps = 1e-9;

inline std::optional<std::pair<double, double>> interpolate_position(
    const std::vector<State>& gt, double t) {
    if (gt.empty() || t < gt.front().time - time_eps ||
        t > gt.back().time + time_eps) {
        return std::nullopt;
    }
    auto it = std::lower_bound(
        gt.begin(), gt.end(), t,
        [](const State& s, double value) { return s.time < value; });
    if (it == gt.begin()) return std::make_pair(it->x, it->y);
    if (it == gt.end()) return std::make_pair(gt.back().x, gt.back().y);
    const State& b = *it;
    const State& a = *(it - 1);
    const double u = (t - a.time) / (b.time - a.time);
    return std::make_pair(a.x + u * (b.x - a.x), a.y + u * (b.y - a.y));
}

}  // namespace detail

/// Mean displacement over the prediction's steps that fall within both the
/// horizon (measured from ground-truth start) and the ground-truth extent.
inline double ade(const Prediction& pred, const std::vector<State>& gt,
                  double horizon_s = std::numeric_limits<double>::infinity()) {
    if (gt.empty()) {
        throw std::invalid_argument("ade: empty ground truth");
    }
    const double t_max = gt.front().time + horizon_s;
    double sum = 0.0;
    std::size_t count = 0;
    for (const State& s : pred.states) {
        if (s.time > t_max + detail::time_eps) break;
        const auto p = detail::interpolate_position(gt, s.time);
        if (!p) break;
        sum += std::hypot(s.x - p->first, s.y - p->second);
        ++count;
    }
    if (count == 0) {
        throw std::runtime_error("ade: no overlapping steps");
    }
    return sum / static_cast<double>(count);
}

/// Displacement at the last prediction step available within the horizon.
inline double fde(const Prediction& pred, const std::vector<State>& gt,
                  double horizon_s = std::numeric_limits<double>::infinity()) {
    if (gt.empty()) {
        throw std::invalid_argument("fde: empty ground truth");
    }
    const double t_max = gt.front().time + horizon_s;
    double last = -1.0;
    for (const State& s : pred.states) {
        if (s.time > t_max + detail::time_eps) break;
        const auto p = detail::interpolate_position(gt, s.time);
        if (!p) break;
        last = std::hypot(s.x - p->first, s.y - p->second);
    }
    if (last < 0.0) {
        throw std::runtime_error("fde: no overlapping steps");
    }
    return last;
}

namespace detail {

template <typename Metric>
inline double best_of(const std::vector<Prediction>& predictions,
                      const std::vector<State>& gt, double horizon_s,
                      Metric metric) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pred : predictions) {
        if (pred.states.empty()) continue;
        try {
            best = std::min(best, metric(pred, gt, horizon_s));
        } catch (const std::runtime_error&) {
        }
    }
    if (!std::isfinite(best)) {
        throw std::runtime_error("top_k: no prediction overlaps ground truth");
    }
    return best;
}

}  // namespace detail

inline double top_k_ade(const std::vector<Prediction>& predictions,
                        const std::vector<State>& gt,
                        double horizon_s = std::numeric_limits<double>::infinity()) {
    if (predictions.empty()) {
        throw std::invalid_argument("top_k_ade: no predictions");
    }
    return detail::best_of(predictions, gt, horizon_s,
                           [](const auto& p, const auto& g, double h) {
                               return ade(p, g, h);
                           });
}

inline double top_k_fde(const std::vector<Prediction>& predictions,
                        const std::vector<State>& gt,
                        double horizon_s = std::numeric_limits<double>::infinity()) {
    if (predictions.empty()) {
        throw std::invalid_argument("top_k_fde: no predictions");
    }
    return detail::best_of(predictions, gt, horizon_s,
                           [](const auto& p, const auto& g, double h) {
                               return fde(p, g, h);
                           });
}

// ---------------------------------------------------------------------------
// Per-horizon aggregation
// ---------------------------------------------------------------------------

struct MetricsRow {
    double horizon_s = 0.0;
    std::size_t n = 0;  // trajectories contributing errors at this horizon
    double ade_mean = 0.0;
    double ade_std = 0.0;
    double fde_mean = 0.0;
    double fde_std = 0.0;
    double topk_ade_mean = 0.0;
    double topk_fde_mean = 0.0;
    double completion_ratio = 0.0;  // rollouts reaching this horizon
};

struct EvaluationReport {
    std::vector<MetricsRow> cliff;
    std::vector<MetricsRow> cvm;
};

/// Every multiple of delta_t up to horizon_s.
inline std::vector<double> make_horizon_grid(double delta_t, double horizon_s) {
    if (!(delta_t > 0.0) || !(horizon_s >= delta_t)) {
        throw std::invalid_argument("make_horizon_grid: need horizon_s >= delta_t > 0");
    }
    const auto steps = static_cast<std::size_t>(std::llround(horizon_s / delta_t));
    std::vector<double> grid(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        grid[i] = static_cast<double>(i + 1) * delta_t;
    }
    return grid;
}

namespace detail {

struct Accumulator {
    std::size_t n = 0;
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double v) {
        ++n;
        sum += v;
        sum_sq += v * v;
    }
    double mean() const { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
    double sample_std() const {
        if (n < 2) return 0.0;
        const double m = mean();
        const double var =
            (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        return std::sqrt(std::max(0.0, var));
    }
};

/// Time of the last predicted state, relative to ground-truth start.
inline double coverage_s(const Prediction& pred, double t0) {
    return pred.states.empty() ? 0.0 : pred.states.back().time - t0;
}

inline std::vector<MetricsRow> aggregate_rows(
    const std::vector<std::vector<Prediction>>& per_traj,
    const std::vector<std::vector<State>>& gts,
    const std::vector<double>& horizons) {
    std::vector<MetricsRow> rows;
    rows.reserve(horizons.size());
    for (const double h : horizons) {
        MetricsRow row;
        row.horizon_s = h;
        Accumulator a_ade, a_fde, a_topk_ade, a_topk_fde;
        std::size_t rollouts = 0, covered = 0;
        for (std::size_t i = 0; i < per_traj.size(); ++i) {
            const auto& preds = per_traj[i];
            const auto& gt = gts[i];
            const double t0 = gt.front().time;
            Accumulator traj_ade, traj_fde;
            for (const auto& pred : preds) {
                ++rollouts;
                if (coverage_s(pred, t0) >= h - time_eps) ++covered;
                if (pred.states.empty()) continue;
                try {
                    traj_ade.add(ade(pred, gt, h));
                    traj_fde.add(fde(pred, gt, h));
                } catch (const std::runtime_error&) {
                }
            }
            if (traj_ade.n == 0) continue;
            a_ade.add(traj_ade.mean());
            a_fde.add(traj_fde.mean());
            a_topk_ade.add(top_k_ade(preds, gt, h));
            a_topk_fde.add(top_k_fde(preds, gt, h));
        }
        row.n = a_ade.n;
        row.ade_mean = a_ade.mean();
        row.ade_std = a_ade.sample_std();
        row.fde_mean = a_fde.mean();
        row.fde_std = a_fde.sample_std();
        row.topk_ade_mean = a_topk_ade.mean();
        row.topk_fde_mean = a_topk_fde.mean();
        row.completion_ratio =
            rollouts == 0 ? 0.0
                          : static_cast<double>(covered) / static_cast<double>(rollouts);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace detail

/// Runs predict_k and the CVM baseline over every split trajectory and
/// aggregates per-horizon metrics (mean and sample standard deviation across
/// trajectories; per-trajectory values average the k rollouts, best-of-k is
/// reported separately). Deterministic given cfg.seed.
inline EvaluationReport evaluate(const std::vector<SplitTrajectory>& splits,
                                 const CliffMap& map, const PredictorConfig& cfg,
                                 const std::vector<double>& horizons) {
    cfg.validate();
    if (splits.empty()) {
        throw std::invalid_argument("evaluate: empty dataset");
    }
    if (horizons.empty()) {
        throw std::invalid_argument("evaluate: no horizons");
    }
    PredictorConfig run_cfg = cfg;
    run_cfg.horizon_s =
        std::max(cfg.horizon_s, *std::max_element(horizons.begin(), horizons.end()));

    std::vector<std::vector<Prediction>> cliff_preds;
    std::vector<std::vector<Prediction>> cvm_preds;
    std::vector<std::vector<State>> gts;
    cliff_preds.reserve(splits.size());
    cvm_preds.reserve(splits.size());
    gts.reserve(splits.size());
    for (std::size_t i = 0; i < splits.size(); ++i) {
        const auto& split = splits[i];
        cliff_preds.push_back(predict_k(split.history, split.current.x,
                                        split.current.y, map, run_cfg,
                                        static_cast<std::uint64_t>(i)));
        cvm_preds.push_back({cvm_predict(split.history, split.current.x,
                                         split.current.y, run_cfg.horizon_s,
                                         run_cfg.delta_t, run_cfg.sigma_obs)});
        std::vector<State> gt;
        gt.reserve(split.future.size() + 1);
        gt.push_back(split.current);
        gt.insert(gt.end(), split.future.begin(), split.future.end());
        gts.push_back(std::move(gt));
    }

    EvaluationReport report;
    report.cliff = detail::aggregate_rows(cliff_preds, gts, horizons);
    report.cvm = detail::aggregate_rows(cvm_preds, gts, horizons);
    return report;
}

// ---------------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------------

enum class SweepParameter { obs_horizon, beta, sampling_radius, delta_t };

inline SweepParameter sweep_parameter_from_name(std::string_view name) {
    if (name == "obs-horizon" || name == "O_s") return SweepParameter::obs_horizon;
    if (name == "beta") return SweepParameter::beta;
    if (name == "rs" || name == "r_s") return SweepParameter::sampling_radius;
    if (name == "dt" || name == "delta_t") return SweepParameter::delta_t;
    throw std::invalid_argument("unknown sweep parameter: " + std::string(name) +
                                " (expected obs-horizon, beta, rs or dt)");
}

namespace detail {

inline void check_sweep_range(SweepParameter param, double value) {
    auto require = [&](double lo, double hi, const char* name) {
        if (!(value >= lo && value <= hi)) {
            throw std::invalid_argument(
                std::string("sweep value ") + std::to_string(value) + " for " +
                name + " outside supported range [" + std::to_string(lo) + ", " +
                std::to_string(hi) + "]");
        }
    };
    switch (param) {
        case SweepParameter::obs_horizon: require(1.2, 3.2, "obs-horizon"); break;
        case SweepParameter::beta: require(0.5, 10.0, "beta"); break;
        case SweepParameter::sampling_radius: require(1.0, 3.0, "rs"); break;
        case SweepParameter::delta_t: require(0.4, 1.0, "dt"); break;
    }
}

}  // namespace detail

struct SweepResult {
    double value = 0.0;
    EvaluationReport report;
};

/// One evaluate run per value, sharing the seed base. Sweeping the
/// observation horizon re-splits the trajectories; sweeping the prediction
/// step re-derives the horizon grid.
inline std::vector<SweepResult> sweep(SweepParameter param,
                                      const std::vector<double>& values,
                                      const std::vector<Trajectory>& trajectories,
                                      const CliffMap& map,
                                      const PredictorConfig& cfg,
                                      const SplitOptions& split_opts) {
    if (values.empty()) {
        throw std::invalid_argument("sweep: no values");
    }
    for (const double v : values) detail::check_sweep_range(param, v);

    std::vector<SweepResult> results;
    results.reserve(values.size());
    for (const double v : values) {
        PredictorConfig run_cfg = cfg;
        SplitOptions opts = split_opts;
        switch (param) {
            case SweepParameter::obs_horizon: opts.obs_horizon_s = v; break;
            case SweepParameter::beta: run_cfg.beta = v; break;
            case SweepParameter::sampling_radius: run_cfg.sampling_radius = v; break;
            case SweepParameter::delta_t: run_cfg.delta_t = v; break;
        }
        const auto splits = filter_and_split(trajectories, opts);
        const auto horizons =
            make_horizon_grid(run_cfg.delta_t, run_cfg.horizon_s);
        results.push_back(SweepResult{v, evaluate(splits, map, run_cfg, horizons)});
    }
    return results;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

inline const std::string metrics_csv_header =
    "method,horizon_s,n,ade_mean,ade_std,fde_mean,fde_std,topk_ade,topk_fde,"
    "completion_ratio";

inline void write_metrics_csv(std::ostream& out, const EvaluationReport& report) {
    out << metrics_csv_header << "\n";
    char buf[256];
    auto emit = [&](const char* method, const MetricsRow& r) {
        std::snprintf(buf, sizeof(buf),
                      "%s,%.9g,%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", method,
                      r.horizon_s, r.n, r.ade_mean, r.ade_std, r.fde_mean,
                      r.fde_std, r.topk_ade_mean, r.topk_fde_mean,
                      r.completion_ratio);
        out << buf;
    };
    for (const auto& row : report.cliff) emit("cliff-lhmp", row);
    for (const auto& row : report.cvm) emit("cvm", row);
}

}  // namespace cliff
