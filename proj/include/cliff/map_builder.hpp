// CliffMap construction: bin velocity observations into grid cells, fit a
// semi-wrapped Gaussian mixture per cell with EM, select the component count
// by BIC, attach motion ratios.
//
// EM treats the winding number k in {-1,0,1} as a latent assignment next to
// the component index: responsibilities are computed per (j, k) pair, means
// use the k-unwrapped angles and are re-wrapped afterwards. Initialization is
// k-means++ seeding on the (cos t, sin t, rho) embedding, which has no seam.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <vector>

#include "cliff/angles.hpp"
#include "cliff/core.hpp"
#include "cliff/map.hpp"
#include "cliff/rng.hpp"
#include "cliff/trajectory.hpp"

namespace cliff {

struct BuilderConfig {
    double resolution = 1.0;
    int max_components = 5;
    std::size_t min_observations_per_cell = 10;
    int em_max_iterations = 100;
    double em_convergence_tol = 1e-6;
    double motion_speed_threshold = 0.1;
    std::uint64_t seed = 0;
    int workers = 1;

    void validate() const {
        if (!(resolution > 0.0)) {
            throw std::invalid_argument("BuilderConfig: resolution must be > 0");
        }
        if (max_components < 1) {
            throw std::invalid_argument("BuilderConfig: max_components must be >= 1");
        }
        if (!(em_convergence_tol > 0.0)) {
            throw std::invalid_argument("BuilderConfig: em_convergence_tol must be > 0");
        }
        if (em_max_iterations < 1) {
            throw std::invalid_argument("BuilderConfig: em_max_iterations must be >= 1");
        }
        if (workers < 1) {
            throw std::invalid_argument("BuilderConfig: workers must be >= 1");
        }
    }
};

/// Per-cell observations: velocities with rho > 0 feed the mixture fit;
/// zero-speed states only contribute to the frame counts.
struct CellObservations {
    CellIndex index;
    std::vector<Velocity> velocities;
    std::size_t total_frames = 0;
    std::size_t moving_frames = 0;  // rho > motion_speed_threshold
};

inline std::unordered_map<CellIndex, CellObservations, CellIndexHash>
bin_observations(const std::vector<Trajectory>& trajectories, double resolution,
                 double motion_speed_threshold = 0.1) {
    if (!(resolution > 0.0)) {
        throw std::invalid_argument("bin_observations: resolution must be > 0");
    }
    std::unordered_map<CellIndex, CellObservations, CellIndexHash> cells;
    for (const auto& traj : trajectories) {
        for (const auto& s : traj.states) {
            const CellIndex idx = cell_of(s.x, s.y, resolution);
            auto& cell = cells[idx];
            cell.index = idx;
            ++cell.total_frames;
            if (s.rho > motion_speed_threshold) ++cell.moving_frames;
            if (s.rho > 0.0) {
                cell.velocities.push_back(Velocity(s.theta, s.rho));
            }
        }
    }
    return cells;
}

inline double compute_motion_ratio(const CellObservations& cell,
                                   std::size_t cell_total_frames) {
    if (cell_total_frames == 0) {
        throw std::invalid_argument("compute_motion_ratio: zero total frames");
    }
    if (cell.moving_frames > cell_total_frames) {
        throw std::invalid_argument(
            "compute_motion_ratio: moving frames exceed total frames");
    }
    return static_cast<double>(cell.moving_frames) /
           static_cast<double>(cell_total_frames);
}

/// Result of one per-cell fit. `converged` is false when EM hit the
/// iteration cap for the selected model order.
struct SwgmmFit {
    Swgmm mixture;
    bool converged = true;
    double log_likelihood = 0.0;
    double bic = 0.0;
    std::vector<double> log_likelihood_trace;  // for the selected model order
};

namespace detail {

/// Clamps both eigenvalues of a symmetric 2x2 matrix from below.
inline SymMat2 floor_eigenvalues(const SymMat2& m, double min_eig) {
    const double tr = m.trace();
    const double disc = std::sqrt(std::max(
        0.0, 0.25 * (m.m00 - m.m11) * (m.m00 - m.m11) + m.m01 * m.m01));
    const double l1 = 0.5 * tr + disc;
    const double l2 = 0.5 * tr - disc;
    if (l2 >= min_eig) return m;
    if (disc < 1e-300) {
        return SymMat2{std::max(m.m00, min_eig), 0.0, std::max(m.m11, min_eig)};
    }
    // Unit eigenvector for l1; the l2 direction is its rotation by pi/2.
    double ex = m.m01, ey = l1 - m.m00;
    double norm = std::hypot(ex, ey);
    if (norm < 1e-300) {
        ex = l1 - m.m11;
        ey = m.m01;
        norm = std::hypot(ex, ey);
    }
    ex /= norm;
    ey /= norm;
    const double a = std::max(l1, min_eig);
    const double b = std::max(l2, min_eig);
    return SymMat2{a * ex * ex + b * ey * ey, (a - b) * ex * ey,
                   a * ey * ey + b * ex * ex};
}

struct EmState {
    std::vector<double> weight;     // pi_j
    std::vector<Velocity> mu;       // component means
    std::vector<SymMat2> sigma;     // component covariances
};

/// k-means++ seeding on the (cos t, sin t, rho) embedding followed by one
/// hard assignment pass to produce initial means, covariances and weights.
inline EmState init_components(const std::vector<Velocity>& obs, int j_count,
                               Rng& rng) {
    const std::size_t n = obs.size();
    std::vector<std::array<double, 3>> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        pts[i] = {std::cos(obs[i].theta), std::sin(obs[i].theta), obs[i].rho};
    }
    auto dist2 = [&](std::size_t i, const std::array<double, 3>& c) {
        const double d0 = pts[i][0] - c[0];
        const double d1 = pts[i][1] - c[1];
        const double d2 = pts[i][2] - c[2];
        return d0 * d0 + d1 * d1 + d2 * d2;
    };

    std::vector<std::size_t> centers;
    centers.push_back(static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)) % n);
    std::vector<double> best(n);
    for (std::size_t i = 0; i < n; ++i) best[i] = dist2(i, pts[centers[0]]);
    while (centers.size() < static_cast<std::size_t>(j_count)) {
        double total = 0.0;
        for (double d : best) total += d;
        std::size_t pick = 0;
        if (total > 0.0) {
            double r = rng.uniform() * total;
            for (std::size_t i = 0; i < n; ++i) {
                r -= best[i];
                if (r <= 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)) % n;
        }
        centers.push_back(pick);
        for (std::size_t i = 0; i < n; ++i) {
            best[i] = std::min(best[i], dist2(i, pts[pick]));
        }
    }

    const auto j_total = static_cast<std::size_t>(j_count);
    std::vector<std::size_t> assign(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t arg = 0;
        double d_min = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < j_total; ++j) {
            const double d = dist2(i, pts[centers[j]]);
            if (d < d_min) {
                d_min = d;
                arg = j;
            }
        }
        assign[i] = arg;
    }

    EmState st;
    st.weight.assign(j_total, 0.0);
    st.mu.reserve(j_total);
    st.sigma.reserve(j_total);
    for (std::size_t j = 0; j < j_total; ++j) {
        // Circular mean of the cluster's angles, arithmetic mean of speeds.
        double cs = 0.0, sn = 0.0, rho_sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (assign[i] != j) continue;
            cs += pts[i][0];
            sn += pts[i][1];
            rho_sum += obs[i].rho;
            ++count;
        }
        const std::size_t effective = count > 0 ? count : 1;
        const Velocity seed_mu = count > 0 && (cs != 0.0 || sn != 0.0)
            ? Velocity(wrap_two_pi(std::atan2(sn, cs)),
                       rho_sum / static_cast<double>(effective))
            : obs[centers[j]];
        double v_theta = 0.0, v_rho = 0.0, v_cross = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (assign[i] != j) continue;
            const double dth = wrap_angle(obs[i].theta - seed_mu.theta);
            const double drh = obs[i].rho - seed_mu.rho;
            v_theta += dth * dth;
            v_rho += drh * drh;
            v_cross += dth * drh;
        }
        const auto denom = static_cast<double>(effective);
        st.mu.push_back(seed_mu);
        st.sigma.push_back(floor_eigenvalues(
            SymMat2{v_theta / denom, v_cross / denom, v_rho / denom}, 1e-2));
        st.weight[j] = count > 0 ? static_cast<double>(count) / static_cast<double>(n)
                                 : 1.0 / static_cast<double>(n);
    }
    double w_sum = 0.0;
    for (double w : st.weight) w_sum += w;
    for (double& w : st.weight) w /= w_sum;
    return st;
}

inline constexpr int winding_numbers[3] = {-1, 0, 1};

/// One EM run at fixed component count. Returns the log-likelihood trace;
/// the state is updated in place.
inline std::vector<double> run_em(const std::vector<Velocity>& obs, EmState& st,
                                  int max_iterations, double tol,
                                  bool* converged) {
    const std::size_t n = obs.size();
    const std::size_t j_total = st.weight.size();
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(max_iterations));
    // Responsibilities per datum over (component, winding) pairs.
    std::vector<double> resp(n * j_total * 3);
    std::vector<double> log_terms(j_total * 3);
    *converged = false;

    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < max_iterations; ++iter) {
        // E-step in log space.
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double max_term = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < j_total; ++j) {
                for (int ki = 0; ki < 3; ++ki) {
                    const double dth = obs[i].theta - st.mu[j].theta +
                                       two_pi * winding_numbers[ki];
                    const double drh = obs[i].rho - st.mu[j].rho;
                    const double lp =
                        std::log(st.weight[j]) +
                        log_binormal_pdf(dth, drh, st.sigma[j]);
                    log_terms[j * 3 + ki] = lp;
                    max_term = std::max(max_term, lp);
                }
            }
            double sum = 0.0;
            for (std::size_t t = 0; t < j_total * 3; ++t) {
                sum += std::exp(log_terms[t] - max_term);
            }
            const double log_norm = max_term + std::log(sum);
            ll += log_norm;
            for (std::size_t t = 0; t < j_total * 3; ++t) {
                resp[i * j_total * 3 + t] = std::exp(log_terms[t] - log_norm);
            }
        }
        trace.push_back(ll);
        if (std::abs(ll - prev_ll) < tol) {
            *converged = true;
            break;
        }
        prev_ll = ll;

        // M-step: weighted circular-linear means on k-unwrapped angles,
        // covariances of the unwrapped residuals, floored eigenvalues.
        for (std::size_t j = 0; j < j_total; ++j) {
            double w_sum = 0.0, th_sum = 0.0, rho_sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                for (int ki = 0; ki < 3; ++ki) {
                    const double r = resp[(i * j_total + j) * 3 + ki];
                    const double unwrapped =
                        obs[i].theta + two_pi * winding_numbers[ki];
                    w_sum += r;
                    th_sum += r * unwrapped;
                    rho_sum += r * obs[i].rho;
                }
            }
            if (w_sum < 1e-12) {
                st.weight[j] = 1e-12;
                continue;
            }
            const double mu_th_unwrapped = th_sum / w_sum;
            const double mu_rho = std::max(0.0, rho_sum / w_sum);
            double v_theta = 0.0, v_rho = 0.0, v_cross = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                for (int ki = 0; ki < 3; ++ki) {
                    const double r = resp[(i * j_total + j) * 3 + ki];
                    const double ath = obs[i].theta +
                                       two_pi * winding_numbers[ki] -
                                       mu_th_unwrapped;
                    const double arh = obs[i].rho - mu_rho;
                    v_theta += r * ath * ath;
                    v_cross += r * ath * arh;
                    v_rho += r * arh * arh;
                }
            }
            st.mu[j] = Velocity(wrap_two_pi(mu_th_unwrapped), mu_rho);
            st.sigma[j] = floor_eigenvalues(
                SymMat2{v_theta / w_sum, v_cross / w_sum, v_rho / w_sum}, 1e-4);
            st.weight[j] = w_sum / static_cast<double>(n);
        }
        double w_total = 0.0;
        for (double w : st.weight) w_total += w;
        for (double& w : st.weight) w /= w_total;
    }
    return trace;
}

}  // namespace detail

/// Fits an SWGMM to one cell's moving observations. Model order is chosen by
/// BIC over J = 1..max_components; orders with more parameters than
/// observations are skipped.
inline SwgmmFit fit_swgmm(const std::vector<Velocity>& observations,
                          const BuilderConfig& cfg, Rng& rng) {
    cfg.validate();
    const std::size_t n = observations.size();
    if (n < cfg.min_observations_per_cell) {
        throw std::invalid_argument("fit_swgmm: fewer observations than minimum");
    }

    std::optional<SwgmmFit> best;
    for (int j_count = 1; j_count <= cfg.max_components; ++j_count) {
        const auto param_count = static_cast<std::size_t>(6 * j_count - 1);
        if (n < param_count) continue;
        auto st = detail::init_components(observations, j_count, rng);
        bool converged = false;
        auto trace = detail::run_em(observations, st, cfg.em_max_iterations,
                                    cfg.em_convergence_tol, &converged);
        const double ll = trace.back();
        const double bic = -2.0 * ll + static_cast<double>(param_count) *
                                           std::log(static_cast<double>(n));
        if (best && bic >= best->bic) continue;

        std::vector<Swgmm::Component> comps;
        comps.reserve(st.weight.size());
        double w_sum = 0.0;
        for (double w : st.weight) w_sum += w;
        for (std::size_t j = 0; j < st.weight.size(); ++j) {
            comps.push_back(Swgmm::Component{st.weight[j] / w_sum,
                                             Swnd{st.mu[j], st.sigma[j]}});
        }
        best = SwgmmFit{Swgmm(std::move(comps)), converged, ll, bic,
                        std::move(trace)};
    }
    if (!best) {
        throw std::runtime_error("fit_swgmm: no admissible model order");
    }
    return std::move(*best);
}

/// Builds the full map. Cells are fitted independently, each on a random
/// substream derived from (seed, cell coordinate), so the result does not
/// depend on the worker count.
inline CliffMap build_cliff_map(const std::vector<Trajectory>& trajectories,
                                const BuilderConfig& cfg) {
    cfg.validate();
    if (trajectories.empty()) {
        throw std::invalid_argument("build_cliff_map: no trajectories");
    }
    auto binned = bin_observations(trajectories, cfg.resolution,
                                   cfg.motion_speed_threshold);

    std::vector<const CellObservations*> eligible;
    for (const auto& [idx, cell] : binned) {
        if (cell.velocities.size() >= cfg.min_observations_per_cell) {
            eligible.push_back(&cell);
        }
    }
    if (eligible.empty()) {
        throw std::runtime_error("empty map: no cell has enough observations");
    }
    std::sort(eligible.begin(), eligible.end(),
              [](const CellObservations* a, const CellObservations* b) {
                  return a->index < b->index;
              });

    std::vector<std::optional<Swgmm>> fitted(eligible.size());
    auto fit_one = [&](std::size_t i) {
        const CellObservations& obs = *eligible[i];
        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(obs.index.cx),
                         static_cast<std::uint64_t>(obs.index.cy)));
        fitted[i] = fit_swgmm(obs.velocities, cfg, rng).mixture;
    };

    const auto worker_count = std::min<std::size_t>(
        static_cast<std::size_t>(cfg.workers), eligible.size());
    if (worker_count <= 1) {
        for (std::size_t i = 0; i < eligible.size(); ++i) fit_one(i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(worker_count);
        for (std::size_t w = 0; w < worker_count; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < eligible.size(); i += worker_count) {
                    fit_one(i);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    CliffMap map(cfg.resolution);
    for (std::size_t i = 0; i < eligible.size(); ++i) {
        const CellObservations& obs = *eligible[i];
        map.insert(obs.index, std::move(*fitted[i]),
                   compute_motion_ratio(obs, obs.total_frames),
                   static_cast<int>(obs.velocities.size()));
    }
    return map;
}

}  // namespace cliff
