// Circular-linear probability primitives: velocities (direction, speed),
// semi-wrapped normal distributions and their mixtures. A semi-wrapped normal
// is a bivariate normal over (theta, rho) with the angular dimension wrapped
// onto the circle through winding numbers; the density sums the plane normal
// over winding shifts k, truncated to k in {-1, 0, 1}.

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cliff/angles.hpp"
#include "cliff/rng.hpp"

namespace cliff {

/// Direction (radians, [0, 2pi)) and speed (m/s, >= 0).
struct Velocity {
    double theta = 0.0;
    double rho = 0.0;

    Velocity() = default;

    Velocity(double theta_in, double rho_in)
        : theta(wrap_two_pi(theta_in)), rho(rho_in) {
        if (!std::isfinite(rho_in) || rho_in < 0.0) {
            throw std::invalid_argument("Velocity: speed must be finite and >= 0");
        }
    }
};

/// Symmetric 2x2 matrix over (theta, rho); symmetry is structural.
struct SymMat2 {
    double m00 = 0.0;  // var(theta)
    double m01 = 0.0;  // cov(theta, rho)
    double m11 = 0.0;  // var(rho)

    double det() const { return m00 * m11 - m01 * m01; }
    double trace() const { return m00 + m11; }

    double min_eigenvalue() const {
        const double t = trace();
        const double d = std::sqrt(std::max(0.0, t * t - 4.0 * det()));
        return 0.5 * (t - d);
    }

    double max_eigenvalue() const {
        const double t = trace();
        const double d = std::sqrt(std::max(0.0, t * t - 4.0 * det()));
        return 0.5 * (t + d);
    }

    /// Lower-triangular Cholesky factor (l00, l10, l11). Requires SPD.
    struct Chol {
        double l00, l10, l11;
    };
    Chol cholesky() const {
        const double l00 = std::sqrt(m00);
        const double l10 = m01 / l00;
        const double l11 = std::sqrt(m11 - l10 * l10);
        return {l00, l10, l11};
    }
};

// Below this the bivariate density is numerically singular.
inline constexpr double min_covariance_eigenvalue = 1e-9;

namespace detail {

inline void check_covariance(const SymMat2& sigma) {
    if (!std::isfinite(sigma.m00) || !std::isfinite(sigma.m01) ||
        !std::isfinite(sigma.m11)) {
        throw std::invalid_argument("covariance has non-finite entries");
    }
    if (sigma.min_eigenvalue() < min_covariance_eigenvalue) {
        throw std::invalid_argument(
            "covariance is singular or near-singular (min eigenvalue < 1e-9)");
    }
}

/// Log of the bivariate normal density at displacement (dx, dy) from the
/// mean. Kept in log space for EM, where raw densities underflow.
inline double log_binormal_pdf(double dx, double dy, const SymMat2& sigma) {
    const double det = sigma.det();
    const double q =
        (sigma.m11 * dx * dx - 2.0 * sigma.m01 * dx * dy + sigma.m00 * dy * dy) /
        det;
    return -0.5 * q - std::log(two_pi) - 0.5 * std::log(det);
}

/// Bivariate normal density at displacement (dx, dy) from the mean.
inline double binormal_pdf(double dx, double dy, const SymMat2& sigma) {
    return std::exp(log_binormal_pdf(dx, dy, sigma));
}

}  // namespace detail

/// Semi-wrapped normal: mean velocity plus covariance over (theta, rho).
struct Swnd {
    Velocity mu;
    SymMat2 sigma;

    Swnd(Velocity mu_in, SymMat2 sigma_in) : mu(mu_in), sigma(sigma_in) {
        detail::check_covariance(sigma);
    }
};

/// Density of a semi-wrapped normal, winding numbers truncated to {-1, 0, 1}.
inline double swnd_pdf(const Velocity& v, const Swnd& n) {
    const double dtheta = v.theta - n.mu.theta;
    const double drho = v.rho - n.mu.rho;
    double p = 0.0;
    for (int k = -1; k <= 1; ++k) {
        p += detail::binormal_pdf(dtheta + two_pi * k, drho, n.sigma);
    }
    return p;
}

/// Draws one velocity. Speed draws below zero are clamped to zero: speed is
/// semantically non-negative and only the direction feeds the predictor.
inline Velocity sample_swnd(const Swnd& n, Rng& rng) {
    const auto l = n.sigma.cholesky();
    const double z0 = rng.normal();
    const double z1 = rng.normal();
    const double theta = n.mu.theta + l.l00 * z0;
    const double rho = n.mu.rho + l.l10 * z0 + l.l11 * z1;
    return Velocity(wrap_two_pi(theta), std::max(0.0, rho));
}

/// Weighted mixture of semi-wrapped normals. Weights must sum to 1.
class Swgmm {
public:
    struct Component {
        double weight;
        Swnd swnd;
    };

    explicit Swgmm(std::vector<Component> components)
        : components_(std::move(components)) {
        if (components_.empty()) {
            throw std::invalid_argument("Swgmm: needs at least one component");
        }
        double sum = 0.0;
        for (const auto& c : components_) {
            if (!(c.weight >= 0.0 && c.weight <= 1.0)) {
                throw std::invalid_argument("Swgmm: weight outside [0, 1]");
            }
            sum += c.weight;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw std::invalid_argument("Swgmm: weights do not sum to 1");
        }
    }

    const std::vector<Component>& components() const { return components_; }
    std::size_t size() const { return components_.size(); }

    /// Component with the largest weight (first on ties).
    const Component& dominant() const {
        const Component* best = &components_.front();
        for (const auto& c : components_) {
            if (c.weight > best->weight) best = &c;
        }
        return *best;
    }

private:
    std::vector<Component> components_;
};

inline double swgmm_pdf(const Velocity& v, const Swgmm& g) {
    double p = 0.0;
    for (const auto& c : g.components()) {
        p += c.weight * swnd_pdf(v, c.swnd);
    }
    return p;
}

/// Picks a component by mixing factor, then draws from it.
inline Velocity sample_swgmm(const Swgmm& g, Rng& rng) {
    const auto& comps = g.components();
    std::size_t j = 0;
    if (comps.size() > 1) {
        double u = rng.uniform();
        for (; j + 1 < comps.size(); ++j) {
            u -= comps[j].weight;
            if (u < 0.0) break;
        }
    }
    return sample_swnd(comps[j].swnd, rng);
}

}  // namespace cliff
