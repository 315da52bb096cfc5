#pragma once

#include <pll_lockin/core.hpp>

#include <cmath>
#include <random>

namespace pll::test {

/// Loop of the phase-portrait figure.
inline constexpr LoopParameters fig3{0.0633, 0.0225, 250.0};
/// Loop filter of the lock-in-vs-gain figure, at K = 250.
inline constexpr LoopParameters fig5{0.5, 0.0225, 250.0};
/// Strongly damped loop (xi ~ 8).
inline constexpr LoopParameters overdamped{0.5, 2.0, 250.0};

/// tau2 that gives damping xi for the given tau1 and K. Solves
/// (a tau2 + 1)^2 = 4 xi^2 a (tau1 + tau2), a = 2K/pi, for the positive root.
inline double tau2_for_xi(double tau1, double kvco, double xi)
{
    const double a = pd_gain * kvco;
    return ((2.0 * xi * xi - 1.0) + 2.0 * xi * std::sqrt(xi * xi - 1.0 + a * tau1)) / a;
}

inline LoopParameters with_xi(double tau1, double kvco, double xi) { return {tau1, tau2_for_xi(tau1, kvco, xi), kvco}; }

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline double log_uniform(Rng& rng, double lo, double hi) { return std::exp(uniform(rng, std::log(lo), std::log(hi))); }

inline LoopParameters random_loop(Rng& rng)
{
    return {log_uniform(rng, 1e-3, 2.0), log_uniform(rng, 1e-4, 2.0), log_uniform(rng, 1.0, 1e3)};
}

} // namespace pll::test

namespace pll::test {

/// True once (y, u) sits so close to a nodal eigenline of the rising segment
/// that N's logarithm is dominated by cancellation error.
inline bool near_nodal_eigenline(double y, double u, double xi, double rho)
{
    if (xi < 1.0)
        return false;
    const double scale = std::abs(y) + std::abs(u);
    return std::abs(y + (xi - rho) * u) < 1e-6 * scale || std::abs(y + (xi + rho) * u) < 1e-6 * scale;
}

} // namespace pll::test
