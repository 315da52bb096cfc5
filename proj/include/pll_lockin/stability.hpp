#pragma once

// Lyapunov-function estimate of the pull-in range.

#include "core.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace pll {

struct StabilityReport {
    /// beta0 at the edge of the estimate, i.e. the right side of the
    /// global-stability inequality clamped to 1.
    double beta0 = 0.0;
    /// The inequality can hold for some frequency error (false for a lag filter).
    bool condition_holds = false;
    double pull_in_lower_bound = 0.0; ///< rad/s
    /// The estimate carries no information (tau2 == 0).
    bool bound_is_trivial = false;
};

namespace detail {

inline void require_inside_hold_in(double omega, double kvco)
{
    if (!(std::isfinite(kvco) && kvco > 0.0))
        throw Error(ErrorCode::InvalidParameters, "kvco must be finite and > 0");
    if (!(omega > 0.0 && omega < kvco))
        throw Error(ErrorCode::OutOfRange, "beta0 requires 0 < omega < kvco");
}

/// 2(-tau2/tau1 + sqrt(tau2 (tau1 + tau2)) / tau1)
inline double stability_threshold(const LoopParameters& params) noexcept
{
    return 2.0 * (std::sqrt(params.tau2 * params.tau_sum()) - params.tau2) / params.tau1;
}

} // namespace detail

/// Closed form for the triangular characteristic: 2 w K / (w^2 + K^2).
inline double beta0(double omega, double kvco)
{
    detail::require_inside_hold_in(omega, kvco);
    return 2.0 * omega * kvco / (omega * omega + kvco * kvco);
}

/// beta0 from its defining ratio
///   -int_0^{2pi} (v(s) - w/K) ds / int_0^{2pi} |v(s) - w/K| ds
/// by adaptive Gauss-Kronrod quadrature. The interval is split at the PD
/// breakpoints and where v(s) = w/K so each piece has a smooth integrand.
inline double beta0_from_integrals(double omega, double kvco)
{
    detail::require_inside_hold_in(omega, kvco);
    const double level = omega / kvco;

    std::array<double, 6> cuts = {0.0, half_pi, 1.5 * pi, two_pi, half_pi * level, pi - half_pi * level};
    std::sort(cuts.begin(), cuts.end());

    using Quadrature = boost::math::quadrature::gauss_kronrod<double, 15>;
    constexpr unsigned max_depth = 15;
    constexpr double abs_tol = 1e-10;

    double signed_integral = 0.0;
    double absolute_integral = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i];
        const double hi = cuts[i + 1];
        if (hi <= lo)
            continue;
        signed_integral += Quadrature::integrate([level](double s) { return pd_value(s) - level; }, lo, hi, max_depth,
                                                 abs_tol);
        absolute_integral += Quadrature::integrate([level](double s) { return std::abs(pd_value(s) - level); }, lo, hi,
                                                   max_depth, abs_tol);
    }
    return -signed_integral / absolute_integral;
}

/// Sufficient condition for global stability at frequency error omega.
inline bool global_stability_condition(const LoopParameters& params, double omega)
{
    params.validate();
    if (params.tau2 == 0.0)
        throw Error(ErrorCode::ConditionInapplicable, "lag filter (tau2 = 0): the threshold is zero");
    return beta0(omega, params.kvco) < detail::stability_threshold(params);
}

/// Lower bound for the pull-in frequency: the omega at which beta0 reaches
/// the stability threshold.
inline StabilityReport pull_in_lower_bound(const LoopParameters& params)
{
    params.validate();
    StabilityReport report;
    if (params.tau2 == 0.0) {
        report.bound_is_trivial = true;
        return report;
    }

    const double threshold = detail::stability_threshold(params);
    report.condition_holds = threshold > 0.0;
    report.beta0 = std::min(threshold, 1.0);

    const double inverse = 1.0 / threshold; // tau1 / (2 sqrt(tau2 (tau1+tau2)) - 2 tau2)
    const double radicand = inverse * inverse - 1.0;
    if (radicand < 0.0) {
        // Threshold >= 1 >= max beta0: the condition holds on the whole hold-in range.
        report.pull_in_lower_bound = params.kvco;
        return report;
    }
    // a - sqrt(a^2 - 1) written without the cancellation
    report.pull_in_lower_bound = std::min(params.kvco / (inverse + std::sqrt(radicand)), params.kvco);
    return report;
}

} // namespace pll
