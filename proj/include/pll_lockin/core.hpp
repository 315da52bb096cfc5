#pragma once

// Baseband model of an analog PLL with a lead-lag loop filter
// F(s) = (1 + tau2 s) / (1 + (tau1 + tau2) s) and a triangular (square-wave)
// phase-detector characteristic.

#include "error.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace pll {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double half_pi = 0.5 * std::numbers::pi;
/// Magnitude of the PD characteristic slope on every linear segment.
inline constexpr double pd_gain = 2.0 / std::numbers::pi;

struct LoopParameters {
    double tau1 = 0.0; ///< s
    double tau2 = 0.0; ///< s
    double kvco = 0.0; ///< rad/s per unit PD output

    [[nodiscard]] double tau_sum() const noexcept { return tau1 + tau2; }

    void validate() const
    {
        if (!(std::isfinite(tau1) && tau1 > 0.0))
            throw Error(ErrorCode::InvalidParameters, "tau1 must be finite and > 0");
        if (!(std::isfinite(tau2) && tau2 >= 0.0))
            throw Error(ErrorCode::InvalidParameters, "tau2 must be finite and >= 0");
        if (!(std::isfinite(kvco) && kvco > 0.0))
            throw Error(ErrorCode::InvalidParameters, "kvco must be finite and > 0");
    }

    friend bool operator==(const LoopParameters&, const LoopParameters&) = default;
};

/// (x, theta_e): loop-filter state and phase error. theta_e lives on a
/// cylinder; the dynamics are 2*pi periodic in it.
struct PhaseState {
    double x = 0.0;
    double theta_e = 0.0;

    friend bool operator==(const PhaseState&, const PhaseState&) = default;
};

struct PhaseDerivative {
    double dx = 0.0;
    double dtheta_e = 0.0;
};

enum class EquilibriumKind { Saddle, StableNode, StableDegenerateNode, StableFocus };

constexpr std::string_view to_string(EquilibriumKind kind) noexcept
{
    switch (kind) {
    case EquilibriumKind::Saddle: return "saddle";
    case EquilibriumKind::StableNode: return "stable_node";
    case EquilibriumKind::StableDegenerateNode: return "stable_degenerate_node";
    case EquilibriumKind::StableFocus: return "stable_focus";
    }
    return "unknown";
}

constexpr bool is_stable(EquilibriumKind kind) noexcept { return kind != EquilibriumKind::Saddle; }

struct EquilibriumPoint {
    double x_eq = 0.0;
    double theta_eq = 0.0;
    int index_m = 0;
    EquilibriumKind kind = EquilibriumKind::Saddle;
};

/// Inclusive range of equilibrium indices m.
struct IndexRange {
    int first = -2;
    int last = 2;
};

namespace detail {

/// Offset of theta inside its period, in [-pi/2, 3pi/2). Values below pi/2
/// sit on a rising segment, the rest on a falling one.
inline double pd_phase(double theta) noexcept
{
    const double shifted = theta + half_pi;
    double r = shifted - two_pi * std::floor(shifted / two_pi);
    if (r >= two_pi) // floor rounding on huge arguments
        r -= two_pi;
    if (r < 0.0)
        r = 0.0;
    return r - half_pi;
}

} // namespace detail

/// Triangular PD characteristic: continuous, 2*pi periodic, range [-1, 1].
inline double pd_value(double theta_e) noexcept
{
    const double phase = detail::pd_phase(theta_e);
    if (phase < half_pi)
        return pd_gain * phase;
    return 2.0 - pd_gain * phase;
}

/// Slope of pd_value. At the breakpoints pi/2 + pi*k the right-hand
/// derivative is returned, matching the half-open segment convention.
inline double pd_slope(double theta_e) noexcept
{
    return detail::pd_phase(theta_e) < half_pi ? pd_gain : -pd_gain;
}

inline PhaseDerivative vector_field(const PhaseState& state, const LoopParameters& params, double omega) noexcept
{
    const double sum = params.tau_sum();
    const double v = pd_value(state.theta_e);
    return {
        -state.x / sum + params.tau1 * v / sum,
        omega - params.kvco * (state.x / sum + params.tau2 * v / sum),
    };
}

inline double hold_in_frequency(const LoopParameters& params)
{
    params.validate();
    return params.kvco;
}

/// Trajectories eventually enter and stay in |x| < tau1.
inline double dissipativity_bound(const LoopParameters& params)
{
    params.validate();
    return params.tau1;
}

/// Relative band around xi = 1 (on xi^2 - 1) treated as a degenerate node.
inline constexpr double degenerate_tolerance = 1e-9;

/// Coefficients of chi(l) = l^2 + b l + c for the linearisation at a point
/// where the PD slope equals `slope`.
struct CharacteristicPolynomial {
    double b = 0.0;
    double c = 0.0;

    [[nodiscard]] double discriminant() const noexcept { return b * b - 4.0 * c; }
};

inline CharacteristicPolynomial characteristic_polynomial(const LoopParameters& params, double slope) noexcept
{
    const double sum = params.tau_sum();
    return {(1.0 + params.kvco * params.tau2 * slope) / sum, params.kvco * slope / sum};
}

inline EquilibriumKind classify_equilibrium(const LoopParameters& params, const EquilibriumPoint& eq)
{
    const double slope = pd_slope(eq.theta_eq);
    if (slope < 0.0)
        return EquilibriumKind::Saddle;
    const auto chi = characteristic_polynomial(params, slope);
    // disc / (4c) equals xi^2 - 1; the tolerance is applied on that scale.
    const double normalized = chi.discriminant() / (4.0 * chi.c);
    if (std::abs(normalized) < degenerate_tolerance)
        return EquilibriumKind::StableDegenerateNode;
    return normalized < 0.0 ? EquilibriumKind::StableFocus : EquilibriumKind::StableNode;
}

/// Equilibrium with index m: (tau1 w/K, (-1)^m (pi/2) w/K + pi m).
inline EquilibriumPoint equilibrium(const LoopParameters& params, double omega, int m)
{
    params.validate();
    if (!(std::abs(omega) < params.kvco))
        throw Error(ErrorCode::NoEquilibria, "|omega| >= kvco: the frequency error is outside the hold-in range");
    const double ratio = omega / params.kvco;
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    EquilibriumPoint eq;
    eq.x_eq = params.tau1 * ratio;
    eq.theta_eq = sign * half_pi * ratio + pi * m;
    eq.index_m = m;
    eq.kind = classify_equilibrium(params, eq);
    return eq;
}

inline std::vector<EquilibriumPoint> equilibria(const LoopParameters& params, double omega, IndexRange range = {})
{
    if (range.last < range.first)
        throw Error(ErrorCode::InvalidParameters, "empty equilibrium index range");
    std::vector<EquilibriumPoint> out;
    out.reserve(static_cast<std::size_t>(range.last - range.first + 1));
    for (int m = range.first; m <= range.last; ++m)
        out.push_back(equilibrium(params, omega, m));
    return out;
}

} // namespace pll
