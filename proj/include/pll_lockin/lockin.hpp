#pragma once

// Exact conservative lock-in frequency.
//
// After the change of variables
//   y   = sqrt(pi T / 2K) w - sqrt(pi K / 2T) (x + tau2 v(theta)),   T = tau1 + tau2
//   tau = sqrt(2K / (pi T)) t
// the model is linear on each PD segment, and the upper separatrix y = S(theta)
// of the saddle (pi - c, 0), c = pi w / 2K, is carried across the rising
// segment B = [-pi/2, pi/2] by the first integral N and across the falling
// segment A = [-3pi/2, -pi/2] by M. The conservative lock-in frequency is the
// w for which S passes through the pre-switch saddle (c - pi, 2 w sqrt(pi T / 2K)).

#include "core.hpp"
#include "root_finding.hpp"

#include <cmath>
#include <cstdint>
#include <string_view>

namespace pll {

struct ReducedParameters {
    double xi = 0.0;    ///< damping of the rising segment
    double eta = 0.0;   ///< anti-damping of the falling segment
    double rho = 0.0;   ///< sqrt(|xi^2 - 1|)
    double kappa = 0.0; ///< sqrt(eta^2 + 1)
};

enum class DampingCase { XiGreater, XiEqualOne, XiLess };

constexpr std::string_view to_string(DampingCase c) noexcept
{
    switch (c) {
    case DampingCase::XiGreater: return "xi>1";
    case DampingCase::XiEqualOne: return "xi=1";
    case DampingCase::XiLess: return "xi<1";
    }
    return "unknown";
}

/// |xi - 1| below this selects the xi = 1 formulas.
inline constexpr double xi_one_tolerance = 1e-9;

struct ReducedState {
    double y = 0.0;
    double theta_e = 0.0;
    double tau = 0.0;
};

struct ReducedDerivative {
    double dy = 0.0;
    double dtheta_e = 0.0;
};

struct LockInSolution {
    double omega_lc = 0.0; ///< rad/s
    double y_ab = 0.0;     ///< S(-pi/2)
    DampingCase case_tag = DampingCase::XiLess;
    double residual_a = 0.0; ///< M equation at (omega_lc, y_ab)
    double residual_b = 0.0; ///< N equation at (omega_lc, y_ab)
    std::uintmax_t iterations = 0;
};

inline ReducedParameters reduced_parameters(const LoopParameters& params)
{
    params.validate();
    const double gain = pd_gain * params.kvco;
    const double denom = 2.0 * std::sqrt(gain * params.tau_sum());
    ReducedParameters rp;
    rp.xi = (gain * params.tau2 + 1.0) / denom;
    rp.eta = (gain * params.tau2 - 1.0) / denom;
    rp.rho = std::sqrt(std::abs(rp.xi * rp.xi - 1.0));
    rp.kappa = std::sqrt(rp.eta * rp.eta + 1.0);
    return rp;
}

inline DampingCase damping_case(const ReducedParameters& rp) noexcept
{
    if (std::abs(rp.xi - 1.0) < xi_one_tolerance)
        return DampingCase::XiEqualOne;
    return rp.xi > 1.0 ? DampingCase::XiGreater : DampingCase::XiLess;
}

/// d tau / d t.
inline double time_scale(const LoopParameters& params) noexcept
{
    return std::sqrt(2.0 * params.kvco / (pi * params.tau_sum()));
}

inline ReducedState to_reduced(const PhaseState& state, const LoopParameters& params, double omega, double t = 0.0)
{
    const double sum = params.tau_sum();
    const double a = std::sqrt(pi * sum / (2.0 * params.kvco));
    const double b = std::sqrt(pi * params.kvco / (2.0 * sum));
    return {a * omega - b * (state.x + params.tau2 * pd_value(state.theta_e)), state.theta_e, time_scale(params) * t};
}

inline PhaseState from_reduced(const ReducedState& state, const LoopParameters& params, double omega)
{
    const double sum = params.tau_sum();
    const double a = std::sqrt(pi * sum / (2.0 * params.kvco));
    const double b = std::sqrt(pi * params.kvco / (2.0 * sum));
    return {(a * omega - state.y) / b - params.tau2 * pd_value(state.theta_e), state.theta_e};
}

inline ReducedDerivative reduced_vector_field(const ReducedState& state, const LoopParameters& params, double omega)
{
    const double damping = std::sqrt(pi) / std::sqrt(2.0 * params.kvco * params.tau_sum());
    const double dy = -half_pi * pd_value(state.theta_e)
                      - damping * (1.0 + params.kvco * params.tau2 * pd_slope(state.theta_e)) * state.y
                      + pi * omega / (2.0 * params.kvco);
    return {dy, state.y};
}

/// Eigenpairs of the reduced system linearised at a saddle, directions as
/// (d theta_e, d y).
struct SaddleEigenstructure {
    double stable_eigenvalue = 0.0;   ///< eta - kappa < 0
    double unstable_eigenvalue = 0.0; ///< eta + kappa > 0
    double stable_slope = 0.0;        ///< direction (1, eta - kappa)
    double unstable_slope = 0.0;      ///< direction (1, eta + kappa)
};

inline SaddleEigenstructure saddle_eigenstructure(const ReducedParameters& rp) noexcept
{
    return {rp.eta - rp.kappa, rp.eta + rp.kappa, rp.eta - rp.kappa, rp.eta + rp.kappa};
}

/// S(pi/2): on (pi/2, pi - c) the separatrix is the stable eigenline of the saddle.
inline double separatrix_initial_value(const LoopParameters& params, double omega)
{
    const auto rp = reduced_parameters(params);
    return (rp.kappa - rp.eta) * (half_pi - pi * omega / (2.0 * params.kvco));
}

namespace detail {

[[noreturn]] inline void singular(const char* what) { throw Error(ErrorCode::SingularPoint, what); }

/// N(y, theta) with u = theta - c. For xi < 1 the arctangent branch jumps by
/// pi xi / rho across u = 0.
inline double first_integral_b(double y, double u, const ReducedParameters& rp, DampingCase kase)
{
    const double xi = rp.xi;
    const double rho = rp.rho;
    switch (kase) {
    case DampingCase::XiGreater: {
        const double slow = y + (xi - rho) * u;
        const double fast = y + (xi + rho) * u;
        if (slow == 0.0 || fast == 0.0)
            singular("N: point on a nodal eigenline");
        return 0.5 * ((rho - xi) / rho * std::log(std::abs(slow)) + (rho + xi) / rho * std::log(std::abs(fast)));
    }
    case DampingCase::XiEqualOne: {
        const double sum = y + u;
        if (sum == 0.0)
            singular("N: point on the degenerate-node eigenline");
        return u / sum + std::log(2.0 * std::abs(sum));
    }
    case DampingCase::XiLess: {
        if (u == 0.0)
            singular("N: theta_e at the stable equilibrium");
        const double quadratic = y * y + 2.0 * xi * y * u + u * u;
        return 0.5 * std::log(quadratic) - xi / rho * std::atan((y + xi * u) / (u * rho));
    }
    }
    return 0.0;
}

/// Factors of M(y, theta) with w = theta + pi + c.
struct MFactors {
    double upper = 0.0; ///< y + w / (kappa + eta), kappa + eta > 0
    double lower = 0.0; ///< y + w / (eta - kappa)
};

inline MFactors m_factors(double y, double w, const ReducedParameters& rp) noexcept
{
    return {y + w / (rp.kappa + rp.eta), y + w / (rp.eta - rp.kappa)};
}

inline double first_integral_a(const MFactors& f, const ReducedParameters& rp)
{
    if (f.upper == 0.0 || f.lower == 0.0)
        singular("M: point on a saddle eigenline");
    const double k = rp.kappa;
    const double e = rp.eta;
    return 0.5 * ((k - e) / k * std::log(std::abs(f.upper)) + (k + e) / k * std::log(std::abs(f.lower)));
}

/// Quantities shared by every stage of the separatrix construction at one omega.
struct SeparatrixSetup {
    ReducedParameters rp;
    DampingCase kase = DampingCase::XiLess;
    double shift = 0.0;       ///< c = pi w / 2K, theta_e of the stable equilibrium
    double s_start = 0.0;     ///< S(pi/2)
    double y_pre_saddle = 0.0; ///< reduced y of the pre-switch saddle

    SeparatrixSetup(const LoopParameters& params, double omega)
        : rp(reduced_parameters(params)), kase(damping_case(rp)), shift(pi * omega / (2.0 * params.kvco))
    {
        if (!(omega > 0.0 && omega < params.kvco))
            throw Error(ErrorCode::OutOfRange, "the separatrix construction requires 0 < omega < kvco");
        s_start = (rp.kappa - rp.eta) * (half_pi - shift);
        y_pre_saddle = 2.0 * omega * std::sqrt(pi * params.tau_sum() / (2.0 * params.kvco));
    }

    /// Value N(y_AB, -pi/2) has to take.
    [[nodiscard]] double n_target() const
    {
        const double carried = first_integral_b(s_start, half_pi - shift, rp, kase);
        return kase == DampingCase::XiLess ? carried + pi * rp.xi / rp.rho : carried;
    }

    /// Lowest y at theta_e = -pi/2 above the nodal eigenlines.
    [[nodiscard]] double y_ab_floor() const noexcept
    {
        const double reach = half_pi + shift;
        switch (kase) {
        case DampingCase::XiGreater: return (rp.xi + rp.rho) * reach;
        case DampingCase::XiEqualOne: return reach;
        case DampingCase::XiLess: return 0.0;
        }
        return 0.0;
    }
};

struct YabResult {
    double y_ab = 0.0;
    double residual = 0.0;
    std::uintmax_t iterations = 0;
};

inline YabResult solve_y_ab(const SeparatrixSetup& setup)
{
    constexpr double abs_tol = 1e-10;
    constexpr int max_doublings = 60;

    const double target = setup.n_target();
    const double u = -half_pi - setup.shift;
    const auto residual = [&](double y) { return first_integral_b(y, u, setup.rp, setup.kase) - target; };

    const double lo = setup.y_ab_floor() + 1e-12;
    const double f_lo = residual(lo);
    if (!(f_lo < 0.0))
        throw Error(ErrorCode::NoBracket, "N(y, -pi/2) already exceeds its target at the lowest admissible y");

    const auto& rp = setup.rp;
    double hi = std::max((rp.kappa - rp.eta + rp.xi + rp.rho) * (half_pi + setup.shift), 2.0 * lo);
    double f_hi = residual(hi);
    for (int i = 0; i < max_doublings && !(f_hi > 0.0); ++i) {
        hi *= 2.0;
        f_hi = residual(hi);
    }
    if (!(f_hi > 0.0))
        throw Error(ErrorCode::NoBracket, "no sign change for y_AB within the doubling budget");

    const auto r = find_root(residual, lo, hi, f_lo, f_hi, abs_tol);
    return {r.root, r.residual, r.iterations};
}

struct LockInResidual {
    double value = 0.0;
    YabResult y_ab;
};

inline LockInResidual lock_in_residual(const LoopParameters& params, double omega)
{
    const SeparatrixSetup setup(params, omega);
    const auto y_ab = solve_y_ab(setup);

    const auto at_pre_saddle = m_factors(setup.y_pre_saddle, 2.0 * setup.shift, setup.rp);
    const auto at_boundary = m_factors(y_ab.y_ab, half_pi + setup.shift, setup.rp);
    // The separatrix cannot cross the saddle's unstable eigenline inside A,
    // so both ends must lie on the same side of it.
    if (std::signbit(at_pre_saddle.lower) != std::signbit(at_boundary.lower))
        throw Error(ErrorCode::SignFlip, "pre-switch saddle and S(-pi/2) lie on opposite sides of the unstable eigenline");

    const double value = first_integral_a(at_pre_saddle, setup.rp) - first_integral_a(at_boundary, setup.rp);
    return {value, y_ab};
}

} // namespace detail

/// N(y, theta_e): constant along solutions in the rising segment B
/// (separately on each side of theta_e = c when xi < 1).
inline double first_integral_B(double y, double theta_e, const LoopParameters& params, double omega)
{
    const auto rp = reduced_parameters(params);
    return detail::first_integral_b(y, theta_e - pi * omega / (2.0 * params.kvco), rp, damping_case(rp));
}

/// M(y, theta_e): constant along solutions in the falling segment A.
inline double first_integral_A(double y, double theta_e, const LoopParameters& params, double omega)
{
    const auto rp = reduced_parameters(params);
    const double w = theta_e + pi + pi * omega / (2.0 * params.kvco);
    return detail::first_integral_a(detail::m_factors(y, w, rp), rp);
}

/// y_AB = S(-pi/2): where the upper separatrix leaves the rising segment.
inline double solve_y_ab(const LoopParameters& params, double omega)
{
    return detail::solve_y_ab(detail::SeparatrixSetup(params, omega)).y_ab;
}

/// M(2 w sqrt(pi T / 2K), c - pi) - M(y_AB(w), -pi/2). Zero at the
/// conservative lock-in frequency; negative below it.
inline double lock_in_residual(const LoopParameters& params, double omega)
{
    return detail::lock_in_residual(params, omega).value;
}

inline LockInSolution conservative_lock_in(const LoopParameters& params)
{
    params.validate();
    constexpr int scan_points = 64;
    const double kvco = params.kvco;

    // First sign change on a uniform scan of (0, K), skipping points where the
    // construction is undefined.
    bool have_prev = false;
    double prev_omega = 0.0;
    double prev_value = 0.0;
    std::uintmax_t evaluations = 0;
    for (int i = 1; i < scan_points; ++i) {
        const double omega = kvco * i / scan_points;
        double value = 0.0;
        try {
            value = lock_in_residual(params, omega);
            ++evaluations;
        } catch (const Error&) {
            have_prev = false;
            continue;
        }
        if (have_prev && std::signbit(prev_value) != std::signbit(value)) {
            const auto root = find_root([&](double w) { return lock_in_residual(params, w); }, prev_omega, omega,
                                        prev_value, value, 1e-8 * kvco);
            const auto at_root = detail::lock_in_residual(params, root.root);
            LockInSolution out;
            out.omega_lc = root.root;
            out.y_ab = at_root.y_ab.y_ab;
            out.case_tag = damping_case(reduced_parameters(params));
            out.residual_a = at_root.value;
            out.residual_b = at_root.y_ab.residual;
            out.iterations = evaluations + root.iterations;
            return out;
        }
        have_prev = true;
        prev_omega = omega;
        prev_value = value;
    }
    throw Error(ErrorCode::NoBracket, "the lock-in residual does not change sign on (0, kvco)");
}

/// Both sides of one equation of the two-variable system, written in the
/// original (exponentiated) form.
struct EquationSides {
    double lhs = 0.0;
    double rhs = 0.0;
};

namespace detail {

/// |a|^p |b|^q, requiring a and b positive.
inline double positive_power_product(double a, double p, double b, double q)
{
    if (!(a > 0.0 && b > 0.0))
        throw Error(ErrorCode::SignFlip, "fractional power of a non-positive factor");
    return std::pow(a, p) * std::pow(b, q);
}

} // namespace detail

/// Equation carrying the separatrix across the rising segment, in the form
/// selected by the damping case.
inline EquationSides rising_segment_equation(const LoopParameters& params, double omega, double y_ab)
{
    const auto rp = reduced_parameters(params);
    const double k = params.kvco;
    const double gain_k = pd_gain * k;
    const double xi = rp.xi;
    const double rho = rp.rho;
    const double gap = rp.kappa - rp.eta;
    const double reach = (omega + k) / gain_k; // pi (K + w) / 2K
    const double remaining = (k - omega) / gain_k;

    switch (damping_case(rp)) {
    case DampingCase::XiGreater: {
        const double p = (rho - xi) / rho;
        const double q = (rho + xi) / rho;
        return {
            detail::positive_power_product(y_ab - (xi - rho) * reach, p, y_ab - (xi + rho) * reach, q),
            detail::positive_power_product(gap + xi - rho, p, gap + xi + rho, q) * remaining * remaining,
        };
    }
    case DampingCase::XiEqualOne:
        return {
            (k + omega) / (k + omega - gain_k * y_ab) + std::log(2.0 * std::abs(y_ab - reach)),
            1.0 / (gap + 1.0) + std::log(2.0 * (gap + 1.0) * remaining),
        };
    case DampingCase::XiLess:
        return {
            0.5 * std::log(y_ab * y_ab - 2.0 * xi * y_ab * reach + reach * reach)
                - xi / rho * std::atan((y_ab - xi * reach) / (-reach * rho)) + xi / rho * std::atan((gap + xi) / rho),
            0.5 * std::log((gap * gap + 2.0 * xi * gap + 1.0) * remaining * remaining) + pi * xi / rho,
        };
    }
    return {};
}

/// Equation carrying the separatrix across the falling segment onto the
/// pre-switch saddle.
inline EquationSides falling_segment_equation(const LoopParameters& params, double omega, double y_ab)
{
    const auto rp = reduced_parameters(params);
    const double k = params.kvco;
    const double gain_k = pd_gain * k;
    const double kappa = rp.kappa;
    const double eta = rp.eta;
    const double p = (kappa - eta) / kappa;
    const double q = (kappa + eta) / kappa;
    const double root_term = std::sqrt(params.tau_sum() / gain_k);
    const double reach = (omega + k) / gain_k;
    return {
        (2.0 * omega) * (2.0 * omega)
            * detail::positive_power_product(root_term - (eta - kappa) / gain_k, p, root_term - (eta + kappa) / gain_k, q),
        detail::positive_power_product(y_ab - (eta - kappa) * reach, p, y_ab - (eta + kappa) * reach, q),
    };
}

} // namespace pll
