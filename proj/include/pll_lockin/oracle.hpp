#pragma once

// Numerical counterparts of the lock-in results, obtained by integrating the
// baseband model directly: separatrices are traced backward from the saddle
// along its stable eigenvector, and the lock-in boundaries are found by
// bisection on what the traced curves or re-acquisition transients do.

#include "core.hpp"
#include "integrator.hpp"
#include "lockin.hpp"
#include "root_finding.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>
#include <vector>

namespace pll {

struct TrajectorySample {
    double t = 0.0;
    PhaseState state;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    std::vector<BoundaryEvent> events;
    StopReason reason = StopReason::ReachedEnd;

    [[nodiscard]] bool empty() const noexcept { return samples.empty(); }
    [[nodiscard]] const TrajectorySample& back() const { return samples.back(); }
};

/// Saddle of the post-switch model and the eigenvector seeds around it.
/// Directions are (d theta_e, d y) in reduced coordinates.
struct SaddleLocalFrame {
    EquilibriumPoint saddle;
    Vec2 v_stable{};   ///< (1, eta - kappa): trajectories along it enter the saddle
    Vec2 v_unstable{}; ///< (1, eta + kappa)
    double epsilon = 1e-7;
};

inline constexpr double default_separatrix_epsilon = 1e-7;
/// Integration horizon, in reduced time units.
inline constexpr double reduced_horizon = 1e3;

namespace detail {

inline void check_tolerance(double tol)
{
    if (!(tol >= 1e-13 && tol <= 1e-3))
        throw Error(ErrorCode::InvalidParameters, "tolerance must lie in [1e-13, 1e-3]");
}

inline Vec2 to_vec(const PhaseState& s) noexcept { return {s.x, s.theta_e}; }
inline PhaseState to_state(const Vec2& v) noexcept { return {v[0], v[1]}; }

inline auto model_rhs(const LoopParameters& params, double omega)
{
    return [params, omega](double, const Vec2& s) {
        const auto d = vector_field(to_state(s), params, omega);
        return Vec2{d.dx, d.dtheta_e};
    };
}

inline Trajectory to_trajectory(const Solution& sol)
{
    Trajectory out;
    out.samples.reserve(sol.t.size());
    for (std::size_t i = 0; i < sol.t.size(); ++i)
        out.samples.push_back({sol.t[i], to_state(sol.y[i])});
    out.events = sol.events;
    out.reason = sol.reason;
    return out;
}

/// Largest step: a tenth of a reduced time unit, so no turning point of
/// theta_e hides inside a step.
inline double max_model_step(const LoopParameters& params) { return 0.1 / time_scale(params); }

} // namespace detail

inline Trajectory integrate_trajectory(const LoopParameters& params, double omega, const PhaseState& initial,
                                       double t_end, double tol)
{
    params.validate();
    detail::check_tolerance(tol);
    IntegratorOptions options;
    options.tol = tol;
    options.max_step = detail::max_model_step(params);
    return detail::to_trajectory(integrate(detail::model_rhs(params, omega), 0.0, detail::to_vec(initial), t_end, options));
}

inline SaddleLocalFrame saddle_local_frame(const LoopParameters& params, double omega,
                                           double epsilon = default_separatrix_epsilon)
{
    const auto rp = reduced_parameters(params);
    const auto eig = saddle_eigenstructure(rp);
    SaddleLocalFrame frame;
    frame.saddle = equilibrium(params, omega, 1);
    frame.v_stable = {1.0, eig.stable_slope};
    frame.v_unstable = {1.0, eig.unstable_slope};
    frame.epsilon = epsilon;
    return frame;
}

/// Upper (y > 0) stable separatrix of the saddle (tau1 w/K, pi - c), traced
/// backward in time until theta_e = c - pi or the horizon. In (x, theta_e)
/// it is the curve x = Q(theta_e, w) below the saddle. A lightly damped
/// separatrix can instead spiral out of the focus and run off upward; the
/// trace then stops once theta_e passes the saddle by pi.
inline Trajectory trace_separatrix(const LoopParameters& params, double omega, double epsilon, double tol,
                                   std::optional<double> stop_theta = std::nullopt)
{
    params.validate();
    detail::check_tolerance(tol);
    if (!(omega > 0.0 && omega < params.kvco))
        throw Error(ErrorCode::OutOfRange, "separatrix tracing requires 0 < omega < kvco");
    if (!(epsilon >= 1e-10 && epsilon <= 1e-4))
        throw Error(ErrorCode::InvalidParameters, "epsilon must lie in [1e-10, 1e-4]");

    const auto frame = saddle_local_frame(params, omega, epsilon);
    // Step against the stable direction: theta_e decreases, y becomes positive.
    const ReducedState seed{-epsilon * frame.v_stable[1], frame.saddle.theta_eq - epsilon * frame.v_stable[0], 0.0};
    const PhaseState start = from_reduced(seed, params, omega);

    const double shift = pi * omega / (2.0 * params.kvco);
    const double target = stop_theta.value_or(shift - pi);

    IntegratorOptions options;
    options.tol = tol;
    options.max_step = detail::max_model_step(params);
    const double t_end = -reduced_horizon / time_scale(params);
    const double ceiling = frame.saddle.theta_eq + pi;
    const auto terminal = [target, ceiling](const Vec2& s) {
        return std::min(s[theta_index] - target, ceiling - s[theta_index]);
    };
    return detail::to_trajectory(
        integrate(detail::model_rhs(params, omega), 0.0, detail::to_vec(start), t_end, options, terminal));
}

/// x on the traced separatrix where theta_e = theta (theta < pi - c).
inline double separatrix_x_at(const LoopParameters& params, double omega, double theta, double epsilon, double tol)
{
    const auto traj = trace_separatrix(params, omega, epsilon, tol, theta);
    if (traj.reason != StopReason::TerminalEvent || traj.back().state.theta_e > theta + half_pi)
        throw Error(ErrorCode::Undecided, "separatrix did not reach the requested theta_e within the horizon");
    return traj.back().state.x;
}

struct OracleOptions {
    double tol = 1e-9;
    double epsilon = default_separatrix_epsilon;
};

namespace detail {

/// Sign change search on a uniform grid of (0, K), then bisection.
template <class Sign>
double scan_and_bisect(Sign&& positive, double kvco, double abs_tol, int points = 32)
{
    bool have_prev = false;
    double prev_omega = 0.0;
    bool prev_value = false;
    for (int i = 1; i < points; ++i) {
        const double omega = kvco * i / points;
        bool value = false;
        try {
            value = positive(omega);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::InvalidParameters)
                throw;
            have_prev = false;
            continue;
        }
        if (have_prev && prev_value != value)
            return bisect_predicate(positive, prev_omega, omega, abs_tol);
        have_prev = true;
        prev_omega = omega;
        prev_value = value;
    }
    throw Error(ErrorCode::NoBracket, "no sign change on (0, kvco)");
}

} // namespace detail

/// g(w) = Q(c - pi, w) + tau1 w / K: positive when the separatrix passes
/// above (in x) the pre-switch saddle.
inline double conservative_gap(const LoopParameters& params, double omega, const OracleOptions& options = {})
{
    const double shift = pi * omega / (2.0 * params.kvco);
    return separatrix_x_at(params, omega, shift - pi, options.epsilon, options.tol)
           + params.tau1 * omega / params.kvco;
}

inline double numeric_conservative_lock_in(const LoopParameters& params, const OracleOptions& options = {})
{
    params.validate();
    detail::check_tolerance(options.tol);
    return detail::scan_and_bisect([&](double w) { return conservative_gap(params, w, options) > 0.0; },
                                   params.kvco, options.tol * params.kvco);
}

enum class Reacquisition { Locked, Slipped };

constexpr std::string_view to_string(Reacquisition r) noexcept
{
    return r == Reacquisition::Locked ? "locked" : "slipped";
}

struct ReacquisitionOptions {
    double tol = 1e-9;
    double slip_margin = 1e-3;  ///< rad past a saddle
    double lock_radius = 1e-3;  ///< ball around the target, reduced (theta_e, y)
    bool record_samples = false;
};

struct ReacquisitionOutcome {
    Reacquisition result = Reacquisition::Locked;
    Trajectory trajectory; ///< empty unless samples were requested
    double max_phase_excursion = 0.0; ///< sup |theta_e(0) - theta_e(t)|
};

/// The loop sits at the stable equilibrium of the -w model and the frequency
/// error jumps to +w. Starting state (-tau1 w/K, start_theta) where
/// start_theta is the -w equilibrium with index m (even).
inline ReacquisitionOutcome reacquire(const LoopParameters& params, double omega, int start_index,
                                      const ReacquisitionOptions& options = {})
{
    params.validate();
    detail::check_tolerance(options.tol);
    if (!(omega > 0.0 && omega < params.kvco))
        throw Error(ErrorCode::OutOfRange, "re-acquisition requires 0 < omega < kvco");
    if (start_index % 2 != 0)
        throw Error(ErrorCode::InvalidParameters, "start index must select a stable equilibrium (even m)");

    const auto before = equilibrium(params, -omega, start_index);
    const auto target = equilibrium(params, omega, start_index);     // c + 2 pi m/2 ahead
    const auto ahead = equilibrium(params, omega, start_index + 1);  // saddle in front
    const auto behind = equilibrium(params, omega, start_index - 1); // saddle behind
    const double scale = time_scale(params);
    const double theta0 = before.theta_eq;

    const auto terminal = [&](const Vec2& s) {
        const double theta = s[theta_index];
        if (theta > ahead.theta_eq + options.slip_margin || theta < behind.theta_eq - options.slip_margin)
            return -1.0;
        return 1.0;
    };
    const auto target_reduced = to_reduced({target.x_eq, target.theta_eq}, params, omega);
    double excursion = 0.0;
    const auto observer = [&](double, const Vec2& s) {
        excursion = std::max(excursion, std::abs(s[theta_index] - theta0));
        const auto r = to_reduced(detail::to_state(s), params, omega);
        return std::hypot(r.y - target_reduced.y, r.theta_e - target_reduced.theta_e) < options.lock_radius;
    };

    IntegratorOptions io;
    io.tol = options.tol;
    io.max_step = detail::max_model_step(params);
    io.record_samples = options.record_samples;
    const auto sol = integrate(detail::model_rhs(params, omega), 0.0, Vec2{before.x_eq, before.theta_eq},
                               reduced_horizon / scale, io, terminal, observer);
    excursion = std::max(excursion, std::abs(sol.y_final[theta_index] - theta0));

    ReacquisitionOutcome out;
    out.max_phase_excursion = excursion;
    if (options.record_samples)
        out.trajectory = detail::to_trajectory(sol);
    switch (sol.reason) {
    case StopReason::TerminalEvent: out.result = Reacquisition::Slipped; break;
    case StopReason::Observer: out.result = Reacquisition::Locked; break;
    default: throw Error(ErrorCode::Undecided, "re-acquisition neither locked nor slipped within the horizon");
    }
    return out;
}

/// Lock-in frequency: the boundary between locking without a slip and
/// slipping, for the transient started at the -w stable equilibrium near 2 pi.
inline double numeric_lock_in(const LoopParameters& params, const OracleOptions& options = {})
{
    params.validate();
    detail::check_tolerance(options.tol);
    ReacquisitionOptions ro;
    ro.tol = options.tol;
    return detail::scan_and_bisect(
        [&](double w) { return reacquire(params, w, 2, ro).result == Reacquisition::Slipped; }, params.kvco,
        options.tol * params.kvco);
}

} // namespace pll
