#pragma once

// Adaptive Dormand-Prince 5(4) integrator for planar systems whose right-hand
// side is linear between the PD breakpoints theta = pi/2 + pi k. Component 1
// of the state is always theta_e. Steps are cut at every breakpoint crossing
// (located on the dense output), so each accepted step sees a single linear
// segment.

#include "core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace pll {

using Vec2 = std::array<double, 2>;
inline constexpr std::size_t theta_index = 1;

struct BoundaryEvent {
    double t = 0.0;
    double theta = 0.0; ///< the breakpoint crossed
};

enum class StopReason { ReachedEnd, TerminalEvent, Observer, StepBudget };

struct IntegratorOptions {
    double tol = 1e-9; ///< relative and absolute local error per step
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 5'000'000;
    bool record_samples = true;
};

struct Solution {
    std::vector<double> t;
    std::vector<Vec2> y;
    std::vector<BoundaryEvent> events;
    StopReason reason = StopReason::ReachedEnd;
    double t_final = 0.0;
    Vec2 y_final{};
};

/// Locating a scalar condition g(y) = 0 that ends the integration.
struct NoTerminalEvent {
    constexpr double operator()(const Vec2&) const noexcept { return 1.0; }
};

struct NoObserver {
    constexpr bool operator()(double, const Vec2&) const noexcept { return false; }
};

namespace detail {

struct DormandPrince {
    static constexpr std::array<double, 7> c = {0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0};
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                            a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                            a65 = -5103.0 / 18656.0;
    // 5th-order weights (also row 7 of the tableau, FSAL).
    static constexpr std::array<double, 7> b = {35.0 / 384.0,     0.0, 500.0 / 1113.0, 125.0 / 192.0,
                                                -2187.0 / 6784.0, 11.0 / 84.0, 0.0};
    // b - b_hat
    static constexpr std::array<double, 7> e = {71.0 / 57600.0,  0.0,         -71.0 / 16695.0, 71.0 / 1920.0,
                                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0};
    // Continuous extension: y(t0 + s h) = y0 + h sum_j k_j (P_j0 s + P_j1 s^2 + P_j2 s^3 + P_j3 s^4).
    static constexpr std::array<std::array<double, 4>, 7> P = {{
        {1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0},
        {0.0, 0.0, 0.0, 0.0},
        {0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0},
        {0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0},
        {0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0},
        {0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0},
        {0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0},
    }};
};

struct StepResult {
    Vec2 y1{};
    Vec2 error{};
    std::array<Vec2, 7> k{};
};

template <class System>
StepResult dp_step(System& f, double t, const Vec2& y, const Vec2& k1, double h)
{
    using T = DormandPrince;
    StepResult r;
    auto& k = r.k;
    k[0] = k1;
    auto stage = [&](std::initializer_list<double> coeffs) {
        Vec2 out = y;
        std::size_t j = 0;
        for (double a : coeffs) {
            for (std::size_t i = 0; i < 2; ++i)
                out[i] += h * a * k[j][i];
            ++j;
        }
        return out;
    };
    k[1] = f(t + T::c[1] * h, stage({T::a21}));
    k[2] = f(t + T::c[2] * h, stage({T::a31, T::a32}));
    k[3] = f(t + T::c[3] * h, stage({T::a41, T::a42, T::a43}));
    k[4] = f(t + T::c[4] * h, stage({T::a51, T::a52, T::a53, T::a54}));
    k[5] = f(t + T::c[5] * h, stage({T::a61, T::a62, T::a63, T::a64, T::a65}));
    r.y1 = stage({T::b[0], T::b[1], T::b[2], T::b[3], T::b[4], T::b[5]});
    k[6] = f(t + h, r.y1);
    for (std::size_t i = 0; i < 2; ++i) {
        double err = 0.0;
        for (std::size_t j = 0; j < 7; ++j)
            err += T::e[j] * k[j][i];
        r.error[i] = h * err;
    }
    return r;
}

inline Vec2 dense_output(const Vec2& y0, const StepResult& step, double h, double s)
{
    using T = DormandPrince;
    const std::array<double, 4> powers = {s, s * s, s * s * s, s * s * s * s};
    Vec2 out = y0;
    for (std::size_t j = 0; j < 7; ++j) {
        const double w = T::P[j][0] * powers[0] + T::P[j][1] * powers[1] + T::P[j][2] * powers[2]
                         + T::P[j][3] * powers[3];
        for (std::size_t i = 0; i < 2; ++i)
            out[i] += h * w * step.k[j][i];
    }
    return out;
}

inline double error_norm(const Vec2& y0, const Vec2& y1, const Vec2& err, double tol) noexcept
{
    double norm = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        const double scale = tol + tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        norm = std::max(norm, std::abs(err[i]) / scale);
    }
    return norm;
}

/// First PD breakpoint strictly beyond theta in the given direction.
inline double next_breakpoint(double theta, bool upward) noexcept
{
    const double slack = 1e-12 * (1.0 + std::abs(theta));
    const double n = (theta - half_pi) / pi;
    if (upward) {
        double b = half_pi + pi * (std::floor(n) + 1.0);
        if (b <= theta + slack)
            b += pi;
        return b;
    }
    double b = half_pi + pi * (std::ceil(n) - 1.0);
    if (b >= theta - slack)
        b -= pi;
    return b;
}

/// Fraction s in (0, 1] where g(dense(s)) changes sign between lo and hi.
template <class G>
double locate(const Vec2& y0, const StepResult& step, double h, double lo, double hi, G&& g)
{
    const bool lo_sign = std::signbit(g(dense_output(y0, step, h, lo)));
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (std::signbit(g(dense_output(y0, step, h, mid))) == lo_sign)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

/// Earliest breakpoint crossing inside the step, probed on the dense output.
inline std::optional<std::pair<double, double>> find_crossing(const Vec2& y0, const StepResult& step, double h)
{
    constexpr std::array<double, 4> probes = {0.25, 0.5, 0.75, 1.0};
    double s_prev = 0.0;
    double theta_prev = y0[theta_index];
    for (double s : probes) {
        const double theta = s == 1.0 ? step.y1[theta_index] : dense_output(y0, step, h, s)[theta_index];
        if (theta != theta_prev) {
            const bool upward = theta > theta_prev;
            const double b = next_breakpoint(theta_prev, upward);
            if (upward ? (b <= theta) : (b >= theta)) {
                const double sigma = locate(y0, step, h, s_prev, s,
                                            [b](const Vec2& v) { return v[theta_index] - b; });
                return std::make_pair(sigma, b);
            }
        }
        s_prev = s;
        theta_prev = theta;
    }
    return std::nullopt;
}

inline double initial_step(const Vec2& y0, const Vec2& f0, double span, double tol)
{
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        const double scale = tol + tol * std::abs(y0[i]);
        d0 = std::max(d0, std::abs(y0[i]) / scale);
        d1 = std::max(d1, std::abs(f0[i]) / scale);
    }
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    return std::min(h, std::abs(span));
}

} // namespace detail

/// Integrates dy/dt = f(t, y) from t0 towards t_end (either direction).
///
/// `terminal(y)` ends the integration where it changes sign (located on the
/// dense output); `observer(t, y)` is called after every accepted step and
/// ends it by returning true.
template <class System, class Terminal = NoTerminalEvent, class Observer = NoObserver>
Solution integrate(System f, double t0, Vec2 y0, double t_end, const IntegratorOptions& options,
                   Terminal terminal = {}, Observer observer = {})
{
    if (!(options.tol >= 1e-13 && options.tol <= 1e-3))
        throw Error(ErrorCode::InvalidParameters, "integration tolerance must lie in [1e-13, 1e-3]");
    if (!std::isfinite(t_end) || !std::isfinite(y0[0]) || !std::isfinite(y0[1]))
        throw Error(ErrorCode::InvalidParameters, "non-finite integration input");

    Solution sol;
    const auto record = [&](double t, const Vec2& y) {
        if (options.record_samples) {
            sol.t.push_back(t);
            sol.y.push_back(y);
        }
    };
    record(t0, y0);
    sol.t_final = t0;
    sol.y_final = y0;

    const double span = t_end - t0;
    if (span == 0.0)
        return sol;
    const double direction = span > 0.0 ? 1.0 : -1.0;
    const double min_step = 1e-15 * std::abs(span);

    double t = t0;
    Vec2 y = y0;
    Vec2 k1 = f(t, y);
    double h_abs = std::min(detail::initial_step(y, k1, span, options.tol), options.max_step);
    double g_prev = terminal(y);

    for (std::size_t n = 0;; ++n) {
        if (n >= options.max_steps) {
            sol.reason = StopReason::StepBudget;
            break;
        }
        if (h_abs < min_step)
            throw Error(ErrorCode::StepUnderflow, "step size collapsed");

        const double remaining = std::abs(t_end - t);
        bool last = false;
        if (h_abs >= remaining) {
            h_abs = remaining;
            last = true;
        }
        double h = direction * h_abs;
        auto step = detail::dp_step(f, t, y, k1, h);
        const double err = detail::error_norm(y, step.y1, step.error, options.tol);
        if (!(err <= 1.0)) {
            const double factor = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
            h_abs *= factor;
            continue;
        }
        const double grow = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));

        // Cut the step at a breakpoint crossing.
        std::optional<BoundaryEvent> crossed;
        if (auto crossing = detail::find_crossing(y, step, h)) {
            const auto [sigma, boundary] = *crossing;
            if (sigma < 1.0) {
                h *= sigma;
                step = detail::dp_step(f, t, y, k1, h);
                last = false;
            }
            step.y1[theta_index] = boundary;
            crossed = BoundaryEvent{t + h, boundary};
        }

        // Terminal condition.
        bool stop = false;
        const double g_new = terminal(step.y1);
        if (std::signbit(g_new) != std::signbit(g_prev)) {
            const double sigma = detail::locate(y, step, h, 0.0, 1.0, terminal);
            if (sigma < 1.0) {
                h *= sigma;
                step = detail::dp_step(f, t, y, k1, h);
                crossed.reset();
            }
            stop = true;
            sol.reason = StopReason::TerminalEvent;
        }

        t += h;
        y = step.y1;
        k1 = f(t, y);
        g_prev = terminal(y);
        if (crossed)
            sol.events.push_back(*crossed);
        record(t, y);
        sol.t_final = t;
        sol.y_final = y;

        if (stop)
            break;
        if (observer(t, y)) {
            sol.reason = StopReason::Observer;
            break;
        }
        if (last) {
            sol.reason = StopReason::ReachedEnd;
            break;
        }
        h_abs = std::min(std::abs(h) * grow, options.max_step);
    }
    return sol;
}

} // namespace pll
