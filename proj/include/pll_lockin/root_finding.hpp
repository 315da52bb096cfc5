#pragma once

#include "error.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include <boost/math/policies/policy.hpp>
#include <boost/math/tools/toms748_solve.hpp>

namespace pll {

struct RootResult {
    double root = 0.0;
    double residual = 0.0;
    std::uintmax_t iterations = 0;
};

/// Root of f on [lo, hi] given f(lo), f(hi) of opposite sign. Bracketed
/// hybrid (TOMS 748): the bracket shrinks every iteration and convergence is
/// superlinear near a simple root. Stops when the bracket is narrower than
/// abs_tol.
template <class F>
RootResult find_root(F&& f, double lo, double hi, double f_lo, double f_hi, double abs_tol,
                     std::uintmax_t max_iterations = 200)
{
    if (f_lo == 0.0)
        return {lo, 0.0, 0};
    if (f_hi == 0.0)
        return {hi, 0.0, 0};
    if (!(std::signbit(f_lo) != std::signbit(f_hi)))
        throw Error(ErrorCode::NoBracket, "endpoint values have the same sign");

    // Errors surface as exceptions from boost; translate domain errors to ours.
    using Policy = boost::math::policies::policy<boost::math::policies::evaluation_error<boost::math::policies::throw_on_error>>;
    std::uintmax_t iterations = max_iterations;
    const auto done = [abs_tol](double a, double b) { return std::abs(b - a) <= abs_tol; };
    std::pair<double, double> bracket;
    try {
        bracket = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, done, iterations, Policy());
    } catch (const boost::math::evaluation_error& e) {
        throw Error(ErrorCode::NoBracket, std::string("root finder failed: ") + e.what());
    }
    const double root = 0.5 * (bracket.first + bracket.second);
    return {root, f(root), iterations};
}

template <class F>
RootResult find_root(F&& f, double lo, double hi, double abs_tol, std::uintmax_t max_iterations = 200)
{
    const double f_lo = f(lo);
    const double f_hi = f(hi);
    return find_root(f, lo, hi, f_lo, f_hi, abs_tol, max_iterations);
}

/// Plain bisection on a sign predicate: `positive(lo) != positive(hi)`
/// required. Used where only the sign of the target is decidable.
template <class Predicate>
double bisect_predicate(Predicate&& positive, double lo, double hi, double abs_tol, std::uintmax_t max_iterations = 200)
{
    const bool lo_state = positive(lo);
    if (positive(hi) == lo_state)
        throw Error(ErrorCode::NoBracket, "predicate does not change over the interval");
    for (std::uintmax_t i = 0; i < max_iterations && std::abs(hi - lo) > abs_tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (positive(mid) == lo_state)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace pll
