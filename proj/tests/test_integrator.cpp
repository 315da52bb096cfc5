#include <pll_lockin/integrator.hpp>

#include <gtest/gtest.h>

#include <cmath>

namespace pll {
namespace {

// y = (y, theta); y' = -theta, theta' = y. theta = A cos t stays inside one PD segment for A < pi/2.
const auto rotation = [](double, const Vec2& s) { return Vec2{-s[1], s[0]}; };

TEST(DormandPrince, DenseOutputEndpoints)
{
    auto f = rotation;
    const Vec2 y0{0.0, 0.5};
    const auto step = detail::dp_step(f, 0.0, y0, f(0.0, y0), 0.3);
    const auto at0 = detail::dense_output(y0, step, 0.3, 0.0);
    const auto at1 = detail::dense_output(y0, step, 0.3, 1.0);
    EXPECT_DOUBLE_EQ(at0[0], y0[0]);
    EXPECT_DOUBLE_EQ(at0[1], y0[1]);
    EXPECT_NEAR(at1[0], step.y1[0], 1e-15);
    EXPECT_NEAR(at1[1], step.y1[1], 1e-15);
}

double fixed_step_error(int steps)
{
    auto f = rotation;
    const double h = 1.0 / steps;
    Vec2 y{0.0, 0.5};
    double t = 0.0;
    for (int i = 0; i < steps; ++i) {
        y = detail::dp_step(f, t, y, f(t, y), h).y1;
        t += h;
    }
    return std::hypot(y[0] + 0.5 * std::sin(1.0), y[1] - 0.5 * std::cos(1.0));
}

TEST(DormandPrince, FifthOrderConvergence)
{
    for (int n : {4, 8, 16}) {
        const double ratio = fixed_step_error(n) / fixed_step_error(2 * n);
        EXPECT_GT(ratio, 32.0 / 4.0) << n;
        EXPECT_LT(ratio, 32.0 * 4.0) << n;
    }
}

TEST(Integrate, AdaptiveAccuracyAndBackward)
{
    IntegratorOptions o;
    o.tol = 1e-11;
    const auto fwd = integrate(rotation, 0.0, Vec2{0.0, 0.5}, 1.0, o);
    EXPECT_EQ(fwd.reason, StopReason::ReachedEnd);
    EXPECT_EQ(fwd.t_final, 1.0);
    EXPECT_NEAR(fwd.y_final[1], 0.5 * std::cos(1.0), 1e-10);
    const auto back = integrate(rotation, 1.0, fwd.y_final, 0.0, o);
    EXPECT_NEAR(back.y_final[1], 0.5, 1e-10);
    for (std::size_t i = 1; i < back.t.size(); ++i)
        ASSERT_LT(back.t[i], back.t[i - 1]);
    EXPECT_TRUE(fwd.events.empty());
}

TEST(Integrate, FixedPointStaysPut)
{
    const auto zero = [](double, const Vec2&) { return Vec2{0.0, 0.0}; };
    const auto sol = integrate(zero, 0.0, Vec2{1.0, 0.25}, 10.0, IntegratorOptions{});
    for (const auto& y : sol.y) {
        ASSERT_EQ(y[0], 1.0);
        ASSERT_EQ(y[1], 0.25);
    }
}

TEST(Integrate, StepsStopAtBreakpoints)
{
    // theta' = 1 crosses pi/2 + k pi at known times.
    const auto drift = [](double, const Vec2&) { return Vec2{0.0, 1.0}; };
    IntegratorOptions o;
    o.max_step = 0.7;
    const auto sol = integrate(drift, 0.0, Vec2{0.0, 0.0}, 10.0, o);
    ASSERT_EQ(sol.events.size(), 3U);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_NEAR(sol.events[k].theta, half_pi + pi * k, 1e-15);
        EXPECT_NEAR(sol.events[k].t, half_pi + pi * k, 1e-9);
    }
    // No step straddles a breakpoint.
    for (std::size_t i = 1; i < sol.t.size(); ++i) {
        const double a = sol.y[i - 1][1];
        const double b = sol.y[i][1];
        for (int k = 0; k < 4; ++k) {
            const double bp = half_pi + pi * k;
            ASSERT_FALSE(a < bp && b > bp) << "step " << i << " straddles " << bp;
        }
    }
}

TEST(Integrate, TerminalEventAndObserver)
{
    const auto drift = [](double, const Vec2&) { return Vec2{0.0, 1.0}; };
    const auto stop = [](const Vec2& s) { return 0.9 - s[1]; };
    const auto sol = integrate(drift, 0.0, Vec2{0.0, 0.0}, 10.0, IntegratorOptions{}, stop);
    EXPECT_EQ(sol.reason, StopReason::TerminalEvent);
    EXPECT_NEAR(sol.t_final, 0.9, 1e-10);
    EXPECT_NEAR(sol.y_final[1], 0.9, 1e-10);

    const auto watch = [](double t, const Vec2&) { return t > 2.0; };
    const auto obs = integrate(drift, 0.0, Vec2{0.0, 0.0}, 10.0, IntegratorOptions{}, NoTerminalEvent{}, watch);
    EXPECT_EQ(obs.reason, StopReason::Observer);
    EXPECT_GT(obs.t_final, 2.0);
}

TEST(Integrate, Errors)
{
    IntegratorOptions o;
    o.tol = 1e-2;
    EXPECT_THROW((void)integrate(rotation, 0.0, Vec2{0.0, 0.1}, 1.0, o), Error);
    o.tol = 1e-15;
    EXPECT_THROW((void)integrate(rotation, 0.0, Vec2{0.0, 0.1}, 1.0, o), Error);

    // y' = 1/(1 - t)^2 blows up at t = 1.
    const auto blowup = [](double t, const Vec2&) { return Vec2{1.0 / ((1.0 - t) * (1.0 - t)), 0.0}; };
    try {
        (void)integrate(blowup, 0.0, Vec2{1.0, 0.0}, 2.0, IntegratorOptions{});
        FAIL() << "expected StepUnderflow";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::StepUnderflow);
    }

    o.tol = 1e-9;
    o.max_steps = 5;
    EXPECT_EQ(integrate(rotation, 0.0, Vec2{0.0, 0.1}, 100.0, o).reason, StopReason::StepBudget);
}

} // namespace
} // namespace pll
