#include "support/fixtures.hpp"

#include <pll_lockin/lockin.hpp>
#include <pll_lockin/oracle.hpp>

#include <gtest/gtest.h>

#include <cmath>

namespace pll {
namespace {

/// Largest |theta_e(t) - theta_e(0)| over a long transient from the -w equilibrium m = 0.
double phase_excursion(const LoopParameters& p, double omega)
{
    const auto start = equilibrium(p, -omega, 0);
    const auto traj = integrate_trajectory(p, omega, {start.x_eq, start.theta_eq}, 200.0 / time_scale(p), 1e-10);
    double sup = 0.0;
    for (const auto& s : traj.samples)
        sup = std::max(sup, std::abs(s.state.theta_e - start.theta_eq));
    return sup;
}

TEST(Transients, LockWithoutSlipBelowLockIn)
{
    EXPECT_LT(phase_excursion(test::fig3, 65.0), two_pi);
    EXPECT_GT(phase_excursion(test::fig3, 79.0), two_pi);
}

TEST(Transients, Reacquisition)
{
    ReacquisitionOptions o;
    o.record_samples = true;
    const auto locked = reacquire(test::fig3, 65.0, 0, o);
    EXPECT_EQ(locked.result, Reacquisition::Locked);
    EXPECT_LT(locked.max_phase_excursion, two_pi);
    const auto eq = equilibrium(test::fig3, 65.0, 0);
    EXPECT_NEAR(locked.trajectory.back().state.theta_e, eq.theta_eq, 1e-2);

    const auto slipped = reacquire(test::fig3, 79.0, 0, o);
    EXPECT_EQ(slipped.result, Reacquisition::Slipped);
    EXPECT_EQ(to_string(slipped.result), "slipped");
    EXPECT_THROW((void)reacquire(test::fig3, 65.0, 1), Error);
}

TEST(Transients, StartingIndexIsImmaterial)
{
    for (double omega : {60.0, 77.0, 78.5, 90.0})
        EXPECT_EQ(reacquire(test::fig3, omega, 0).result, reacquire(test::fig3, omega, 2).result) << omega;
}

TEST(Separatrix, ReducedImageMatchesClosedForm)
{
    const double omega = 73.732;
    const auto at_top = trace_separatrix(test::fig3, omega, 1e-8, 1e-11, half_pi);
    ASSERT_EQ(at_top.reason, StopReason::TerminalEvent);
    EXPECT_NEAR(to_reduced(at_top.back().state, test::fig3, omega).y, separatrix_initial_value(test::fig3, omega), 1e-5);

    const auto at_bottom = trace_separatrix(test::fig3, omega, 1e-8, 1e-11, -half_pi);
    EXPECT_NEAR(to_reduced(at_bottom.back().state, test::fig3, omega).y, solve_y_ab(test::fig3, omega), 1e-5);
}

TEST(Separatrix, EndsNearPreSwitchSaddle)
{
    const double omega = 73.732;
    const auto traj = trace_separatrix(test::fig3, omega, default_separatrix_epsilon, 1e-9);
    ASSERT_EQ(traj.reason, StopReason::TerminalEvent);
    EXPECT_NEAR(traj.back().state.theta_e, pi * omega / 500.0 - pi, 1e-9);
    EXPECT_NEAR(traj.back().state.x, -0.0633 * omega / 250.0, 1e-3);
    EXPECT_NEAR(traj.back().state.x, -0.018667, 1e-3);
    // Backward in time, so t decreases.
    EXPECT_LT(traj.back().t, 0.0);
}

TEST(Separatrix, SeedOnStableEigenvector)
{
    const auto frame = saddle_local_frame(test::fig3, 73.732);
    EXPECT_EQ(frame.saddle.index_m, 1);
    EXPECT_EQ(frame.saddle.kind, EquilibriumKind::Saddle);
    const auto rp = reduced_parameters(test::fig3);
    EXPECT_DOUBLE_EQ(frame.v_stable[1], rp.eta - rp.kappa);
    EXPECT_DOUBLE_EQ(frame.v_unstable[1], rp.eta + rp.kappa);
}

TEST(NumericLockIn, ConservativeMatchesClosedForm)
{
    const double numeric = numeric_conservative_lock_in(test::fig3);
    EXPECT_NEAR(numeric, 73.732, 0.05);
    EXPECT_NEAR(numeric, conservative_lock_in(test::fig3).omega_lc, 1e-5);
}

TEST(NumericLockIn, FigureThreeLoop)
{
    const double numeric = numeric_lock_in(test::fig3);
    EXPECT_NEAR(numeric, 77.7583, 0.05);
    EXPECT_GE(numeric, conservative_lock_in(test::fig3).omega_lc);
}

TEST(NumericLockIn, InsensitiveToSeedOffset)
{
    const double reference = conservative_lock_in(test::fig3).omega_lc;
    for (double eps : {1e-9, 1e-8, 1e-6, 1e-5}) {
        OracleOptions o;
        o.epsilon = eps;
        EXPECT_NEAR(numeric_conservative_lock_in(test::fig3, o), reference, 1e-4) << eps;
    }
}

TEST(NumericLockIn, Errors)
{
    OracleOptions o;
    o.tol = 1e-2;
    EXPECT_THROW((void)numeric_lock_in(test::fig3, o), Error);
    EXPECT_THROW((void)trace_separatrix(test::fig3, 0.0, 1e-7, 1e-9), Error);
    EXPECT_THROW((void)trace_separatrix(test::fig3, 50.0, 1e-2, 1e-9), Error);
    EXPECT_THROW((void)integrate_trajectory(test::fig3, 50.0, {0.0, 0.0}, 1.0, 1e-14), Error);
}

} // namespace
} // namespace pll
