#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <slowlight/scattering.hpp>

using namespace slowlight;

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = a + (b - a) * i / (n - 1);
    return g;
}

const cplx lam_up{0.0, 4.1};
const cplx lam_down{0.0, -4.1};

}  // namespace

TEST(ConstantBackground, FixedPointValues) {
    const auto c = constant_background(lam_up, 3.0);
    EXPECT_NEAR(c.w0.real(), 0.0, 1e-15);
    EXPECT_NEAR(c.w0.imag(), -0.43512, 5e-6);
    EXPECT_NEAR(c.z_rate.real(), 0.65268, 5e-6);
    EXPECT_NEAR(c.z_rate.imag(), 0.0, 1e-15);
    EXPECT_NEAR(std::norm(c.w0), 0.18933, 5e-6);
    EXPECT_LT(std::abs(riccati_rhs(lam_up, 3.0, c.w0)), 1e-14);
}

TEST(ConstantBackground, ZeroFieldAndDegenerate) {
    const auto c = constant_background({0.3, 1.1}, 0.0);
    EXPECT_EQ(c.w0, cplx(0.0));
    EXPECT_EQ(c.z_rate, cplx(0.0));
    EXPECT_THROW(constant_background(0.0, 0.0), DegenerateParameterError);
}

TEST(ConstantBackground, SpatialPhase) {
    const auto c0 = constant_background(lam_up, 3.0);
    const auto c = constant_background(lam_up, 3.0, 0.4, 2.0);
    EXPECT_LT(std::abs(c.w0 - c0.w0 * std::exp(I * 0.8)), 1e-15);
}

TEST(BranchRoot, ContinuousInAmplitudeAndTendsToLambda) {
    for (cplx lam : {lam_up, lam_down, cplx(1.0, 2.0), cplx(-0.7, -5.0), cplx(2.0, 0.3)}) {
        EXPECT_EQ(branch_root(lam, 0.0), lam);
        EXPECT_EQ(spectral_k(lam, 0.0), lam);
        cplx prev = branch_root(lam, 0.0);
        const double top = 0.9 * std::abs(lam.imag());
        for (int i = 1; i <= 400; ++i) {
            const cplx s = branch_root(lam, top * i / 400.0);
            EXPECT_LT(std::abs(s - prev), 0.05) << lam;
            prev = s;
        }
    }
}

TEST(BranchRoot, SchwarzSymmetric) {
    const cplx lam{0.4, 3.3};
    EXPECT_LT(std::abs(branch_root(std::conj(lam), 2.0) - std::conj(branch_root(lam, 2.0))), 1e-15);
}

TEST(ExponentialSolution, OrderAndMatching) {
    const ExponentialSolution ex(lam_down, 3.0, 4.0);
    EXPECT_NEAR(ex.gamma().real(), 1.0125, 1e-15);
    EXPECT_NEAR(ex.gamma().imag(), 0.0, 1e-15);
    // lambda recovered from the order
    EXPECT_LT(std::abs(I * 4.0 * (1.0 - 2.0 * ex.gamma()) - lam_down), 1e-12);
    const auto w0 = constant_background(lam_down, 3.0).w0;
    EXPECT_LT(std::abs(ex(0.0).w - w0), 1e-10);
    EXPECT_LT(std::abs(ex(0.0).z), 1e-14);
}

TEST(ExponentialSolution, AgreesWithBesselRatioForm) {
    for (cplx lam : {lam_down, cplx(0.5, -3.7), cplx(-0.2, -6.0)}) {
        const ExponentialSolution ex(lam, 3.0, 4.0);
        for (double tau : {0.0, 0.1, 0.37, 0.8, 1.0}) {
            const WZ a = ex(tau), b = ex.textbook(tau);
            EXPECT_LT(std::abs(a.w - b.w), 1e-10) << lam << " " << tau;
            EXPECT_LT(std::abs(std::exp(a.z) - std::exp(b.z)) / std::abs(std::exp(a.z)), 1e-10);
        }
    }
}

TEST(ExponentialSolution, RiccatiResidualOnDecayRegion) {
    for (cplx lam : {lam_down, lam_up}) {
        const auto sol = exponential_tail_solution(lam, 3.0, 4.0);
        const auto r = riccati_residual(sol, linspace(0.001, 1.0, 1000));
        EXPECT_LE(r.w_relative, 1e-8) << lam;
        EXPECT_LE(r.z_relative, 1e-8) << lam;
    }
}

TEST(ExponentialSolution, LimitNeedsDecayingBranch) {
    EXPECT_NO_THROW(ExponentialSolution(lam_down, 3.0, 4.0).limit());
    EXPECT_THROW(ExponentialSolution(lam_up, 3.0, 4.0).limit(), DomainError);
    EXPECT_NO_THROW(exponential_background(lam_down, 3.0, 4.0, 0.5));
    EXPECT_THROW(exponential_background(lam_down, 3.0, 4.0, -0.5), DomainError);
}

TEST(PiecewiseScenario, RegionsAndContinuity) {
    PiecewiseData d{};
    const auto sol = piecewise_scenario(lam_down, 3.0, 4.0, 1.0, 4.0, &d);
    ASSERT_EQ(sol.regions().size(), 4u);
    EXPECT_EQ(sol.region_at(2.0), "D2");
    EXPECT_EQ(sol.w(2.0), cplx(0.0));
    EXPECT_EQ(sol.w(3.99), cplx(0.0));
    // w continuous at 0 and at the restart
    EXPECT_LT(std::abs(sol.w(-1e-12) - sol.w(0.0)), 1e-10);
    EXPECT_LT(std::abs(sol.w(4.0 + 1e-9)), 1e-8);
    // z continuous at 0 and at the restart
    EXPECT_LT(std::abs(sol.z(-1e-12) - sol.z(0.0)), 1e-10);
    EXPECT_LT(std::abs(sol.z(4.0 + 1e-9) - sol.z(4.0 - 1e-9)), 1e-8);
    // the cutoff discards a small tail: w jumps to zero, z to its limit
    EXPECT_GT(std::abs(d.w_cut), 0.0);
    EXPECT_GT(std::abs(d.z_cut - d.z_dark), 0.0);
    EXPECT_LT(std::abs(d.z_cut - d.z_dark), 0.05);
    // restart constant equals the fixed-point form
    const cplx s = branch_root(lam_down, 3.0);
    EXPECT_LT(std::abs(d.restart_constant - (s - lam_down) / (s + lam_down)), 1e-14);
    // after the restart w returns to the fixed point
    EXPECT_LT(std::abs(sol.w(30.0) - constant_background(lam_down, 3.0).w0), 1e-10);
}

TEST(PiecewiseScenario, RiccatiResidualOnAllRegions) {
    const auto sol = piecewise_scenario(lam_down, 3.0, 4.0, 1.0, 4.0);
    const auto r = riccati_residual(sol, linspace(-2.0, 8.0, 1000));
    EXPECT_LE(r.w_relative, 1e-6);
    EXPECT_LE(r.z_relative, 1e-6);
}

TEST(PiecewiseScenario, Validation) {
    EXPECT_THROW(piecewise_scenario(lam_down, 3.0, 4.0, 4.0, 1.0), ConfigError);
    EXPECT_THROW(piecewise_scenario(lam_up, 3.0, 4.0, 1.0, 4.0), ConfigError);
}

TEST(RiccatiOde, FixedPointStaysPutOnStableBranch) {
    const BackgroundProfile p(ConstantField{3.0});
    const auto c = constant_background(lam_down, 3.0);
    const auto sol = solve_riccati_ode(p, lam_down, 0.0, 10.0, {c.w0, 0.0});
    for (double t = 0.0; t <= 10.0; t += 0.1) EXPECT_LT(std::abs(sol.w(t) - c.w0), 1e-9);
    EXPECT_LT(std::abs(sol.z(10.0) - 10.0 * c.z_rate), 1e-9);
}

TEST(RiccatiOde, FixedPointStaysPutOnGrowingBranch) {
    // perturbations grow like e^{|s| tau} here, but the fixed point is an exact
    // floating-point zero of the right-hand side
    const BackgroundProfile p(ConstantField{3.0});
    const auto c = constant_background(lam_up, 3.0);
    const auto sol = solve_riccati_ode(p, lam_up, 0.0, 10.0, {c.w0, 0.0});
    for (double t = 0.0; t <= 10.0; t += 0.1) EXPECT_LT(std::abs(sol.w(t) - c.w0), 1e-9);
}

TEST(RiccatiOde, ZeroFieldStaysZero) {
    const BackgroundProfile p(ConstantField{0.0});
    const auto sol = solve_riccati_ode(p, lam_up, 0.0, 5.0, {0.0, 0.0});
    EXPECT_EQ(sol.w(3.3), cplx(0.0));
}

TEST(RiccatiOde, MatchesClosedFormsAcrossSwitchOff) {
    const BackgroundProfile p(ExponentialSwitch{3.0, 4.0, 1.0, 4.0});
    const auto exact = piecewise_scenario(lam_down, 3.0, 4.0, 1.0, 4.0);
    const auto sol = solve_riccati_ode(p, lam_down, -3.0, 1.0, asymptotic_initial(p, lam_down, -3.0));
    double err = 0.0;
    for (double t : linspace(-3.0, 1.0 - 1e-9, 2001)) {
        err = std::max(err, std::abs(sol.w(t) - exact.w(t)));
        err = std::max(err, std::abs(sol.z(t) - exact.z(t)));
    }
    EXPECT_LE(err, 1e-8);
}

TEST(RiccatiOde, PoleIsReportedAsBlowUp) {
    // lambda = 0 on a constant field: w = i tan(3 tau / 2) from w(0) = 0
    const BackgroundProfile p(ConstantField{3.0});
    try {
        solve_riccati_ode(p, 0.0, 0.0, 2.0, {0.0, 0.0});
        FAIL() << "expected a blow-up";
    } catch (const BlowUpError& e) {
        EXPECT_NEAR(e.tau(), std::acos(-1.0) / 3.0, 0.05);
    }
}

TEST(IntegralIteration, StartsFromHalfField) {
    const BackgroundProfile p(ExponentialSwitch{3.0, 4.0, 1.0, 4.0});
    const auto g = linspace(-2.0, 3.0, 501);
    const auto r = solve_integral_iteration(p, lam_down, g);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(r.first_source[i], 0.5 * p(g[i]));
}

TEST(IntegralIteration, ConstantConvergesToFixedPoint) {
    const BackgroundProfile p(ConstantField{3.0});
    const auto r = solve_integral_iteration(p, lam_down, linspace(-5.0, 5.0, 201));
    const auto c = constant_background(lam_down, 3.0);
    for (double t : {-5.0, 0.0, 4.9}) EXPECT_LT(std::abs(r.solution.w(t) - c.w0), 1e-10);
    EXPECT_LT(std::abs(r.solution.z(4.9) - 4.9 * c.z_rate), 1e-9);
}

TEST(IntegralIteration, SmoothSwitchOffMatchesOde) {
    std::vector<double> tau;
    std::vector<cplx> om;
    for (int i = 0; i <= 4000; ++i) {
        const double t = -10.0 + 20.0 * i / 4000.0;
        tau.push_back(t);
        om.emplace_back(1.5 * (1.0 - std::tanh(2.0 * t)));
    }
    // sampled densely enough that the interpolant is not the limiting error
    const BackgroundProfile p(Tabulated{tau, om, om.front(), om.back()});
    const auto g = linspace(-8.0, 8.0, 8001);
    const auto it = solve_integral_iteration(p, lam_down, g);
    const auto ode = solve_riccati_ode(p, lam_down, -8.0, 8.0, asymptotic_initial(p, lam_down, -8.0));
    double err = 0.0;
    for (double t : linspace(-8.0, 8.0, 1601)) {
        err = std::max(err, std::abs(it.solution.w(t) - ode.w(t)));
        err = std::max(err, std::abs(it.solution.z(t) - ode.z(t)));
    }
    EXPECT_LE(err, 1e-6);
    EXPECT_LT(it.iterations, 200);
}

TEST(IntegralIteration, GrowingKernelIsReported) {
    const BackgroundProfile p(ConstantField{3.0});
    EXPECT_THROW(solve_integral_iteration(p, lam_up, linspace(-1.0, 1.0, 11)),
                 IterationDivergedError);
}

TEST(Adiabatic, ExactOnConstantField) {
    const BackgroundProfile p(ConstantField{3.0});
    const auto c = constant_background(lam_up, 3.0);
    const auto a = adiabatic_approx(p, lam_up, 2.5);
    EXPECT_LT(std::abs(a.w - c.w0), 1e-15);
    EXPECT_LT(std::abs(a.z - 2.5 * c.z_rate), 1e-14);
}

TEST(Adiabatic, SlowSwitchTracksOde) {
    // weak field: the lowest-order form keeps k at its tau -> -inf value, which
    // costs O(Omega0^2 / eps^2) even for an infinitely slow switch
    const BackgroundProfile p(ExponentialSwitch{0.5, 0.01, infinite_time, infinite_time});
    const auto ode = solve_riccati_ode(p, lam_down, -2.0, 400.0, asymptotic_initial(p, lam_down, -2.0));
    double dev = 0.0, scale = 0.0;
    for (double t : linspace(-2.0, 400.0, 805)) {
        dev = std::max(dev, std::abs(adiabatic_approx(p, lam_down, t).w - ode.w(t)));
        scale = std::max(scale, std::abs(ode.w(t)));
    }
    EXPECT_LT(dev / scale, 0.01);
}
