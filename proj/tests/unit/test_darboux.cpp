#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/minima.hpp>

#include <slowlight/darboux.hpp>

using namespace slowlight;

namespace {

PhysicalParams base_params() { return {}; }

SpectralConfig spectral(cplx lambda = {0.0, 4.1}, cplx c2 = 1.0, cplx c3 = 1.0, double phase = 0.0) {
    SpectralConfig s;
    s.lambda0 = lambda;
    s.c2 = c2;
    s.c3 = c3;
    s.c1_phase = phase;
    return s;
}

double field_gap(const DressedPoint& a, const DressedPoint& b) {
    double g = std::max(std::abs(a.omega_a - b.omega_a), std::abs(a.omega_b - b.omega_b));
    g = std::max(g, (a.rho - b.rho).cwiseAbs().maxCoeff());
    if (a.psi && b.psi) g = std::max(g, (*a.psi - *b.psi).cwiseAbs().maxCoeff());
    return g;
}

/// Central-difference residual of dPhi/dtau = U Phi and dPhi/dzeta = V Phi on the seed.
double linear_residual(const std::function<Mat3(double, double)>& phi, const PhysicalParams& p,
                       cplx lambda, double tau, double zeta) {
    const double h = 1e-4;
    const cplx ph = std::exp(I * (p.k_phase * zeta));
    const Mat3 u = 0.5 * I * lambda * level_signature() -
                   I * interaction_hamiltonian(0.0, p.omega0 * ph);
    const Mat3 v = 0.5 * I * p.nu0 / (lambda - p.delta) * seed_density(p, zeta);
    const Mat3 f = phi(tau, zeta);
    const Mat3 dt = (phi(tau + h, zeta) - phi(tau - h, zeta)) / (2 * h);
    const Mat3 dz = (phi(tau, zeta + h) - phi(tau, zeta - h)) / (2 * h);
    const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
    return std::max((dt - u * f).cwiseAbs().maxCoeff(), (dz - v * f).cwiseAbs().maxCoeff()) / scale;
}

PhysicalParams phased_params() {
    PhysicalParams p;
    p.k_phase = 0.15;
    p.x_excited = 1.2;
    p.delta = 0.3;
    return p;
}

}  // namespace

TEST(FundamentalMatrix, UnitCornerAtOrigin) {
    const FundamentalMatrix fm(base_params(), cplx(0.7, 2.0));
    EXPECT_LT(std::abs(fm(0.0, 0.0)(0, 0) - 1.0), 1e-15);
}

TEST(FundamentalMatrix, ColumnsSolveLinearPair) {
    for (const auto& p : {base_params(), phased_params()}) {
        const cplx lam{0.4, 4.1};
        const FundamentalMatrix fm(p, lam);
        for (double tau : {-0.7, 0.0, 0.9})
            for (double zeta : {-0.5, 0.3, 1.1}) {
                EXPECT_LE(linear_residual([&](double t, double z) { return fm(t, z); }, p, lam, tau,
                                          zeta),
                          1e-6)
                    << tau << " " << zeta;
                EXPECT_LE(linear_residual([&](double t, double z) { return fm.companion(t, z); }, p,
                                          std::conj(lam), tau, zeta),
                          1e-6);
            }
    }
}

TEST(FundamentalMatrix, PairingWithCompanion) {
    for (const auto& p : {base_params(), phased_params()}) {
        const FundamentalMatrix fm(p, cplx(-0.3, 4.1));
        for (double tau : {-1.3, 0.2, 1.7})
            for (double zeta : {-2.0, 0.5, 2.5}) {
                const Mat3 g = fm.companion(tau, zeta).adjoint() * fm(tau, zeta);
                EXPECT_LE((g - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-10);
            }
    }
}

TEST(FundamentalMatrix, PoleAtDetuning) {
    PhysicalParams p;
    p.delta = 0.5;
    EXPECT_THROW(FundamentalMatrix(p, cplx(0.5, 0.0)), DomainError);
}

TEST(DressingMatrix, SpectrumAndOrthogonality) {
    const auto p = base_params();
    const auto s = spectral(cplx(0.3, 4.1), cplx(0.8, 0.2), cplx(1.1, -0.4), 0.6);
    const FundamentalMatrix fm(p, s.lambda0);
    for (double delta : {0.0, 0.8}) {
        const auto dm = dressing_matrix(fm, s, 0.4, -0.6);
        Eigen::ComplexEigenSolver<Mat3> es(dm.xi(delta));
        int near_conj = 0, near_lambda = 0;
        for (int i = 0; i < 3; ++i) {
            const cplx e = es.eigenvalues()(i);
            if (std::abs(e - (std::conj(s.lambda0) - delta)) < 1e-10) ++near_conj;
            if (std::abs(e - (s.lambda0 - delta)) < 1e-10) ++near_lambda;
        }
        EXPECT_EQ(near_conj, 2);
        EXPECT_EQ(near_lambda, 1);
        const Mat3& psi = dm.psi1();
        EXPECT_LE(std::abs(psi.col(0).dot(psi.col(2))), 1e-12);
        EXPECT_LE(std::abs(psi.col(1).dot(psi.col(2))), 1e-12);
    }
}

TEST(DressingMatrix, OppositeCoefficientsAreSingular) {
    const FundamentalMatrix fm(base_params(), cplx(0.0, 4.1));
    EXPECT_THROW(dressing_matrix(fm, spectral(cplx(0.0, 4.1), 1.0, -1.0), 0.1, 0.2),
                 SingularDressingError);
    EXPECT_THROW(dressing_matrix(fm, spectral(cplx(0.0, 4.1), 0.0, 0.0), 0.1, 0.2),
                 SingularDressingError);
}

TEST(DressingMatrix, DressedStateStaysPure) {
    const auto p = base_params();
    const auto s = spectral();
    const FundamentalMatrix fm(p, s.lambda0);
    for (double tau : {-1.0, 0.0, 0.5, 2.0})
        for (double zeta : {-1.0, 0.0, 1.5}) {
            const auto dm = dressing_matrix(fm, s, tau, zeta);
            const Mat3 rho = dm.xi(p.delta) * seed_density(p, zeta) * dm.xi_inverse(p.delta);
            EXPECT_LE((rho * rho - rho).cwiseAbs().maxCoeff(), 1e-10);
            EXPECT_LE(std::abs(rho.trace() - 1.0), 1e-12);
        }
}

TEST(SlowSoliton, PeakAmplitudeAndFarField) {
    const auto sol = slow_soliton(base_params(), spectral());
    const auto c = constant_background(cplx(0.0, 4.1), 3.0);
    const double w2 = std::norm(c.w0);
    const double tau_peak = -0.5 * std::log1p(w2) / c.z_rate.real();
    EXPECT_NEAR(sol.slow_phase(tau_peak, 0.0), 0.0, 1e-14);
    const auto peak = sol(tau_peak, 0.0);
    EXPECT_NEAR(std::abs(peak.omega_a), 2.0 * 4.1 * std::sqrt(w2) / std::sqrt(1.0 + w2), 1e-12);
    EXPECT_NEAR(std::abs(peak.omega_a), 3.2717, 5e-5);
    for (double tau : {-80.0, 80.0}) {
        const auto far = sol(tau, 0.0);
        EXPECT_LT(std::abs(far.omega_a), 1e-12);
        EXPECT_NEAR(std::abs(far.omega_b), 3.0, 1e-12);
    }
    // overflow-free far away
    const auto very_far = sol(5000.0, 0.0);
    EXPECT_TRUE(std::isfinite(very_far.omega_b.real()));
    EXPECT_NEAR(std::abs(very_far.omega_b), 3.0, 1e-12);
}

TEST(FastSoliton, PeakAmplitudeAndUpperPopulation) {
    const auto sol = fast_soliton(base_params(), spectral());
    const auto c = constant_background(cplx(0.0, 4.1), 3.0);
    const double w2 = std::norm(c.w0);
    const double tau_peak = -0.5 * std::log1p(w2) / (4.1 - c.z_rate.real());
    EXPECT_NEAR(sol.fast_phase(tau_peak, 0.0), 0.0, 1e-14);
    const auto peak = sol(tau_peak, 0.0);
    EXPECT_NEAR(std::abs(peak.omega_a), 7.5190, 5e-5);
    EXPECT_NEAR(std::norm((*peak.psi)(2)), 0.8408, 5e-5);
    EXPECT_NEAR(std::norm((*peak.psi)(2)), std::norm(peak.omega_a) / (4.0 * 4.1 * 4.1), 1e-12);
}

TEST(GeneralDressing, ReducesToSlowAndFast) {
    const auto p = base_params();
    const auto slow = slow_soliton(p, spectral());
    const auto fast = fast_soliton(p, spectral());
    const auto only_slow = dressed_general(p, spectral(cplx(0.0, 4.1), 1.0, 0.0));
    const auto only_fast = dressed_general(p, spectral(cplx(0.0, 4.1), 0.0, 1.0));
    for (double tau = -6.0; tau <= 6.0; tau += 0.75)
        for (double zeta = -4.0; zeta <= 4.0; zeta += 1.0) {
            EXPECT_LE(field_gap(only_slow(tau, zeta), slow(tau, zeta)), 1e-12);
            EXPECT_LE(field_gap(only_fast(tau, zeta), fast(tau, zeta)), 1e-12);
        }
}

TEST(GeneralDressing, AcceptsMatchingScatteringOnly) {
    const auto p = base_params();
    EXPECT_NO_THROW(dressed_general(p, spectral(), constant_solution(cplx(0.0, 4.1), 3.0)));
    EXPECT_THROW(dressed_general(p, spectral(), constant_solution(cplx(0.0, 3.9), 3.0)), ConfigError);
    EXPECT_THROW(dressed_general(p, spectral(), exponential_tail_solution(cplx(0.0, -4.1), 3.0, 4.0)),
                 FamilyMismatchError);
}

TEST(DressingConsistency, EveryFamilyMatchesGenericMachinery) {
    auto p = base_params();
    p.delta = 0.4;
    const auto s = spectral(cplx(0.5, 4.1), cplx(0.7, 0.3), cplx(1.2, -0.5), 0.9);
    std::vector<DressedSolution> families{slow_soliton(p, s), fast_soliton(p, s), dressed_general(p, s)};
    auto pz = p;
    pz.omega0 = 0.0;
    families.push_back(zero_background_memory(pz, s));
    auto sc = std::make_shared<ScatteringSolution>(constant_solution(s.lambda0, 3.0));
    families.push_back(one_soliton_timedep(p, s, sc));
    auto sp = s;
    sp.lambda0 = cplx(0.5, -4.1);
    auto pw = std::make_shared<ScatteringSolution>(piecewise_scenario(sp.lambda0, 3.0, 4.0, 1.0, 4.0));
    families.push_back(one_soliton_timedep(p, sp, pw));
    for (const auto& f : families)
        for (double tau = -2.5; tau <= 5.5; tau += 0.5)
            for (double zeta = -2.0; zeta <= 2.0; zeta += 0.5) {
                const auto a = f(tau, zeta);
                const auto b = f.generic(tau, zeta);
                EXPECT_LE(std::abs(a.omega_a - b.omega_a), 1e-10) << to_string(f.family());
                EXPECT_LE(std::abs(a.omega_b - b.omega_b), 1e-10) << to_string(f.family());
                EXPECT_LE(field_gap(a, b), 1e-10) << to_string(f.family()) << " " << tau << " " << zeta;
            }
}

TEST(DressingConsistency, PhasedBackgroundMixedState) {
    const auto p = phased_params();
    const auto s = spectral(cplx(0.2, 4.1));
    for (const auto& f : {dressed_general(p, s), slow_soliton(p, s), fast_soliton(p, s)})
        for (double tau = -2.0; tau <= 2.0; tau += 0.5)
            for (double zeta = -2.0; zeta <= 2.0; zeta += 1.0) {
                const auto a = f(tau, zeta);
                EXPECT_FALSE(a.psi.has_value());
                EXPECT_LE(field_gap(a, f.generic(tau, zeta)), 1e-10);
                EXPECT_NO_THROW(DensityMatrix{a.rho});
                const DensityMatrix rho{a.rho};
                EXPECT_FALSE(rho.is_pure());
            }
}

TEST(DressedState, UnitNormEverywhere) {
    const auto p = base_params();
    for (const auto& f : {dressed_general(p, spectral()), slow_soliton(p, spectral()),
                          fast_soliton(p, spectral())})
        for (double tau = -40.0; tau <= 40.0; tau += 2.5)
            for (double zeta = -40.0; zeta <= 40.0; zeta += 2.5)
                EXPECT_NEAR(f(tau, zeta).psi->squaredNorm(), 1.0, 1e-12);
}

TEST(Invariants, GaugePhaseLeavesIntensitiesAlone) {
    const auto p = base_params();
    const auto a = dressed_general(p, spectral(cplx(0.3, 4.1), 1.0, 0.7, 0.0));
    const auto b = dressed_general(p, spectral(cplx(0.3, 4.1), 1.0, 0.7, 1.3));
    for (double tau = -3.0; tau <= 3.0; tau += 0.5)
        for (double zeta = -2.0; zeta <= 2.0; zeta += 1.0) {
            const auto x = a(tau, zeta), y = b(tau, zeta);
            EXPECT_NEAR(std::abs(x.omega_a), std::abs(y.omega_a), 1e-12);
            EXPECT_LE(std::abs(x.omega_b - y.omega_b), 1e-12);
            EXPECT_LE(std::abs(std::exp(-I * 1.3) * x.omega_a - y.omega_a), 1e-12);
            for (int k = 0; k < 3; ++k) EXPECT_NEAR(std::norm((*x.psi)(k)), std::norm((*y.psi)(k)), 1e-12);
        }
}

TEST(Invariants, ScalingSecondCoefficientShiftsSlowPhaseOnly) {
    const auto p = base_params();
    const cplx shift{0.8, 0.4};
    const auto a = dressed_general(p, spectral(cplx(0.3, 4.1), 1.0, 1.0));
    const auto b = dressed_general(p, spectral(cplx(0.3, 4.1), std::exp(shift), 1.0));
    for (double tau : {-2.0, 0.0, 3.0})
        for (double zeta : {-1.0, 2.0}) {
            EXPECT_NEAR(b.slow_phase(tau, zeta) - a.slow_phase(tau, zeta), shift.real(), 1e-12);
            EXPECT_NEAR(b.fast_phase(tau, zeta), a.fast_phase(tau, zeta), 1e-12);
        }
}

TEST(Normalization, PrintedFormMatchesOnlyForOneComponent) {
    const auto p = base_params();
    const auto only_slow = dressed_general(p, spectral(cplx(0.0, 4.1), 1.0, 0.0));
    EXPECT_NEAR(only_slow.printed_normalization_ratio(0.3, 0.1), 1.0, 1e-14);
    const auto both = dressed_general(p, spectral(cplx(0.5, 4.1)));
    double worst = 0.0;
    for (double tau = -2.0; tau <= 2.0; tau += 0.1)
        worst = std::max(worst, std::abs(both.printed_normalization_ratio(tau, 0.0) - 1.0));
    EXPECT_GT(worst, 1e-3);
    EXPECT_TRUE(std::isfinite(both.log_normalization(400.0, 300.0)));
}

TEST(ZeroBackground, VanishingFastComponentStoresPolariton) {
    PhysicalParams p;
    p.omega0 = 0.0;
    const auto f = zero_background_memory(p, spectral(cplx(0.0, -4.1), 1.0, 0.0));
    for (double tau : {-3.0, 0.0, 3.0})
        for (double zeta : {-2.0, 0.0, 2.0}) {
            const auto x = f(tau, zeta);
            EXPECT_EQ(x.omega_a, cplx(0.0));
            EXPECT_EQ(x.omega_b, cplx(0.0));
            // the pattern does not move in tau
            EXPECT_LE((*x.psi - *f(tau + 1.0, zeta).psi).cwiseAbs().maxCoeff(), 1e-14);
        }
}

TEST(ZeroBackground, MaximumSpinPopulation) {
    for (const auto& [delta, expected] : {std::pair{0.0, 1.0}, std::pair{1.0, 16.81 / 17.81}}) {
        PhysicalParams p;
        p.omega0 = 0.0;
        p.delta = delta;
        const auto f = zero_background_memory(p, spectral(cplx(0.0, -4.1)));
        auto neg_p2 = [&](double zeta) { return -std::norm((*f(20.0, zeta).psi)(1)); };
        const auto best = boost::math::tools::brent_find_minima(neg_p2, -10.0, 10.0, 52);
        EXPECT_NEAR(-best.second, expected, 1e-9) << delta;
    }
    EXPECT_NEAR(16.81 / 17.81, 0.9438, 1e-4);
}

TEST(ZeroBackground, RequiresDarkBackground) {
    EXPECT_THROW(zero_background_memory(base_params(), spectral()), FamilyMismatchError);
}

TEST(TimeDependent, ConstantProfileRecoversSlowSoliton) {
    const auto p = base_params();
    const auto s = spectral(cplx(0.4, 4.1));
    const auto slow = slow_soliton(p, s);
    const auto td = one_soliton_timedep(p, s, std::make_shared<ScatteringSolution>(constant_solution(s.lambda0, 3.0)));
    for (double tau = -5.0; tau <= 5.0; tau += 0.5)
        for (double zeta = -3.0; zeta <= 3.0; zeta += 1.0)
            EXPECT_LE(field_gap(slow(tau, zeta), td(tau, zeta)), 1e-10);
}

TEST(TimeDependent, DarkRegionCarriesNoField) {
    const auto p = base_params();
    const auto s = spectral(cplx(0.0, -4.1));
    auto sc = std::make_shared<ScatteringSolution>(piecewise_scenario(s.lambda0, 3.0, 4.0, 1.0, 4.0));
    const auto td = one_soliton_timedep(p, s, sc);
    for (double tau : {1.2, 2.0, 3.5})
        for (double zeta : {-1.0, 0.0, 3.0, 8.0}) {
            const auto x = td(tau, zeta);
            EXPECT_EQ(std::abs(x.omega_a), 0.0);
            EXPECT_EQ(std::abs(x.omega_b), 0.0);
        }
}

TEST(TimeDependent, UnitNormOnDenseGrid) {
    const auto p = base_params();
    const auto s = spectral(cplx(0.0, -4.1));
    auto sc = std::make_shared<ScatteringSolution>(piecewise_scenario(s.lambda0, 3.0, 4.0, 1.0, 4.0));
    const auto td = one_soliton_timedep(p, s, sc);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const auto col = td.column(-4.0 + 12.0 * i / 199.0);
        for (int j = 0; j < 200; ++j) {
            const auto x = td.evaluate(col, -5.0 + 25.0 * j / 199.0);
            worst = std::max(worst, std::abs(x.psi->squaredNorm() - 1.0));
        }
    }
    EXPECT_LE(worst, 1e-12);
}

TEST(TimeDependent, Validation) {
    const auto p = base_params();
    auto sc = std::make_shared<ScatteringSolution>(constant_solution(cplx(0.0, 4.1), 3.0));
    EXPECT_THROW(one_soliton_timedep(p, spectral(cplx(0.0, 3.0)), sc), ConfigError);
    auto q = p;
    q.omega0 = 2.0;
    EXPECT_THROW(one_soliton_timedep(q, spectral(), sc), ConfigError);
    EXPECT_THROW(one_soliton_timedep(phased_params(), spectral(), sc), ConfigError);
}

TEST(FamilyMismatch, SlowNeedsConstantBackground) {
    const BackgroundProfile sw(ExponentialSwitch{3.0, 4.0, 1.0, 4.0});
    EXPECT_THROW(slow_soliton(base_params(), spectral(), sw), FamilyMismatchError);
    EXPECT_THROW(fast_soliton(base_params(), spectral(), sw), FamilyMismatchError);
    EXPECT_NO_THROW(slow_soliton(base_params(), spectral(), BackgroundProfile(ConstantField{3.0})));
}

namespace {

double intensity_gap(const DressedSolution& a, const DressedSolution& b, double flip) {
    double g = 0.0;
    for (double t = -3.0; t <= 3.0; t += 0.25)
        for (double z = -3.0; z <= 3.0; z += 0.25) {
            const auto p = a(t, z);
            const auto q = b(flip * t, flip * z);
            g = std::max({g, std::abs(std::norm(p.omega_a) - std::norm(q.omega_a)),
                          std::abs(std::norm(p.omega_b) - std::norm(q.omega_b)),
                          (p.rho.diagonal() - q.rho.diagonal()).cwiseAbs().maxCoeff()});
        }
    return g;
}

}  // namespace

TEST(Mirror, NegatedConjugateSpectralParameter) {
    // (Omega, rho, Delta) -> (-Omega*, rho*, -Delta) maps lambda to -lambda*
    const cplx c2{0.7, 0.4}, c3{1.2, -0.5};
    PhysicalParams p = base_params();
    p.delta = 0.4;
    PhysicalParams q = p;
    q.delta = -0.4;
    const auto a = spectral({0.6, 4.1}, c2, c3);
    const auto b = spectral({-0.6, 4.1}, std::conj(c2), -std::conj(c3));
    EXPECT_LE(intensity_gap(dressed_general(p, a), dressed_general(q, b), 1.0), 1e-12);
    EXPECT_LE(intensity_gap(slow_soliton(p, a), slow_soliton(q, b), 1.0), 1e-12);
    EXPECT_LE(intensity_gap(fast_soliton(p, a), fast_soliton(q, b), 1.0), 1e-12);
}

TEST(Mirror, ConjugateSpectralParameterReflectsTheMap) {
    // the two figure signs lambda0 = +-4.1i are related by (tau, zeta) -> (-tau, -zeta)
    const cplx c2{0.7, 0.4}, c3{1.2, -0.5};
    for (cplx lam : {cplx(0.0, 4.1), cplx(0.6, 4.1)}) {
        const auto a = spectral(lam, c2, c3);
        const auto b = spectral(std::conj(lam), std::conj(c2), std::conj(c3));
        EXPECT_LE(intensity_gap(dressed_general(base_params(), a), dressed_general(base_params(), b), -1.0), 1e-12);
        EXPECT_LE(intensity_gap(slow_soliton(base_params(), a), slow_soliton(base_params(), b), -1.0), 1e-12);
    }
}
