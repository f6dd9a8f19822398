#pragma once

// Adapters that hand analytic solutions to the finite-difference oracle as plain callables.

#include <memory>

#include "darboux.hpp"
#include "oracle.hpp"

namespace slowlight {

/// Dressed solution as oracle input; scale_a multiplies Omega_a (1 for the exact candidate).
inline MbField as_mb_field(std::shared_ptr<const DressedSolution> sol, double scale_a = 1.0) {
    return [sol = std::move(sol), scale_a](double tau, double zeta) {
        const auto q = (*sol)(tau, zeta);
        return MbPoint{scale_a * q.omega_a, q.omega_b, q.rho};
    };
}

/// Same with rho replaced by its transpose, a deliberate corruption.
inline MbField as_transposed_mb_field(std::shared_ptr<const DressedSolution> sol) {
    return [sol = std::move(sol)](double tau, double zeta) {
        const auto q = (*sol)(tau, zeta);
        return MbPoint{q.omega_a, q.omega_b, q.rho.transpose()};
    };
}

/// Undressed background: Omega_a = 0, Omega_b = profile (times the slow phase), rho = seed state.
inline MbField seed_field(const PhysicalParams& p, const BackgroundProfile& profile) {
    return [p, profile](double tau, double zeta) {
        const cplx ob = profile.holds<ConstantField>() ? p.omega0 * std::exp(I * (p.k_phase * zeta)) : profile(tau);
        return MbPoint{0.0, ob, seed_density(p, zeta)};
    };
}

inline MatrixField as_matrix_field(std::shared_ptr<const FundamentalMatrix> fm) {
    return [fm = std::move(fm)](double tau, double zeta) { return (*fm)(tau, zeta); };
}

/// Incoming slice at zeta_begin and entry state at tau_begin taken from a dressed solution.
inline MbBoundary boundary_from(std::shared_ptr<const DressedSolution> sol, const OracleGrid& g) {
    MbBoundary b;
    const auto col = [&] {
        std::vector<DressedPoint> v;
        for (int i = 0; i < g.tau_points(); ++i) v.push_back((*sol)(g.tau(i), g.zeta_begin));
        return v;
    }();
    for (const auto& q : col) {
        b.omega_a.push_back(q.omega_a);
        b.omega_b.push_back(q.omega_b);
    }
    b.rho_entry = [sol, t0 = g.tau_begin](double zeta) -> Mat3 { return (*sol)(t0, zeta).rho; };
    return b;
}

/// Narrowest feature of a dressed solution in either coordinate, for resolution checks.
inline double feature_width(const DressedSolution& sol) {
    const cplx lam = sol.lambda();
    const double eps = std::abs(lam.imag());
    const double zeta_rate = 0.5 * sol.params().nu0 * std::abs((1.0 / (lam - sol.params().delta)).imag());
    return 1.0 / std::max(eps, zeta_rate);
}

}  // namespace slowlight
