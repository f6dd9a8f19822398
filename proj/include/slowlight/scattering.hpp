#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "background.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "ode.hpp"
#include "quadrature.hpp"
#include "special_functions.hpp"

namespace slowlight {

/// sqrt(lambda^2 + omega0^2) on the branch that tends to lambda as omega0 -> 0.
inline cplx branch_root(cplx lambda, double omega0) {
    cplx s = std::sqrt(lambda * lambda + omega0 * omega0);
    if ((s * std::conj(lambda)).real() < 0.0) s = -s;
    return s;
}

/// k(lambda) = (lambda + sqrt(lambda^2 + omega0^2)) / 2.
inline cplx spectral_k(cplx lambda, double omega0) {
    return 0.5 * (lambda + branch_root(lambda, omega0));
}

struct ConstantScattering {
    cplx w0;
    cplx z_rate;
};

/// Fixed point of the Riccati equation on a constant background Omega0 e^{ik zeta}.
inline ConstantScattering constant_background(cplx lambda, double omega0, double k_phase = 0.0,
                                              double zeta = 0.0) {
    if (lambda == 0.0 && omega0 == 0.0)
        throw DegenerateParameterError("lambda = 0 with zero background has no scattering data");
    const cplx denom = lambda + branch_root(lambda, omega0);
    if (denom == 0.0) throw DegenerateParameterError("lambda + sqrt(lambda^2 + omega0^2) vanishes");
    const cplx w0 = omega0 * std::exp(I * (k_phase * zeta)) / denom;
    return {w0, I * omega0 * omega0 / (2.0 * denom)};
}

struct WZ {
    cplx w;
    cplx z;
};

/// Right-hand sides of the Riccati equation for w and the quadrature for z.
inline cplx riccati_rhs(cplx lambda, cplx omega, cplx w) {
    return -I * lambda * w + 0.5 * I * (omega - std::conj(omega) * w * w);
}
inline cplx zeta_rate_rhs(cplx omega, cplx w) { return 0.5 * I * std::conj(omega) * w; }

enum class ScatteringMethod { closed_form, ode, iterative, adiabatic };

inline std::string to_string(ScatteringMethod m) {
    switch (m) {
        case ScatteringMethod::closed_form: return "closed_form";
        case ScatteringMethod::ode: return "ode";
        case ScatteringMethod::iterative: return "iterative";
        case ScatteringMethod::adiabatic: return "adiabatic";
    }
    return "unknown";
}

struct ScatteringRegion {
    std::string name;
    double begin;
    double end;
};

/// w(tau, lambda) and z(tau, lambda) for one background profile.
class ScatteringSolution {
public:
    using Evaluator = std::function<WZ(double)>;

    ScatteringSolution(cplx lambda, BackgroundProfile profile, ScatteringMethod method,
                       std::vector<ScatteringRegion> regions, Evaluator eval,
                       double tau_min = -std::numeric_limits<double>::infinity(),
                       double tau_max = std::numeric_limits<double>::infinity())
        : lambda_(lambda), profile_(std::move(profile)), method_(method),
          regions_(std::move(regions)), eval_(std::move(eval)), tau_min_(tau_min),
          tau_max_(tau_max) {}

    WZ operator()(double tau) const {
        if (tau < tau_min_ || tau > tau_max_)
            throw DomainError("scattering solution evaluated outside [" + std::to_string(tau_min_) +
                              ", " + std::to_string(tau_max_) + "] at tau = " +
                              std::to_string(tau));
        return eval_(tau);
    }
    cplx w(double tau) const { return (*this)(tau).w; }
    cplx z(double tau) const { return (*this)(tau).z; }

    cplx lambda() const { return lambda_; }
    double omega_minus() const { return profile_.omega_minus(); }
    cplx k() const { return spectral_k(lambda_, omega_minus()); }
    /// w(-infinity) = Omega(-infinity) / (2k).
    cplx w_minus() const { return profile_.asymptotics().minus_infinity / (2.0 * k()); }
    cplx z_rate_minus() const { return I * std::norm(profile_.asymptotics().minus_infinity) / (4.0 * k()); }

    ScatteringMethod method() const { return method_; }
    const std::vector<ScatteringRegion>& regions() const { return regions_; }
    const BackgroundProfile& profile() const { return profile_; }
    double tau_min() const { return tau_min_; }
    double tau_max() const { return tau_max_; }

    std::string region_at(double tau) const {
        for (const auto& r : regions_)
            if (tau >= r.begin && tau < r.end) return r.name;
        return regions_.empty() ? "" : regions_.back().name;
    }

private:
    cplx lambda_;
    BackgroundProfile profile_;
    ScatteringMethod method_;
    std::vector<ScatteringRegion> regions_;
    Evaluator eval_;
    double tau_min_, tau_max_;
};

inline ScatteringSolution constant_solution(cplx lambda, double omega0) {
    const auto c = constant_background(lambda, omega0);
    return ScatteringSolution(
        lambda, ConstantField{omega0}, ScatteringMethod::closed_form,
        {{"constant", -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()}},
        [c](double tau) { return WZ{c.w0, c.z_rate * tau}; });
}

/// Bessel-function solution on the exponentially decaying background
/// Omega0 e^{-alpha tau}, matched to the constant solution at tau = 0.
/// Internally every Bessel function is written as (x/2)^nu times its entire
/// series part, so only (x/2)^{2 gamma} carries the branch.
class ExponentialSolution {
public:
    ExponentialSolution(cplx lambda, double omega0, double alpha, const BesselOptions& opt = {})
        : lambda_(lambda), omega0_(omega0), alpha_(alpha), opt_(opt) {
        if (!(alpha > 0.0)) throw ConfigError("exponential solution needs alpha > 0");
        if (!(omega0 > 0.0)) throw ConfigError("exponential solution needs omega0 > 0");
        gamma_ = (alpha + I * lambda) / (2.0 * alpha);
        x0_ = -omega0 / (2.0 * alpha);
        w0_ = constant_background(lambda, omega0).w0;
        const cplx h = 0.5 * x0_;
        const cplx s_gm1 = core(gamma_ - 1.0, x0_), s_g = core(gamma_, x0_);
        const cplx s_1mg = core(1.0 - gamma_, x0_), s_mg = core(-gamma_, x0_);
        c_ = half_power(x0_, 2.0 * gamma_ - 1.0) * (s_gm1 - I * w0_ * h * s_g) /
             (h * s_1mg + I * w0_ * s_mg);
        g0_ = g(x0_);
    }

    cplx gamma() const { return gamma_; }
    cplx matching_constant() const { return c_; }
    double x0() const { return x0_; }
    double argument(double tau) const { return x0_ * std::exp(-alpha_ * tau); }

    WZ operator()(double tau) const {
        const double x = argument(tau);
        const cplx gx = g(x);
        const cplx num = c_ * (0.5 * x) * core(1.0 - gamma_, x) -
                         half_power(x, 2.0 * gamma_ - 1.0) * core(gamma_ - 1.0, x);
        return {I * num / gx, std::log(gx / g0_)};
    }

    /// tau -> infinity limits; w tends to 0 only when Re gamma > 1/2.
    WZ limit() const {
        if (!(gamma_.real() > 0.5))
            throw DomainError("w does not vanish at large tau unless Im lambda < 0");
        return {0.0, std::log(c_ * reciprocal_gamma(1.0 - gamma_) / g0_)};
    }

    /// The same data in the textbook Bessel-ratio form (for cross-checks).
    WZ textbook(double tau) const {
        const double x = argument(tau);
        auto J = [&](cplx nu, double xx) { return bessel_j(nu, xx, opt_); };
        const cplx cc = (J(gamma_ - 1.0, x0_) - I * w0_ * J(gamma_, x0_)) /
                        (J(1.0 - gamma_, x0_) + I * w0_ * J(-gamma_, x0_));
        const cplx f = cc * J(-gamma_, x) + J(gamma_, x);
        const cplx f0 = cc * J(-gamma_, x0_) + J(gamma_, x0_);
        return {I * (cc * J(1.0 - gamma_, x) - J(gamma_ - 1.0, x)) / f,
                -alpha_ * gamma_ * tau + std::log(f / f0)};
    }

private:
    cplx core(cplx nu, double x) const { return bessel_series_core(nu, x, opt_); }
    cplx g(double x) const {
        return c_ * core(-gamma_, x) + half_power(x, 2.0 * gamma_) * core(gamma_, x);
    }

    cplx lambda_;
    double omega0_, alpha_;
    BesselOptions opt_;
    cplx gamma_, c_, w0_, g0_;
    double x0_;
};

/// Point evaluation of the exponential-background solution.
inline WZ exponential_background(cplx lambda, double omega0, double alpha, double tau) {
    if (tau < 0.0) throw DomainError("exponential background solution is defined for tau >= 0");
    return ExponentialSolution(lambda, omega0, alpha)(tau);
}

/// Solution on a constant background restarted from w = 0 at u = 0
/// (the field switched back on after a dark interval).
struct RestartSolution {
    cplx lambda, s, c3;
    double omega0;

    RestartSolution(cplx lam, double om)
        : lambda(lam), s(branch_root(lam, om)), omega0(om) {
        c3 = (omega0 * omega0 + 2.0 * lambda * (lambda - s)) / (omega0 * omega0);
    }

    /// w and the increment of z after time u since the restart.
    WZ operator()(double u) const {
        const cplx t = std::tan(0.5 * s * u);
        const cplx w = omega0 * t / (lambda * t - I * s);
        // log(e^{p} + c3 e^{q}) - log(1 + c3), factoring the dominant exponential
        const cplx p = -0.5 * I * (lambda - s) * u;
        const cplx q = -0.5 * I * (lambda + s) * u;
        cplx lse;
        if (p.real() >= q.real())
            lse = p + std::log(1.0 + c3 * std::exp(q - p));
        else
            lse = q + std::log(std::exp(p - q) + c3);
        return {w, lse - std::log(1.0 + c3)};
    }
};

struct PiecewiseData {
    cplx gamma, matching_constant, restart_constant;
    cplx w_cut, z_cut;  // values just before the cutoff
    cplx z_dark;        // constant z in the dark interval
};

/// Exponential switch-off, dark interval and restart, stitched region by region.
inline ScatteringSolution piecewise_scenario(cplx lambda, double omega0, double alpha, double cutoff,
                                             double restart, PiecewiseData* data = nullptr) {
    if (!(alpha > 0.0)) throw ConfigError("piecewise scenario needs alpha > 0");
    if (!(cutoff > 0.0) || !(restart > cutoff))
        throw ConfigError("piecewise scenario needs 0 < cutoff < restart");
    if (!(lambda.imag() < 0.0))
        throw ConfigError(
            "piecewise scenario needs Im lambda < 0: otherwise w does not decay in the dark "
            "interval");
    const auto c = constant_background(lambda, omega0);
    auto ex = std::make_shared<ExponentialSolution>(lambda, omega0, alpha);
    const WZ lim = ex->limit();
    const RestartSolution rs(lambda, omega0);
    if (data) {
        const WZ cut = (*ex)(cutoff);
        *data = {ex->gamma(), ex->matching_constant(), rs.c3, cut.w, cut.z, lim.z};
    }
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<ScatteringRegion> regions{{"D0", -inf, 0.0},
                                          {"D1", 0.0, cutoff},
                                          {"D2", cutoff, restart},
                                          {"D3", restart, inf}};
    auto eval = [c, ex, lim, rs, cutoff, restart](double tau) -> WZ {
        if (tau < 0.0) return {c.w0, c.z_rate * tau};
        if (tau < cutoff) return (*ex)(tau);
        if (tau < restart) return {0.0, lim.z};
        const WZ r = rs(tau - restart);
        return {r.w, lim.z + r.z};
    };
    return ScatteringSolution(lambda,
                              ExponentialSwitch{omega0, alpha, cutoff, restart},
                              ScatteringMethod::closed_form, std::move(regions), eval);
}

/// Exponential switch-off without cutoff: constant before 0, Bessel form after.
inline ScatteringSolution exponential_tail_solution(cplx lambda, double omega0, double alpha) {
    const auto c = constant_background(lambda, omega0);
    auto ex = std::make_shared<ExponentialSolution>(lambda, omega0, alpha);
    const double inf = std::numeric_limits<double>::infinity();
    return ScatteringSolution(
        lambda, ExponentialSwitch{omega0, alpha, inf, inf}, ScatteringMethod::closed_form,
        {{"D0", -inf, 0.0}, {"D1", 0.0, inf}}, [c, ex](double tau) -> WZ {
            if (tau < 0.0) return {c.w0, c.z_rate * tau};
            return (*ex)(tau);
        });
}

/// w = w(-inf), z = z_rate * tau at the left edge of a grid.
inline WZ asymptotic_initial(const BackgroundProfile& profile, cplx lambda, double tau_begin) {
    const cplx om = profile.asymptotics().minus_infinity;
    const cplx k = spectral_k(lambda, std::abs(om));
    return {om / (2.0 * k), I * std::norm(om) / (4.0 * k) * tau_begin};
}

inline ScatteringSolution solve_riccati_ode(const BackgroundProfile& profile, cplx lambda,
                                            double tau_begin, double tau_end, WZ initial,
                                            const OdeOptions& opt = {}) {
    using State = Eigen::Matrix<cplx, 2, 1>;
    auto rhs = [&profile, lambda](double tau, const State& y) -> State {
        const cplx om = profile(tau);
        State d;
        d(0) = riccati_rhs(lambda, om, y(0));
        d(1) = zeta_rate_rhs(om, y(0));
        return d;
    };
    State y0;
    y0 << initial.w, initial.z;
    auto traj = std::make_shared<DenseTrajectory<2>>(
        integrate_dopri<2>(rhs, tau_begin, tau_end, y0, profile.breakpoints(), opt));
    return ScatteringSolution(
        lambda, profile, ScatteringMethod::ode, {{"ode", tau_begin, tau_end}},
        [traj](double tau) {
            const State y = (*traj)(tau);
            return WZ{y(0), y(1)};
        },
        tau_begin, tau_end);
}

inline ScatteringSolution solve_riccati_ode(const BackgroundProfile& profile, cplx lambda,
                                            std::span<const double> grid, WZ initial,
                                            const OdeOptions& opt = {}) {
    if (grid.size() < 2) throw ConfigError("ODE grid needs at least two points");
    return solve_riccati_ode(profile, lambda, grid.front(), grid.back(), initial, opt);
}

struct IterationOptions {
    int max_iter = 200;
    double tol = 1e-10;
};

struct IterativeResult {
    ScatteringSolution solution;
    int iterations;
    std::vector<double> history;    // sup-norm change per iteration
    std::vector<cplx> first_source; // the starting source term on the grid
};

namespace detail {

// phi1(x) = (e^x - 1)/x and phi2(x) = (e^x - 1 - x)/x^2 without cancellation.
inline void phi12(cplx x, cplx& p1, cplx& p2) {
    if (std::abs(x) < 1e-2) {
        cplx term = 1.0;
        p1 = 1.0;
        p2 = 0.5;
        for (int n = 1; n < 12; ++n) {
            term *= x;
            p1 += term / std::tgamma(n + 2.0);
            p2 += term / std::tgamma(n + 3.0);
        }
        return;
    }
    const cplx e = std::exp(x);
    p1 = (e - 1.0) / x;
    p2 = (e - 1.0 - x) / (x * x);
}

// cubic Hermite interpolation with end slopes
inline cplx hermite(double t, double h, cplx y0, cplx y1, cplx d0, cplx d1) {
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * y1 +
           (t3 - t2) * h * d1;
}

}  // namespace detail

/// Fixed-point iteration of the causal integral equation
/// w = i int_{-inf}^{tau} e^{-ik(tau - s)} wt(s) ds,
/// wt = Omega/2 + |Omega0|^2/(4k) w - Omega^* w^2 / 2, starting from wt = Omega/2.
inline IterativeResult solve_integral_iteration(const BackgroundProfile& profile, cplx lambda,
                                                std::vector<double> grid,
                                                const IterationOptions& opt = {}) {
    const std::size_t n = grid.size();
    if (n < 3) throw ConfigError("iteration grid needs at least three points");
    for (std::size_t i = 1; i < n; ++i)
        if (!(grid[i] > grid[i - 1])) throw ConfigError("iteration grid must be increasing");
    const double om0 = profile.omega_minus();
    const cplx k = spectral_k(lambda, om0);
    const cplx q = -I * k;
    if (!(q.real() < 0.0))
        throw IterationDivergedError(
            "causal kernel e^{-ik(tau-s)} does not decay (Im k >= 0); the iteration cannot converge",
            {});
    std::vector<cplx> omega(n), src(n), w(n, 0.0), wnew(n), e(n), wa(n), wb(n);
    for (std::size_t i = 0; i < n; ++i) omega[i] = profile(grid[i]);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = grid[i + 1] - grid[i];
        cplx p1, p2;
        detail::phi12(q * h, p1, p2);
        e[i] = std::exp(q * h);
        wa[i] = h * (p1 - p2);
        wb[i] = h * p2;
    }
    for (std::size_t i = 0; i < n; ++i) src[i] = 0.5 * omega[i];
    std::vector<cplx> first = src;
    std::vector<double> history;
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        // the profile is taken constant to the left of the grid
        wnew[0] = src[0] / k;
        for (std::size_t i = 0; i + 1 < n; ++i)
            wnew[i + 1] = e[i] * wnew[i] + I * (wa[i] * src[i] + wb[i] * src[i + 1]);
        double diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diff = std::max(diff, std::abs(wnew[i] - w[i]));
            if (!std::isfinite(std::abs(wnew[i]))) diff = std::numeric_limits<double>::infinity();
        }
        w.swap(wnew);
        history.push_back(diff);
        for (std::size_t i = 0; i < n; ++i)
            src[i] = 0.5 * omega[i] + om0 * om0 / (4.0 * k) * w[i] -
                     0.5 * std::conj(omega[i]) * w[i] * w[i];
        if (!std::isfinite(diff)) break;
        if (it > 0 && diff < opt.tol) break;
    }
    if (it >= opt.max_iter || !std::isfinite(history.back()))
        throw IterationDivergedError("integral-equation iteration did not converge", history);

    // z from z' = i Omega^* w / 2, starting at z_rate * tau on the left edge;
    // 3-point Gauss-Legendre per interval with Hermite-interpolated w
    auto dw = std::make_shared<std::vector<cplx>>(n);
    for (std::size_t i = 0; i < n; ++i) (*dw)[i] = riccati_rhs(lambda, omega[i], w[i]);
    auto ws = std::make_shared<std::vector<cplx>>(w);
    auto zs = std::make_shared<std::vector<cplx>>(n);
    auto gs = std::make_shared<std::vector<double>>(grid);
    const cplx zr = I * om0 * om0 / (4.0 * k);
    (*zs)[0] = zr * grid[0];
    const double gx[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
    const double gw[3] = {5.0 / 18, 8.0 / 18, 5.0 / 18};
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = grid[i + 1] - grid[i];
        cplx acc = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double tau = grid[i] + gx[j] * h;
            const cplx wi = detail::hermite(gx[j], h, w[i], w[i + 1], (*dw)[i], (*dw)[i + 1]);
            acc += gw[j] * zeta_rate_rhs(profile(tau), wi);
        }
        (*zs)[i + 1] = (*zs)[i] + h * acc;
    }
    auto dz = std::make_shared<std::vector<cplx>>(n);
    for (std::size_t i = 0; i < n; ++i) (*dz)[i] = zeta_rate_rhs(omega[i], w[i]);
    auto eval = [ws, dw, zs, dz, gs](double tau) -> WZ {
        const auto& g = *gs;
        std::size_t i = std::upper_bound(g.begin(), g.end(), tau) - g.begin();
        i = std::clamp<std::size_t>(i, 1, g.size() - 1) - 1;
        const double h = g[i + 1] - g[i];
        const double t = (tau - g[i]) / h;
        return {detail::hermite(t, h, (*ws)[i], (*ws)[i + 1], (*dw)[i], (*dw)[i + 1]),
                detail::hermite(t, h, (*zs)[i], (*zs)[i + 1], (*dz)[i], (*dz)[i + 1])};
    };
    ScatteringSolution sol(lambda, profile, ScatteringMethod::iterative,
                           {{"iterative", grid.front(), grid.back()}}, eval, grid.front(),
                           grid.back());
    return {std::move(sol), it + 1, std::move(history), std::move(first)};
}

/// Lowest-order adiabatic estimate: w = Omega/(2k),
/// z = z_rate tau + i/(4k) int_{-inf}^{tau} (|Omega|^2 - |Omega0|^2) ds.
inline WZ adiabatic_approx(const BackgroundProfile& profile, cplx lambda, double tau) {
    const double om0 = profile.omega_minus();
    const cplx k = spectral_k(lambda, om0);
    const cplx om = profile(tau);
    const auto kinks = profile.kinks();
    double integral = 0.0;
    if (!kinks.empty() && tau > kinks.front()) {
        integral = integrate_split(
            [&](double s) { return std::norm(profile(s)) - om0 * om0; }, kinks.front(), tau, kinks,
            QuadratureOptions{1e-12, 20});
    }
    return {om / (2.0 * k), I * om0 * om0 / (4.0 * k) * tau + I / (4.0 * k) * integral};
}

inline ScatteringSolution adiabatic_solution(const BackgroundProfile& profile, cplx lambda) {
    return ScatteringSolution(lambda, profile, ScatteringMethod::adiabatic,
                              {{"adiabatic", -std::numeric_limits<double>::infinity(),
                                std::numeric_limits<double>::infinity()}},
                              [profile, lambda](double tau) {
                                  return adiabatic_approx(profile, lambda, tau);
                              });
}

struct RiccatiResidual {
    double w_relative = 0.0;
    double z_relative = 0.0;
};

/// Central-difference residual of the Riccati and z equations on a grid,
/// skipping points within the stencil of a profile jump.
inline RiccatiResidual riccati_residual(const ScatteringSolution& sol, std::span<const double> grid,
                                        double h_fd = 2e-5) {
    const auto& profile = sol.profile();
    const auto jumps = profile.breakpoints();
    double rw = 0.0, rz = 0.0, sw = 0.0, sz = 0.0;
    for (double tau : grid) {
        bool near = false;
        for (double b : jumps) near = near || std::abs(tau - b) <= 1.5 * h_fd;
        if (near) continue;
        if (tau - h_fd < sol.tau_min() || tau + h_fd > sol.tau_max()) continue;
        const WZ p = sol(tau + h_fd), m = sol(tau - h_fd), c = sol(tau);
        const cplx om = profile(tau);
        const cplx dw = (p.w - m.w) / (2.0 * h_fd);
        const cplx dz = (p.z - m.z) / (2.0 * h_fd);
        rw = std::max(rw, std::abs(dw - riccati_rhs(sol.lambda(), om, c.w)));
        rz = std::max(rz, std::abs(dz - zeta_rate_rhs(om, c.w)));
        sw = std::max(sw, std::abs(sol.lambda() * c.w) + 0.5 * std::abs(om) * (1.0 + std::norm(c.w)));
        sz = std::max(sz, 0.5 * std::abs(om * c.w));
    }
    return {sw > 0 ? rw / sw : rw, sz > 0 ? rz / sz : rz};
}

}  // namespace slowlight
