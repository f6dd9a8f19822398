#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "background.hpp"
#include "errors.hpp"
#include "field_map.hpp"
#include "model.hpp"
#include "quadrature.hpp"
#include "scattering.hpp"

namespace slowlight {

/// d phi_s / d tau and d phi_s / d zeta of the slow phase.
struct PhaseRates {
    double dtau;
    double dzeta;
};

inline PhaseRates slow_phase_rates(const PhysicalParams& p, const SpectralConfig& s, cplx w) {
    const double w2 = std::norm(w);
    return {s.lambda0.imag() * w2 / (1.0 + w2), 0.5 * p.nu0 * (1.0 / (s.lambda0 - p.delta)).imag()};
}

/// Lab-frame speed (units of c) of a ridge phi(tau, zeta) = const.
inline double velocity_from_phase_rates(const PhaseRates& r) { return r.dtau / (r.dtau - r.dzeta); }

/// v/c = |w|^2 / (nu0 (1 + |w|^2) / (2 |Delta - lambda|^2) + |w|^2).
inline double group_velocity(const PhysicalParams& p, const SpectralConfig& s, cplx w) {
    const double w2 = std::norm(w);
    if (w2 == 0.0) return 0.0;
    return w2 / (p.nu0 * (1.0 + w2) / (2.0 * std::norm(p.delta - s.lambda0)) + w2);
}

/// Group velocity on the constant background.
inline double group_velocity(const PhysicalParams& p, const SpectralConfig& s) {
    return group_velocity(p, s, constant_background(s.lambda0, p.omega0).w0);
}

/// The two small-field estimates Omega0^2/(2 nu0) and Omega0^2/nu0 that appear side by side
/// in the literature; the exact velocity tends to the first.
struct SmallFieldLimits {
    double half;
    double full;
};

inline SmallFieldLimits small_field_limits(const PhysicalParams& p) {
    const double o2 = p.omega0 * p.omega0;
    return {o2 / (2.0 * p.nu0), o2 / p.nu0};
}

/// Full width at half maximum of the sech amplitude left in the medium:
/// 4 ln(2 + sqrt 3) |Delta - lambda|^2 / (nu0 |Im lambda|).
inline double memory_bit_width(const PhysicalParams& p, const SpectralConfig& s) {
    if (s.lambda0.imag() == 0.0) throw ConfigError("memory bit width needs Im lambda != 0");
    return 4.0 * std::log(2.0 + std::sqrt(3.0)) * std::norm(p.delta - s.lambda0) /
           (p.nu0 * std::abs(s.lambda0.imag()));
}

/// Level at which a sampled P2 profile must be cut to reproduce the amplitude half maximum.
inline constexpr double width_level = 0.25;

namespace detail {

inline double stopping_prefactor(const PhysicalParams& p, const SpectralConfig& s) {
    if (!(s.lambda0.imag() < 0.0))
        throw ConfigError("stopping distances need Im lambda < 0 (the soliton must decay behind the switch)");
    return 2.0 * std::norm(p.delta - s.lambda0) / (p.nu0 * std::abs(s.lambda0.imag()));
}

}  // namespace detail

/// Distance covered after an instant switch-off: |Delta - lambda|^2 ln(1 + |w0|^2) / (nu0 |Im lambda|).
inline double instant_stop_distance(const PhysicalParams& p, const SpectralConfig& s) {
    const double w2 = std::norm(constant_background(s.lambda0, p.omega0).w0);
    return 0.5 * detail::stopping_prefactor(p, s) * std::log1p(w2);
}

/// Distance covered after the exponential switch-off Omega0 e^{-alpha tau}.
inline double exponential_stop_distance(const PhysicalParams& p, const SpectralConfig& s, double alpha) {
    const double pref = detail::stopping_prefactor(p, s);
    const double w2 = std::norm(constant_background(s.lambda0, p.omega0).w0);
    const ExponentialSolution sol(s.lambda0, p.omega0, alpha);
    return pref * (0.5 * std::log1p(w2) - sol.limit().z.real());
}

struct ZsFunctionals {
    double i1;
    double i2;
};

namespace detail {

/// Interval outside which the functional integrands vanish, plus an analytic tail term for I1.
struct Support {
    double lo, hi;
    double i1_tail;
    std::vector<double> splits;
};

inline Support functional_support(const BackgroundProfile& profile) {
    const auto asym = profile.asymptotics();
    if (std::abs(asym.plus_infinity) > 1e-12)
        throw DomainError("functional integrals diverge: Omega(+inf) = " +
                          std::to_string(std::abs(asym.plus_infinity)) + " != 0");
    Support s{0.0, 0.0, 0.0, profile.kinks()};
    if (auto e = std::get_if<ExponentialSwitch>(&profile.variant())) {
        const double tail = 40.0 / e->alpha;
        if (std::isfinite(e->cutoff) && e->cutoff <= tail) {
            s.hi = e->cutoff;
        } else {
            s.hi = tail;
            s.i1_tail = -e->omega0 * e->omega0 * std::exp(-2.0 * e->alpha * tail) / (2.0 * e->alpha);
        }
    } else if (auto t = std::get_if<Tabulated>(&profile.variant())) {
        s.lo = std::min(t->tau.front(), 0.0);
        s.hi = std::max(t->tau.back(), 0.0);
        s.splits.push_back(0.0);
    }
    return s;
}

}  // namespace detail

/// I1 = -int (|Omega|^2 - Omega0^2 Theta(-tau)), I2 = int Im(Omega* dOmega/dtau).
inline ZsFunctionals zs_functionals(const BackgroundProfile& profile, const QuadratureOptions& opt = {}) {
    const auto sup = detail::functional_support(profile);
    const double o2 = profile.omega_minus() * profile.omega_minus();
    const double i1 = -integrate_split(
                          [&](double t) { return std::norm(profile(t)) - (t < 0.0 ? o2 : 0.0); },
                          sup.lo, sup.hi, sup.splits, opt) +
                      sup.i1_tail;
    const double i2 = integrate_split(
        [&](double t) { return (std::conj(profile(t)) * profile.derivative(t)).imag(); }, sup.lo, sup.hi,
        sup.splits, opt);
    return {i1, i2};
}

struct StoppingReport {
    std::string profile_kind;
    double predicted = 0.0;      // distance from the switch-off to the full stop
    double instant_limit = 0.0;  // same for an instant switch-off
    double relative = 0.0;       // functional distance predicted - instant_limit, by quadrature
    double series = 0.0;         // first two terms of the 1/k series, prefactor |Delta-lambda|^2/(2 nu0 Im lambda)
    double series_printed = 0.0; // same with the printed prefactor, twice as large
    double z_infinity = 0.0;     // Re z(+inf)
    double center = 0.0;         // imprint center for log|c2| = 0
    double width = 0.0;
    double i1 = 0.0, i2 = 0.0;
    std::optional<double> measured;
    std::optional<double> measured_width;

    /// Flat key=value block.
    std::string to_text() const {
        std::ostringstream o;
        o.precision(17);
        o << "profile=" << profile_kind << "\npredicted=" << predicted << "\ninstant_limit=" << instant_limit
          << "\nrelative=" << relative << "\nseries=" << series << "\nseries_printed=" << series_printed
          << "\nz_infinity=" << z_infinity << "\ncenter=" << center << "\nwidth=" << width
          << "\ni1=" << i1 << "\ni2=" << i2 << '\n';
        if (measured) o << "measured=" << *measured << "\ndiscrepancy=" << (*measured - predicted) << '\n';
        if (measured_width)
            o << "measured_width=" << *measured_width << "\nwidth_discrepancy=" << (*measured_width - width)
              << '\n';
        return o.str();
    }
};

/// Re z(+inf) from the scattering data of a stopping profile.
inline double z_at_infinity(const ScatteringSolution& sc) {
    const auto& prof = sc.profile();
    if (prof.holds<StepOff>()) return 0.0;
    if (auto e = std::get_if<ExponentialSwitch>(&prof.variant())) {
        if (!std::isfinite(e->cutoff))
            return ExponentialSolution(sc.lambda(), e->omega0, e->alpha).limit().z.real();
        return sc.z(e->cutoff + 1.0).real();
    }
    if (!std::isfinite(sc.tau_max())) throw DomainError("scattering data has no finite end to read z(+inf)");
    return sc.z(sc.tau_max()).real();
}

inline StoppingReport stopping_distance(const PhysicalParams& p, const SpectralConfig& s,
                                        const ScatteringSolution& sc, const QuadratureOptions& opt = {}) {
    const auto& prof = sc.profile();
    if (std::abs(prof.asymptotics().plus_infinity) != 0.0)
        throw NotStoppingError("profile " + prof.kind() + " does not vanish at +infinity");
    const double pref = detail::stopping_prefactor(p, s);
    StoppingReport r;
    r.profile_kind = prof.kind();
    const cplx w0 = sc.w_minus();
    const cplx z0 = sc.z_rate_minus();
    r.z_infinity = z_at_infinity(sc);
    r.predicted = pref * (0.5 * std::log1p(std::norm(w0)) - r.z_infinity);
    r.instant_limit = 0.5 * pref * std::log1p(std::norm(w0));
    const auto sup = detail::functional_support(prof);
    double lo = sup.lo, hi = sup.hi;
    if (!prof.holds<ExponentialSwitch>() && !prof.holds<StepOff>()) {
        lo = std::max(lo, sc.tau_min());
        hi = std::min(hi, sc.tau_max());
    }
    const double integral = integrate_split(
        [&](double t) {
            return (0.5 * I * std::conj(prof(t)) * sc.w(t) - (t < 0.0 ? z0 : cplx(0.0))).real();
        },
        lo, hi, sup.splits, opt);
    r.relative = -pref * integral;
    const auto f = zs_functionals(prof, opt);
    r.i1 = f.i1;
    r.i2 = f.i2;
    const cplx k = sc.k();
    const double sum = (f.i1 / k + f.i2 / (k * k)).imag();
    r.series = 0.25 * pref * s.lambda0.imag() / std::abs(s.lambda0.imag()) * sum;
    r.series_printed = 2.0 * r.series;
    const double kappa = 0.5 * p.nu0 * (1.0 / (s.lambda0 - p.delta)).imag();
    r.center = -(r.z_infinity + std::log(std::abs(s.c2))) / kappa;
    r.width = memory_bit_width(p, s);
    return r;
}

/// Refined maximum of sampled data: index of the largest sample plus a 3-point parabola.
struct Peak {
    double position;
    double value;
    std::size_t index;
};

inline Peak refine_peak(std::span<const double> x, std::span<const double> y, std::size_t j) {
    if (j == 0 || j + 1 >= y.size()) return {x[j], y[j], j};
    const double a = y[j - 1], b = y[j], c = y[j + 1];
    const double den = a - 2.0 * b + c;
    if (den >= 0.0) return {x[j], b, j};
    const double d = 0.5 * (a - c) / den;
    return {x[j] + d * (x[j + 1] - x[j]), b - 0.25 * (a - c) * d, j};
}

inline Peak peak_position(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty()) throw ConfigError("peak search needs matching non-empty samples");
    const auto j = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    return refine_peak(x, y, j);
}

/// Full width of a single-humped profile at fraction * max, linear interpolation at the crossings.
inline double profile_width(std::span<const double> x, std::span<const double> y, double fraction) {
    const auto pk = peak_position(x, y);
    const double level = fraction * pk.value;
    std::size_t l = pk.index, r = pk.index;
    while (l > 0 && y[l] > level) --l;
    while (r + 1 < y.size() && y[r] > level) ++r;
    if (y[l] > level || y[r] > level) throw ResolutionError("profile does not drop below the width level inside the window");
    const auto cross = [&](std::size_t i, std::size_t k) {
        return x[i] + (level - y[i]) * (x[k] - x[i]) / (y[k] - y[i]);
    };
    return cross(r - 1, r) - cross(l, l + 1);
}

inline double imprint_width(std::span<const double> zeta, std::span<const double> p2) {
    return profile_width(zeta, p2, width_level);
}

/// P2(zeta) imprint positions before and after a stop, read off sampled profiles.
struct StopMeasurement {
    double start;  // P2 peak at the switch-off
    double end;    // P2 peak after the full stop
    double displacement;
    double width;  // imprint width after the stop
};

inline StopMeasurement measure_stop(const DressedSolution& sol, const Axis& zeta, double tau_switch,
                                    double tau_final) {
    zeta.validate("zeta");
    const auto z = zeta.values();
    const auto profile = [&](double tau) {
        const auto col = sol.column(tau);
        std::vector<double> y(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) y[j] = to_sample(sol.evaluate(col, z[j])).p2;
        return y;
    };
    const auto y0 = profile(tau_switch);
    const auto y1 = profile(tau_final);
    const auto a = peak_position(z, y0), b = peak_position(z, y1);
    return {a.position, b.position, b.position - a.position, imprint_width(z, y1)};
}

struct TrajectorySample {
    double tau;
    double zeta;
    double amplitude;
};

struct SolitonTrajectory {
    std::vector<TrajectorySample> samples;
    double slope = 0.0;  // d zeta / d tau of the fit
    double slope_error = 0.0;
    double velocity = 0.0;  // lab-frame dz/dt
    double velocity_error = 0.0;
};

struct TrackOptions {
    double tau_min = -std::numeric_limits<double>::infinity();
    double tau_max = std::numeric_limits<double>::infinity();
    double zeta_min = -std::numeric_limits<double>::infinity();
    double zeta_max = std::numeric_limits<double>::infinity();
    /// A second local maximum above this fraction of the row maximum makes the row ambiguous.
    double comparable = 0.8;
    /// Central fraction of the trajectory used for the velocity fit.
    double fit_fraction = 0.6;
};

/// Per-row ridge positions and a least-squares lab-frame velocity.
inline SolitonTrajectory track_peak(const FieldMap& map, Channel channel, const TrackOptions& opt = {}) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < map.zeta.size(); ++j)
        if (map.zeta[j] >= opt.zeta_min && map.zeta[j] <= opt.zeta_max) cols.push_back(j);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < map.tau.size(); ++i)
        if (map.tau[i] >= opt.tau_min && map.tau[i] <= opt.tau_max) rows.push_back(i);
    if (cols.size() < 3 || rows.size() < 2) throw RidgeError("tracking window is too small", {});

    double gmax = -std::numeric_limits<double>::infinity(), gmin = std::numeric_limits<double>::infinity();
    for (auto i : rows)
        for (auto j : cols) {
            const double v = channel_value(map.at(i, j), channel);
            gmax = std::max(gmax, v);
            gmin = std::min(gmin, v);
        }
    if (!(gmax > 0.0) || gmax - gmin < 1e-6 * std::abs(gmax))
        throw RidgeError("no ridge: field is flat in the window", {});

    SolitonTrajectory tr;
    std::vector<double> x(cols.size()), y(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) x[j] = map.zeta[cols[j]];
    for (auto i : rows) {
        for (std::size_t j = 0; j < cols.size(); ++j) y[j] = channel_value(map.at(i, cols[j]), channel);
        const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
        if (*mx - *mn < 1e-6 * gmax) continue;
        std::vector<std::size_t> peaks;
        for (std::size_t j = 0; j < y.size(); ++j) {
            const bool left = j == 0 || y[j] >= y[j - 1];
            const bool right = j + 1 == y.size() || y[j] > y[j + 1];
            if (left && right && y[j] >= opt.comparable * *mx) peaks.push_back(j);
        }
        // merge maxima not separated by a real dip
        std::vector<std::size_t> distinct;
        for (auto j : peaks) {
            if (!distinct.empty()) {
                const auto k = distinct.back();
                const double dip = *std::min_element(y.begin() + k, y.begin() + j + 1);
                if (dip > 0.5 * std::min(y[k], y[j])) {
                    if (y[j] > y[k]) distinct.back() = j;
                    continue;
                }
            }
            distinct.push_back(j);
        }
        if (distinct.size() > 1) {
            std::vector<double> cand;
            for (auto j : distinct) cand.push_back(x[j]);
            throw RidgeError("ambiguous ridge at tau = " + std::to_string(map.tau[i]), cand);
        }
        const auto pk = refine_peak(x, y, distinct.front());
        tr.samples.push_back({map.tau[i], pk.position, pk.value});
    }
    if (tr.samples.size() < 2) throw RidgeError("no ridge: fewer than two rows carry a peak", {});

    const std::size_t n = tr.samples.size();
    const auto skip = static_cast<std::size_t>(std::floor(0.5 * (1.0 - opt.fit_fraction) * n));
    const std::size_t b = std::min(skip, (n - 2) / 2), e = n - b;
    double st = 0, sz = 0, stt = 0, stz = 0;
    const double m = double(e - b);
    for (std::size_t k = b; k < e; ++k) {
        st += tr.samples[k].tau;
        sz += tr.samples[k].zeta;
        stt += tr.samples[k].tau * tr.samples[k].tau;
        stz += tr.samples[k].tau * tr.samples[k].zeta;
    }
    const double den = m * stt - st * st;
    if (!(den > 0.0)) throw RidgeError("ridge samples share a single tau", {});
    tr.slope = (m * stz - st * sz) / den;
    const double icpt = (sz - tr.slope * st) / m;
    double ss = 0;
    for (std::size_t k = b; k < e; ++k) {
        const double res = tr.samples[k].zeta - icpt - tr.slope * tr.samples[k].tau;
        ss += res * res;
    }
    tr.slope_error = m > 2 ? std::sqrt(ss / (m - 2) * m / den) : 0.0;
    tr.velocity = lab_speed_from_slope(tr.slope);
    tr.velocity_error = tr.slope_error / ((1.0 + tr.slope) * (1.0 + tr.slope));
    return tr;
}

}  // namespace slowlight
