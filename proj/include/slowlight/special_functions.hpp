#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "errors.hpp"
#include "model.hpp"

namespace slowlight {

namespace detail {

// Lanczos approximation, g = 7, n = 9.
inline constexpr double lanczos_g = 7.0;
inline constexpr double lanczos_coef[9] = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

inline cplx gamma_right_half(cplx z) {
    z -= 1.0;
    cplx x = lanczos_coef[0];
    for (int i = 1; i < 9; ++i) x += lanczos_coef[i] / (z + double(i));
    const cplx t = z + lanczos_g + 0.5;
    return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, z + 0.5) * std::exp(-t) * x;
}

inline bool is_nonpositive_integer(cplx z) {
    return z.imag() == 0.0 && z.real() <= 0.0 && std::floor(z.real()) == z.real();
}

}  // namespace detail

/// Complex Gamma function. Poles at non-positive integers raise DomainError.
inline cplx complex_gamma(cplx z) {
    if (detail::is_nonpositive_integer(z)) throw DomainError("Gamma pole at non-positive integer");
    if (z.real() < 0.5) {
        const double pi = std::numbers::pi;
        return pi / (std::sin(pi * z) * detail::gamma_right_half(1.0 - z));
    }
    return detail::gamma_right_half(z);
}

/// 1/Gamma(z), entire; exactly zero at the non-positive integers.
inline cplx reciprocal_gamma(cplx z) {
    if (detail::is_nonpositive_integer(z)) return 0.0;
    if (z.real() < 0.5) {
        const double pi = std::numbers::pi;
        return std::sin(pi * z) * detail::gamma_right_half(1.0 - z) / pi;
    }
    return 1.0 / detail::gamma_right_half(z);
}

/// Logarithm with arg in (-pi, pi]; negative reals (either sign of zero
/// imaginary part) get arg = +pi.
inline cplx principal_log(cplx x) {
    if (x.imag() == 0.0 && x.real() < 0.0) return {std::log(-x.real()), std::numbers::pi};
    return std::log(x);
}

/// (x/2)^nu on the principal branch used for the Bessel functions.
inline cplx half_power(cplx x, cplx nu) {
    if (x == 0.0) {
        if (nu == 0.0) return 1.0;
        if (nu.real() > 0.0) return 0.0;
        throw DomainError("(x/2)^nu is singular at x = 0 for Re nu <= 0");
    }
    return std::exp(nu * principal_log(0.5 * x));
}

struct BesselOptions {
    /// Series truncation: stop when a term falls below tolerance * |partial sum|.
    double tolerance = 1e-18;
    int max_terms = 600;
    double max_argument = 50.0;
};

/// Entire part of J_nu: sum_m (-x^2/4)^m / (m! Gamma(nu + m + 1)),
/// so that J_nu(x) = (x/2)^nu * bessel_series_core(nu, x).
inline cplx bessel_series_core(cplx nu, cplx x, const BesselOptions& opt = {}) {
    if (std::abs(x) > opt.max_argument)
        throw DomainError("Bessel series argument |x| = " + std::to_string(std::abs(x)) +
                          " exceeds the series regime");
    using lcplx = std::complex<long double>;
    const lcplx q = -lcplx(x) * lcplx(x) / 4.0L;
    const lcplx lnu(nu);

    lcplx r = lcplx(reciprocal_gamma(nu + 1.0));  // 1/Gamma(nu + m + 1)
    lcplx p = 1.0L;                                // q^m / m!
    lcplx sum = r;
    const double pole_span = std::abs(nu) + 2.0;
    const double peak = std::abs(x) / 2.0 + 2.0;
    for (int m = 1; m <= opt.max_terms; ++m) {
        const lcplx denom = lnu + static_cast<long double>(m);
        if (denom == lcplx(0.0L)) {
            r = lcplx(reciprocal_gamma(nu + double(m) + 1.0));
        } else {
            r /= denom;
        }
        p *= q / static_cast<long double>(m);
        const lcplx term = p * r;
        sum += term;
        if (m > pole_span && m > peak) {
            const long double at = std::abs(term), as = std::abs(sum);
            if (at <= opt.tolerance * as || (as == 0.0L && at == 0.0L)) return cplx(sum);
        }
    }
    throw NumericError("Bessel series did not converge for order " + std::to_string(nu.real()) +
                       (nu.imag() >= 0 ? "+" : "") + std::to_string(nu.imag()) + "i");
}

/// Bessel function of the first kind for complex order and argument.
inline cplx bessel_j(cplx nu, cplx x, const BesselOptions& opt = {}) {
    const cplx core = bessel_series_core(nu, x, opt);
    if (x == 0.0) {
        if (core == 0.0) return 0.0;
        return half_power(x, nu) * core;
    }
    return half_power(x, nu) * core;
}

/// Max relative residual of J_{nu-1} + J_{nu+1} = (2 nu / x) J_nu.
inline double bessel_recurrence_residual(cplx nu, cplx x, const BesselOptions& opt = {}) {
    const cplx jm = bessel_j(nu - 1.0, x, opt);
    const cplx jp = bessel_j(nu + 1.0, x, opt);
    const cplx j0 = bessel_j(nu, x, opt);
    const cplx rhs = 2.0 * nu / x * j0;
    const double scale = std::max({std::abs(jm), std::abs(jp), std::abs(rhs)});
    return std::abs(jm + jp - rhs) / scale;
}

}  // namespace slowlight
