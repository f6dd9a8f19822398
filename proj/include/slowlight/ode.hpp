#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "model.hpp"

namespace slowlight {

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-10;
    double initial_step = 1e-3;
    double max_step = 0.25;
    /// Magnitude treated as a blow-up (a pole of the solution).
    double blowup_norm = 1e10;
    long max_steps = 2'000'000;
};

/// Dormand-Prince 5(4) solution with the continuous extension of every
/// accepted step kept, so it can be evaluated anywhere in [t_begin, t_end].
template <int N>
class DenseTrajectory {
public:
    using State = Eigen::Matrix<cplx, N, 1>;

    struct Step {
        double t0, h;
        State r1, r2, r3, r4, r5;
    };

    double t_begin() const { return steps_.front().t0; }
    double t_end() const { return steps_.back().t0 + steps_.back().h; }
    std::size_t step_count() const { return steps_.size(); }
    const std::vector<Step>& steps() const { return steps_; }

    State operator()(double t) const {
        if (t < t_begin() || t > t_end())
            throw DomainError("dense output requested outside the integrated range");
        // first step whose start is > t, then back one; a step starting exactly at t wins
        auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                                   [](double v, const Step& s) { return v < s.t0; });
        if (it != steps_.begin()) --it;
        const Step& s = *it;
        const double th = (t - s.t0) / s.h;
        const double th1 = 1.0 - th;
        return s.r1 + th * (s.r2 + th1 * (s.r3 + th * (s.r4 + th1 * s.r5)));
    }

    void push(Step s) { steps_.push_back(std::move(s)); }

private:
    std::vector<Step> steps_;
};

namespace detail {

struct Dopri {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                            a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432.0,
                            d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0,
                            d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

}  // namespace detail

/// Integrates y' = f(t, y) forward from t0 to t1. The right-hand side may jump
/// at the given stop times; the integrator lands on each and restarts there.
template <int N, class F>
DenseTrajectory<N> integrate_dopri(F&& f, double t0, double t1,
                                   Eigen::Matrix<cplx, N, 1> y, std::vector<double> stops = {},
                                   const OdeOptions& opt = {}) {
    using State = Eigen::Matrix<cplx, N, 1>;
    using C = detail::Dopri;
    if (!(t1 > t0)) throw ConfigError("ODE range must be increasing");
    stops.erase(std::remove_if(stops.begin(), stops.end(),
                               [&](double s) { return !(s > t0 && s < t1); }),
                stops.end());
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
    stops.push_back(t1);

    DenseTrajectory<N> out;
    double t = t0;
    double h = std::min(opt.initial_step, opt.max_step);
    long nsteps = 0;
    for (double stop : stops) {
        // the right-hand side is sampled strictly inside the smooth segment so
        // jumps at its ends are seen as one-sided limits
        const double seg_lo = t, seg_hi = stop;
        auto rhs = [&](double tt, const State& yy) -> State {
            if (tt <= seg_lo) tt = std::nextafter(seg_lo, seg_hi);
            if (tt >= seg_hi) tt = std::nextafter(seg_hi, seg_lo);
            return f(tt, yy);
        };
        State k1 = rhs(t, y);
        while (t < stop) {
            if (++nsteps > opt.max_steps) throw BlowUpError("ODE step budget exhausted", t);
            const bool last = t + h >= stop;
            const double ht = last ? stop - t : h;
            const State k2 = rhs(t + C::c2 * ht, y + ht * (C::a21 * k1));
            const State k3 = rhs(t + C::c3 * ht, y + ht * (C::a31 * k1 + C::a32 * k2));
            const State k4 =
                rhs(t + C::c4 * ht, y + ht * (C::a41 * k1 + C::a42 * k2 + C::a43 * k3));
            const State k5 = rhs(t + C::c5 * ht, y + ht * (C::a51 * k1 + C::a52 * k2 +
                                                           C::a53 * k3 + C::a54 * k4));
            const State k6 = rhs(t + ht, y + ht * (C::a61 * k1 + C::a62 * k2 + C::a63 * k3 +
                                                   C::a64 * k4 + C::a65 * k5));
            const State y1 = y + ht * (C::a71 * k1 + C::a73 * k3 + C::a74 * k4 + C::a75 * k5 +
                                       C::a76 * k6);
            const State k7 = rhs(t + ht, y1);
            const State err = ht * (C::e1 * k1 + C::e3 * k3 + C::e4 * k4 + C::e5 * k5 +
                                    C::e6 * k6 + C::e7 * k7);
            double en = 0.0;
            for (int i = 0; i < N; ++i) {
                const double sc = opt.atol + opt.rtol * std::max(std::abs(y(i)), std::abs(y1(i)));
                en = std::max(en, std::abs(err(i)) / sc);
            }
            if (!std::isfinite(en)) en = 1e10;
            const double fac = std::clamp(0.9 * std::pow(std::max(en, 1e-12), -0.2), 0.2, 5.0);
            if (en <= 1.0) {
                typename DenseTrajectory<N>::Step s;
                s.t0 = t;
                s.h = ht;
                const State ydiff = y1 - y;
                const State bspl = ht * k1 - ydiff;
                s.r1 = y;
                s.r2 = ydiff;
                s.r3 = bspl;
                s.r4 = ydiff - ht * k7 - bspl;
                s.r5 = ht * (C::d1 * k1 + C::d3 * k3 + C::d4 * k4 + C::d5 * k5 + C::d6 * k6 +
                             C::d7 * k7);
                out.push(std::move(s));
                t = last ? stop : t + ht;
                y = y1;
                k1 = k7;
                if (y.norm() > opt.blowup_norm)
                    throw BlowUpError("solution magnitude exceeded blow-up threshold", t);
                if (!last) h = std::min(ht * fac, opt.max_step);
            } else {
                h = ht * fac;
                if (h < 1e-12 * std::max(1.0, std::abs(t)))
                    throw BlowUpError("ODE step size underflow near a singularity", t);
            }
        }
    }
    return out;
}

}  // namespace slowlight
