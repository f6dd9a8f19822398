#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "model.hpp"

namespace slowlight {

struct QuadratureOptions {
    double abs_tol = 1e-9;
    unsigned max_depth = 20;
};

/// Adaptive Gauss-Kronrod over [a, b], split at the interior points given so
/// that kinks and jumps sit on panel edges.
template <class F>
auto integrate_split(F&& f, double a, double b, std::vector<double> splits = {},
                     const QuadratureOptions& opt = {}) {
    using R = decltype(f(a));
    R total{};
    if (a == b) return total;
    const double sign = b > a ? 1.0 : -1.0;
    const double lo = std::min(a, b), hi = std::max(a, b);
    splits.erase(std::remove_if(splits.begin(), splits.end(),
                                [&](double s) { return !(s > lo && s < hi); }),
                 splits.end());
    std::sort(splits.begin(), splits.end());
    splits.insert(splits.begin(), lo);
    splits.push_back(hi);
    const std::size_t panels = splits.size() - 1;
    for (std::size_t i = 0; i < panels; ++i) {
        double err = 0.0;
        const double tol = opt.abs_tol / double(panels);
        // relative tolerance handed to boost; the absolute target is met by scaling with the width
        const double width = splits[i + 1] - splits[i];
        if (width <= 0.0) continue;
        total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
            f, splits[i], splits[i + 1], opt.max_depth, std::max(tol / width, 1e-14), &err);
    }
    return R(sign * total);
}

}  // namespace slowlight
