#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <cmath>
// Boost 1.74's pchip calls isnan unqualified on plain doubles
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>

#include "errors.hpp"
#include "model.hpp"

namespace slowlight {

/// Unit step with the midpoint convention at the jump.
inline double heaviside(double x) {
    if (x > 0.0) return 1.0;
    if (x < 0.0) return 0.0;
    return 0.5;
}

inline constexpr double infinite_time = std::numeric_limits<double>::infinity();

struct ConstantField {
    double omega0 = 3.0;
    double k_phase = 0.0;  // spatial phase e^{ik zeta}, consumed by the dressing only
};

/// Omega0 before tau = 0, exponential decay with rate alpha up to the cutoff,
/// zero until the restart, Omega0 again afterwards. The cutoff and restart may
/// be infinite.
struct ExponentialSwitch {
    double omega0 = 3.0;
    double alpha = 4.0;
    double cutoff = 1.0;
    double restart = 4.0;
};

struct StepOff {
    double omega0 = 3.0;
};

struct Tabulated {
    std::vector<double> tau;
    std::vector<cplx> omega;
    std::optional<cplx> left, right;  // values outside the sample range
};

struct Asymptotics {
    cplx minus_infinity;
    cplx plus_infinity;
};

class BackgroundProfile {
public:
    using Variant = std::variant<ConstantField, ExponentialSwitch, StepOff, Tabulated>;

    BackgroundProfile() : BackgroundProfile(ConstantField{}) {}

    BackgroundProfile(ConstantField c) : v_(c) {  // NOLINT(google-explicit-constructor)
        if (!(c.omega0 >= 0.0)) throw ConfigError("constant background needs omega0 >= 0");
    }

    BackgroundProfile(ExponentialSwitch e) : v_(e) {  // NOLINT(google-explicit-constructor)
        if (!(e.alpha > 0.0)) throw ConfigError("exponential switch needs alpha > 0");
        if (!(e.cutoff > 0.0)) throw ConfigError("exponential switch needs cutoff time > 0");
        if (!(e.restart > e.cutoff) && !(std::isinf(e.restart) && std::isinf(e.cutoff)))
            throw ConfigError("exponential switch needs cutoff time < restart time");
        if (!(e.omega0 >= 0.0)) throw ConfigError("exponential switch needs omega0 >= 0");
    }

    BackgroundProfile(StepOff s) : v_(s) {  // NOLINT(google-explicit-constructor)
        if (!(s.omega0 >= 0.0)) throw ConfigError("step-off needs omega0 >= 0");
    }

    BackgroundProfile(Tabulated t) : v_(std::move(t)) {  // NOLINT(google-explicit-constructor)
        auto& tab = std::get<Tabulated>(v_);
        if (tab.tau.size() != tab.omega.size())
            throw ConfigError("tabulated profile: tau and omega sizes differ");
        if (tab.tau.size() < 4) throw ConfigError("tabulated profile needs at least 4 samples");
        for (std::size_t i = 1; i < tab.tau.size(); ++i)
            if (!(tab.tau[i] > tab.tau[i - 1]))
                throw ConfigError("tabulated profile: tau samples must be strictly increasing");
        if (tab.left && std::abs(*tab.left - tab.omega.front()) > 1e-9)
            throw ConfigError("tabulated profile: left asymptote differs from first sample");
        if (tab.right && std::abs(*tab.right - tab.omega.back()) > 1e-9)
            throw ConfigError("tabulated profile: right asymptote differs from last sample");
        std::vector<double> re, im;
        for (auto w : tab.omega) {
            re.push_back(w.real());
            im.push_back(w.imag());
        }
        using boost::math::interpolators::pchip;
        interp_ = std::make_shared<Interp>(Interp{
            pchip<std::vector<double>>(std::vector<double>(tab.tau), std::move(re)),
            pchip<std::vector<double>>(std::vector<double>(tab.tau), std::move(im))});
    }

    const Variant& variant() const { return v_; }

    template <class T>
    bool holds() const {
        return std::holds_alternative<T>(v_);
    }

    std::string kind() const {
        switch (v_.index()) {
            case 0: return "constant";
            case 1: return "exponential_switch";
            case 2: return "step_off";
            default: return "tabulated";
        }
    }

    cplx operator()(double tau) const { return eval(tau); }

    cplx eval(double tau) const {
        return std::visit(
            [&](const auto& p) -> cplx {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, ConstantField>) {
                    return p.omega0;
                } else if constexpr (std::is_same_v<T, ExponentialSwitch>) {
                    double v = heaviside(-tau) + heaviside(tau - p.restart);
                    // the tail factor overflows for very negative tau, where it is switched off anyway
                    if (tau >= 0.0)
                        v += std::exp(-p.alpha * tau) * (heaviside(tau) - heaviside(tau - p.cutoff));
                    return p.omega0 * v;
                } else if constexpr (std::is_same_v<T, StepOff>) {
                    return p.omega0 * heaviside(-tau);
                } else {
                    return eval_tabulated(p, tau);
                }
            },
            v_);
    }

    /// d Omega / d tau away from jump points.
    cplx derivative(double tau) const {
        return std::visit(
            [&](const auto& p) -> cplx {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, ExponentialSwitch>) {
                    if (tau > 0.0 && tau < p.cutoff)
                        return -p.alpha * p.omega0 * std::exp(-p.alpha * tau);
                    return 0.0;
                } else if constexpr (std::is_same_v<T, Tabulated>) {
                    if (tau < p.tau.front() || tau > p.tau.back()) return 0.0;
                    return {interp_->re.prime(tau), interp_->im.prime(tau)};
                } else {
                    return 0.0;
                }
            },
            v_);
    }

    Asymptotics asymptotics() const {
        return std::visit(
            [&](const auto& p) -> Asymptotics {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, ConstantField>) {
                    return {p.omega0, p.omega0};
                } else if constexpr (std::is_same_v<T, ExponentialSwitch>) {
                    if (std::isfinite(p.restart)) return {p.omega0, p.omega0};
                    return {p.omega0, 0.0};
                } else if constexpr (std::is_same_v<T, StepOff>) {
                    return {p.omega0, 0.0};
                } else {
                    return {p.left.value_or(p.omega.front()), p.right.value_or(p.omega.back())};
                }
            },
            v_);
    }

    /// |Omega(-inf)|, the background amplitude the scattering data is built on.
    double omega_minus() const { return std::abs(asymptotics().minus_infinity); }

    /// Jump locations (finite ones only).
    std::vector<double> breakpoints() const {
        return std::visit(
            [&](const auto& p) -> std::vector<double> {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, ExponentialSwitch>) {
                    std::vector<double> b{0.0};
                    if (std::isfinite(p.cutoff)) b.push_back(p.cutoff);
                    if (std::isfinite(p.restart)) b.push_back(p.restart);
                    return b;
                } else if constexpr (std::is_same_v<T, StepOff>) {
                    return {0.0};
                } else {
                    return {};
                }
            },
            v_);
    }

    /// Points where the profile is continuous but not smooth; quadratures split there.
    std::vector<double> kinks() const {
        auto b = breakpoints();
        if (auto t = std::get_if<Tabulated>(&v_)) {
            b.push_back(t->tau.front());
            b.push_back(t->tau.back());
        }
        std::sort(b.begin(), b.end());
        return b;
    }

    bool is_real() const {
        if (auto t = std::get_if<Tabulated>(&v_)) {
            return std::all_of(t->omega.begin(), t->omega.end(),
                               [](cplx w) { return w.imag() == 0.0; });
        }
        return true;
    }

    double k_phase() const {
        if (auto c = std::get_if<ConstantField>(&v_)) return c->k_phase;
        return 0.0;
    }

private:
    struct Interp {
        boost::math::interpolators::pchip<std::vector<double>> re, im;
    };

    cplx eval_tabulated(const Tabulated& t, double tau) const {
        if (tau < t.tau.front()) {
            if (!t.left) throw DomainError("tau below tabulated range with no left asymptote");
            return *t.left;
        }
        if (tau > t.tau.back()) {
            if (!t.right) throw DomainError("tau above tabulated range with no right asymptote");
            return *t.right;
        }
        return {interp_->re(tau), interp_->im(tau)};
    }

    Variant v_;
    std::shared_ptr<const Interp> interp_;
};

/// Reads `tau re [im]` lines, `#` starts a comment. With extend_flat the end
/// samples serve as the asymptotes.
inline BackgroundProfile load_tabulated_profile(const std::string& path, bool extend_flat = true) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open tabulated profile '" + path + "'");
    Tabulated t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        std::istringstream ss(line);
        double tau, re, im = 0.0;
        if (!(ss >> tau)) continue;
        if (!(ss >> re))
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'tau re [im]'");
        if (!(ss >> im)) im = 0.0;
        std::string extra;
        if (ss >> extra)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": too many columns");
        t.tau.push_back(tau);
        t.omega.emplace_back(re, im);
    }
    if (extend_flat && !t.omega.empty()) {
        t.left = t.omega.front();
        t.right = t.omega.back();
    }
    return BackgroundProfile(std::move(t));
}

}  // namespace slowlight
