#pragma once

// Finite-difference verification of Maxwell-Bloch solutions. Nothing here uses the
// analytic machinery: candidates come in as plain callables.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "parallel.hpp"

namespace slowlight {

struct OracleGrid {
    double tau_begin = 0.0, tau_end = 0.0, h_tau = 0.0;
    double zeta_begin = 0.0, zeta_end = 0.0, h_zeta = 0.0;
    int level = 0;

    static int count(double a, double b, double h, const char* name) {
        if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError(std::string(name) + " step must be positive");
        if (!(b > a)) throw ConfigError(std::string(name) + " range must have end > begin");
        const double n = (b - a) / h;
        if (std::abs(n - std::round(n)) > 1e-8 * std::max(1.0, n))
            throw ConfigError(std::string(name) + " step does not divide the range");
        return static_cast<int>(std::llround(n)) + 1;
    }
    int tau_points() const { return count(tau_begin, tau_end, h_tau, "tau"); }
    int zeta_points() const { return count(zeta_begin, zeta_end, h_zeta, "zeta"); }
    void validate() const {
        tau_points();
        zeta_points();
    }
    double tau(int i) const { return tau_begin + i * h_tau; }
    double zeta(int j) const { return zeta_begin + j * h_zeta; }

    /// Both steps halved.
    OracleGrid refined() const {
        OracleGrid g = *this;
        g.h_tau *= 0.5;
        g.h_zeta *= 0.5;
        ++g.level;
        return g;
    }
};

/// Fields and medium state at one point.
struct MbPoint {
    cplx omega_a;
    cplx omega_b;
    Mat3 rho;
};

using MbField = std::function<MbPoint(double tau, double zeta)>;

struct EquationResidual {
    std::string equation;
    double sup = 0.0;
    double l2 = 0.0;  // area-weighted
    /// sup of the residual over sup of the equation's right-hand side.
    double relative = 0.0;
};

struct ResidualLevel {
    double h_tau = 0.0, h_zeta = 0.0;
    std::vector<EquationResidual> equations;

    double sup() const {
        double m = 0.0;
        for (const auto& e : equations) m = std::max(m, e.sup);
        return m;
    }
    const EquationResidual& operator[](const std::string& name) const {
        for (const auto& e : equations)
            if (e.equation == name) return e;
        throw ConfigError("no residual named '" + name + "'");
    }
};

struct ResidualReport {
    std::vector<ResidualLevel> levels;
    /// orders[k][e]: sup-norm order between levels k and k+1 for equation e. Empty below 3 levels.
    std::vector<std::vector<double>> orders;
    /// Order of the largest residual between consecutive levels. Empty below 3 levels.
    std::vector<double> total_orders;

    const ResidualLevel& finest() const { return levels.back(); }

    double min_total_order() const {
        if (total_orders.empty()) return std::numeric_limits<double>::quiet_NaN();
        return *std::min_element(total_orders.begin(), total_orders.end());
    }
    double min_order(const std::string& name) const {
        if (orders.empty()) return std::numeric_limits<double>::quiet_NaN();
        std::size_t e = 0;
        while (e < levels.front().equations.size() && levels.front().equations[e].equation != name) ++e;
        if (e == levels.front().equations.size()) throw ConfigError("no residual named '" + name + "'");
        double m = std::numeric_limits<double>::infinity();
        for (const auto& o : orders) m = std::min(m, o[e]);
        return m;
    }
    /// The residual does not converge: it plateaus or grows under refinement.
    bool flagged() const { return !total_orders.empty() && total_orders.back() < 1.0; }
};

namespace detail {

inline double order_between(double coarse, double fine, double ratio) {
    if (coarse == 0.0 && fine == 0.0) return std::numeric_limits<double>::infinity();
    return std::log(coarse / fine) / std::log(ratio);
}

inline void fill_orders(ResidualReport& r) {
    if (r.levels.size() < 3) return;
    for (std::size_t k = 0; k + 1 < r.levels.size(); ++k) {
        const auto& a = r.levels[k];
        const auto& b = r.levels[k + 1];
        const double ratio = a.h_tau / b.h_tau;
        std::vector<double> o;
        for (std::size_t e = 0; e < a.equations.size(); ++e)
            o.push_back(order_between(a.equations[e].sup, b.equations[e].sup, ratio));
        r.orders.push_back(std::move(o));
        r.total_orders.push_back(order_between(a.sup(), b.sup(), ratio));
    }
}

/// Accumulates sup and area-weighted L2 norms of one equation.
struct Norm {
    double sup = 0.0, sum = 0.0, scale = 0.0;
    void add(double v, double rhs) {
        sup = std::max(sup, v);
        sum += v * v;
        scale = std::max(scale, rhs);
    }
    void merge(const Norm& o) {
        sup = std::max(sup, o.sup);
        sum += o.sum;
        scale = std::max(scale, o.scale);
    }
    EquationResidual finish(std::string name, double area) const {
        return {std::move(name), sup, std::sqrt(sum * area), scale > 0.0 ? sup / scale : sup};
    }
};

/// The candidate sampled on every grid point, rows by tau.
struct Samples {
    int nt = 0, nz = 0;
    std::vector<MbPoint> data;
    const MbPoint& at(int i, int j) const { return data[static_cast<std::size_t>(i) * nz + j]; }
};

inline Samples sample(const MbField& f, const OracleGrid& g) {
    Samples s{g.tau_points(), g.zeta_points(), {}};
    s.data.resize(static_cast<std::size_t>(s.nt) * s.nz);
    parallel_rows(s.nt, [&](int i) {
        for (int j = 0; j < s.nz; ++j) s.data[static_cast<std::size_t>(i) * s.nz + j] = f(g.tau(i), g.zeta(j));
    });
    return s;
}

/// Row-parallel accumulation of per-equation norms over interior points.
template <class Point>
std::vector<Norm> interior_norms(const Samples& s, std::size_t equations, Point&& point) {
    std::vector<std::vector<Norm>> rows(s.nt, std::vector<Norm>(equations));
    parallel_rows(s.nt, [&](int i) {
        if (i == 0 || i == s.nt - 1) return;
        for (int j = 1; j < s.nz - 1; ++j) point(i, j, rows[i]);
    });
    std::vector<Norm> total(equations);
    for (const auto& r : rows)
        for (std::size_t e = 0; e < equations; ++e) total[e].merge(r[e]);
    return total;
}

inline Mat3 liouville_rhs(const PhysicalParams& p, cplx oa, cplx ob, const Mat3& rho) {
    const Mat3 h = 0.5 * p.delta * level_signature() - interaction_hamiltonian(oa, ob);
    return I * (h * rho - rho * h);
}

inline Mat3 hermitize(const Mat3& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace detail

struct ResidualOptions {
    /// Narrowest feature of the candidate; the grid must put at least 8 points across it.
    double feature_width = 0.0;
    int levels = 3;
};

namespace detail {

inline void check_resolution(const OracleGrid& g, const ResidualOptions& opt) {
    if (opt.levels < 1) throw ConfigError("residual study needs at least one level");
    g.validate();
    const double h = std::max(g.h_tau, g.h_zeta);
    if (opt.feature_width > 0.0 && opt.feature_width / h < 8.0)
        throw ResolutionError("grid too coarse: " + std::to_string(opt.feature_width / h) +
                              " points across the narrowest feature, need 8");
}

}  // namespace detail

/// Maxwell and Liouville residuals of a candidate by second-order central differences:
///   d Omega_a/d zeta = i nu0 rho_31,  d Omega_b/d zeta = i nu0 rho_32,
///   d rho/d tau = i [Delta D/2 - H_I, rho].
inline ResidualReport nonlinear_residual(const MbField& candidate, const PhysicalParams& p, const OracleGrid& grid,
                                         const ResidualOptions& opt = {}) {
    detail::check_resolution(grid, opt);
    static const char* names[] = {"maxwell_a", "maxwell_b", "liouville_11", "liouville_22",
                                  "liouville_33", "liouville_12", "liouville_13", "liouville_23"};
    static const int idx[][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};
    ResidualReport rep;
    OracleGrid g = grid;
    for (int level = 0; level < opt.levels; ++level, g = g.refined()) {
        const auto s = detail::sample(candidate, g);
        const auto norms = detail::interior_norms(s, 8, [&](int i, int j, std::vector<detail::Norm>& n) {
            const auto& c = s.at(i, j);
            const auto& zp = s.at(i, j + 1);
            const auto& zm = s.at(i, j - 1);
            const double hz2 = 2.0 * g.h_zeta;
            const cplx fa = I * p.nu0 * c.rho(2, 0), fb = I * p.nu0 * c.rho(2, 1);
            n[0].add(std::abs((zp.omega_a - zm.omega_a) / hz2 - fa), std::abs(fa));
            n[1].add(std::abs((zp.omega_b - zm.omega_b) / hz2 - fb), std::abs(fb));
            const Mat3 f = detail::liouville_rhs(p, c.omega_a, c.omega_b, c.rho);
            const Mat3 dr = (s.at(i + 1, j).rho - s.at(i - 1, j).rho) / (2.0 * g.h_tau) - f;
            for (int e = 0; e < 6; ++e)
                n[2 + e].add(std::abs(dr(idx[e][0], idx[e][1])), std::abs(f(idx[e][0], idx[e][1])));
        });
        ResidualLevel lv{g.h_tau, g.h_zeta, {}};
        for (int e = 0; e < 8; ++e) lv.equations.push_back(norms[e].finish(names[e], g.h_tau * g.h_zeta));
        rep.levels.push_back(std::move(lv));
    }
    detail::fill_orders(rep);
    return rep;
}

/// U(lambda) = i lambda D/2 - i H_I and V(lambda) = i nu0 rho / (2 (lambda - Delta)) built from samples.
inline Mat3 lax_u(cplx lambda, cplx oa, cplx ob) {
    return 0.5 * I * lambda * level_signature() - I * interaction_hamiltonian(oa, ob);
}
inline Mat3 lax_v(const PhysicalParams& p, cplx lambda, const Mat3& rho) {
    return 0.5 * I * p.nu0 / (lambda - p.delta) * rho;
}

/// Sup and L2 of U_zeta - V_tau + [U, V] at each probe lambda.
inline ResidualReport zero_curvature_residual(const MbField& candidate, const PhysicalParams& p,
                                              const std::vector<cplx>& probes, const OracleGrid& grid,
                                              const ResidualOptions& opt = {}) {
    if (probes.size() < 2) throw ConfigError("zero-curvature check needs at least two probe values");
    for (std::size_t a = 0; a < probes.size(); ++a) {
        if (probes[a] == cplx(p.delta)) throw DomainError("probe lambda sits on the pole lambda = Delta");
        for (std::size_t b = 0; b < a; ++b)
            if (probes[a] == probes[b]) throw ConfigError("probe values must be distinct");
    }
    detail::check_resolution(grid, opt);
    ResidualReport rep;
    OracleGrid g = grid;
    for (int level = 0; level < opt.levels; ++level, g = g.refined()) {
        const auto s = detail::sample(candidate, g);
        const auto norms = detail::interior_norms(s, probes.size(), [&](int i, int j, std::vector<detail::Norm>& n) {
            const auto& c = s.at(i, j);
            for (std::size_t k = 0; k < probes.size(); ++k) {
                const cplx l = probes[k];
                const Mat3 uz = (lax_u(l, s.at(i, j + 1).omega_a, s.at(i, j + 1).omega_b) -
                                 lax_u(l, s.at(i, j - 1).omega_a, s.at(i, j - 1).omega_b)) /
                                (2.0 * g.h_zeta);
                const Mat3 vt = (lax_v(p, l, s.at(i + 1, j).rho) - lax_v(p, l, s.at(i - 1, j).rho)) / (2.0 * g.h_tau);
                const Mat3 u = lax_u(l, c.omega_a, c.omega_b);
                const Mat3 v = lax_v(p, l, c.rho);
                const Mat3 comm = u * v - v * u;
                n[k].add((uz - vt + comm).cwiseAbs().maxCoeff(), comm.cwiseAbs().maxCoeff());
            }
        });
        ResidualLevel lv{g.h_tau, g.h_zeta, {}};
        for (std::size_t k = 0; k < probes.size(); ++k)
            lv.equations.push_back(norms[k].finish(
                "zero_curvature(" + std::to_string(probes[k].real()) + "," + std::to_string(probes[k].imag()) + ")",
                g.h_tau * g.h_zeta));
        rep.levels.push_back(std::move(lv));
    }
    detail::fill_orders(rep);
    return rep;
}

using MatrixField = std::function<Mat3(double tau, double zeta)>;

/// Residuals of d Phi/d tau = U Phi and d Phi/d zeta = V Phi for a candidate solution Phi
/// of the linear pair on the given seed.
inline ResidualReport linear_solution_residual(const MatrixField& phi, const MbField& seed, const PhysicalParams& p,
                                               cplx lambda, const OracleGrid& grid, const ResidualOptions& opt = {}) {
    if (lambda == cplx(p.delta)) throw DomainError("lambda sits on the pole lambda = Delta");
    detail::check_resolution(grid, opt);
    ResidualReport rep;
    OracleGrid g = grid;
    for (int level = 0; level < opt.levels; ++level, g = g.refined()) {
        const int nt = g.tau_points(), nz = g.zeta_points();
        std::vector<Mat3> f(static_cast<std::size_t>(nt) * nz);
        parallel_rows(nt, [&](int i) {
            for (int j = 0; j < nz; ++j) f[static_cast<std::size_t>(i) * nz + j] = phi(g.tau(i), g.zeta(j));
        });
        const auto at = [&](int i, int j) -> const Mat3& { return f[static_cast<std::size_t>(i) * nz + j]; };
        std::vector<std::vector<detail::Norm>> rows(nt, std::vector<detail::Norm>(2));
        parallel_rows(nt, [&](int i) {
            if (i == 0 || i == nt - 1) return;
            for (int j = 1; j < nz - 1; ++j) {
                const auto s = seed(g.tau(i), g.zeta(j));
                const Mat3 ut = lax_u(lambda, s.omega_a, s.omega_b) * at(i, j);
                const Mat3 vz = lax_v(p, lambda, s.rho) * at(i, j);
                const Mat3 dt = (at(i + 1, j) - at(i - 1, j)) / (2.0 * g.h_tau) - ut;
                const Mat3 dz = (at(i, j + 1) - at(i, j - 1)) / (2.0 * g.h_zeta) - vz;
                rows[i][0].add(dt.cwiseAbs().maxCoeff(), ut.cwiseAbs().maxCoeff());
                rows[i][1].add(dz.cwiseAbs().maxCoeff(), vz.cwiseAbs().maxCoeff());
            }
        });
        detail::Norm nt_norm, nz_norm;
        for (const auto& r : rows) {
            nt_norm.merge(r[0]);
            nz_norm.merge(r[1]);
        }
        const double area = g.h_tau * g.h_zeta;
        rep.levels.push_back({g.h_tau, g.h_zeta, {nt_norm.finish("tau_equation", area), nz_norm.finish("zeta_equation", area)}});
    }
    detail::fill_orders(rep);
    return rep;
}

/// Incoming data for propagation in zeta: fields on the tau grid at zeta_begin and the
/// medium state at the early edge tau_begin for every zeta.
struct MbBoundary {
    std::vector<cplx> omega_a;
    std::vector<cplx> omega_b;
    std::function<Mat3(double zeta)> rho_entry;
};

struct MbTrajectory {
    std::vector<double> tau;
    std::vector<double> zeta;
    /// Field slices, one per zeta node.
    std::vector<std::vector<cplx>> omega_a, omega_b;
    /// Medium state along tau at the last zeta.
    std::vector<Mat3> rho_final;
    double max_trace_drift = 0.0;
    double max_hermiticity_defect = 0.0;  // before each re-Hermitization
};

namespace detail {

/// Liouville along tau with the fields fixed, Heun steps, rho re-Hermitized after each step.
/// Returns i nu0 (rho_31, rho_32) at every tau node.
inline void sweep_medium(const PhysicalParams& p, const std::vector<cplx>& oa, const std::vector<cplx>& ob,
                         const Mat3& entry, double h, std::vector<cplx>& src_a, std::vector<cplx>& src_b,
                         std::vector<Mat3>* rho_out, double& trace_drift, double& herm_defect) {
    const std::size_t n = oa.size();
    Mat3 rho = entry;
    const cplx tr0 = entry.trace();
    for (std::size_t i = 0;; ++i) {
        src_a[i] = I * p.nu0 * rho(2, 0);
        src_b[i] = I * p.nu0 * rho(2, 1);
        if (rho_out) (*rho_out)[i] = rho;
        if (i + 1 == n) break;
        const Mat3 k1 = liouville_rhs(p, oa[i], ob[i], rho);
        const Mat3 k2 = liouville_rhs(p, oa[i + 1], ob[i + 1], rho + h * k1);
        rho += 0.5 * h * (k1 + k2);
        herm_defect = std::max(herm_defect, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
        rho = hermitize(rho);
        trace_drift = std::max(trace_drift, std::abs(rho.trace() - tr0));
    }
}

}  // namespace detail

/// Propagates the Maxwell-Bloch system in zeta with Heun predictor-corrector steps; the medium
/// is integrated along tau at every stage (method of lines).
inline MbTrajectory integrate_maxwell_bloch(const MbBoundary& in, const PhysicalParams& p, const OracleGrid& g) {
    const int nt = g.tau_points(), nz = g.zeta_points();
    if (static_cast<int>(in.omega_a.size()) != nt || static_cast<int>(in.omega_b.size()) != nt)
        throw ConfigError("boundary fields must have one value per tau node");
    if (!in.rho_entry) throw ConfigError("boundary needs the entry medium state");
    const Mat3 r0 = in.rho_entry(g.zeta_begin);
    if ((r0 - r0.adjoint()).cwiseAbs().maxCoeff() > 1e-10 || std::abs(r0.trace() - 1.0) > 1e-10)
        throw ConfigError("entry medium state must be Hermitian with unit trace");

    MbTrajectory tr;
    for (int i = 0; i < nt; ++i) tr.tau.push_back(g.tau(i));
    for (int j = 0; j < nz; ++j) tr.zeta.push_back(g.zeta(j));
    tr.omega_a.push_back(in.omega_a);
    tr.omega_b.push_back(in.omega_b);
    tr.rho_final.resize(nt);

    double scale = 1.0;
    for (int i = 0; i < nt; ++i) scale = std::max({scale, std::abs(in.omega_a[i]), std::abs(in.omega_b[i])});

    std::vector<cplx> a = in.omega_a, b = in.omega_b;
    std::vector<cplx> sa(nt), sb(nt), sa2(nt), sb2(nt), pa(nt), pb(nt);
    for (int j = 0; j + 1 < nz; ++j) {
        const double z = g.zeta(j), h = g.h_zeta;
        detail::sweep_medium(p, a, b, in.rho_entry(z), g.h_tau, sa, sb, nullptr, tr.max_trace_drift,
                             tr.max_hermiticity_defect);
        for (int i = 0; i < nt; ++i) {
            pa[i] = a[i] + h * sa[i];
            pb[i] = b[i] + h * sb[i];
        }
        detail::sweep_medium(p, pa, pb, in.rho_entry(z + h), g.h_tau, sa2, sb2, nullptr, tr.max_trace_drift,
                             tr.max_hermiticity_defect);
        double peak = 0.0;
        for (int i = 0; i < nt; ++i) {
            a[i] += 0.5 * h * (sa[i] + sa2[i]);
            b[i] += 0.5 * h * (sb[i] + sb2[i]);
            peak = std::max({peak, std::abs(a[i]), std::abs(b[i])});
        }
        if (!std::isfinite(peak) || peak > 1e3 * scale)
            throw InstabilityError("field grew by more than 1e3 at zeta = " + std::to_string(z + h),
                                   0.5 * std::min(g.h_zeta, g.h_tau));
        tr.omega_a.push_back(a);
        tr.omega_b.push_back(b);
    }
    detail::sweep_medium(p, a, b, in.rho_entry(g.zeta(nz - 1)), g.h_tau, sa, sb, &tr.rho_final, tr.max_trace_drift,
                         tr.max_hermiticity_defect);
    return tr;
}

}  // namespace slowlight
