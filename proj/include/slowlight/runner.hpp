#pragma once

// Scenario execution and the artifact bundles behind the command-line verbs.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <json.hpp>

#include "field_map.hpp"
#include "observables.hpp"
#include "oracle.hpp"
#include "scenario.hpp"
#include "special_functions.hpp"
#include "verification.hpp"

#ifndef SLOWLIGHT_VERSION
#define SLOWLIGHT_VERSION "unknown"
#endif

namespace slowlight {

using ojson = nlohmann::ordered_json;

/// Creates the directory and proves it is writable, before any computation.
inline void prepare_output_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    const auto probe = dir / ".write_probe";
    {
        std::ofstream out(probe);
        if (!out || !(out << "x") || !out.flush())
            throw IoError("output directory '" + dir.string() + "' is not writable");
    }
    std::filesystem::remove(probe, ec);
}

inline void write_json(const std::filesystem::path& path, const ojson& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

/// JSON has no infinities or NaN; those become null.
inline ojson finite_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

inline ojson to_json(const ResidualReport& r) {
    ojson levels = ojson::array();
    for (const auto& lv : r.levels) {
        ojson eq = ojson::array();
        for (const auto& e : lv.equations)
            eq.push_back({{"equation", e.equation}, {"sup", e.sup}, {"l2", e.l2}, {"relative", e.relative}});
        levels.push_back({{"h_tau", lv.h_tau}, {"h_zeta", lv.h_zeta}, {"sup", lv.sup()}, {"equations", eq}});
    }
    ojson orders = ojson::array();
    for (const auto& o : r.orders) {
        ojson row = ojson::array();
        for (double v : o) row.push_back(finite_or_null(v));
        orders.push_back(row);
    }
    ojson total = ojson::array();
    for (double v : r.total_orders) total.push_back(finite_or_null(v));
    return {{"levels", levels},
            {"orders", orders},
            {"total_orders", total},
            {"min_total_order", finite_or_null(r.min_total_order())},
            {"flagged", r.flagged()}};
}

/// Numbers stay numbers, everything else stays text.
inline ojson key_value_json(const std::string& text) {
    ojson j = ojson::object();
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const auto key = line.substr(0, eq), value = line.substr(eq + 1);
        double v = 0.0;
        const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
        if (r.ec == std::errc() && r.ptr == value.data() + value.size()) j[key] = finite_or_null(v);
        else j[key] = value;
    }
    return j;
}

struct PropagationLevel {
    double h = 0.0;
    double error_a = 0.0, error_b = 0.0, error_rho = 0.0;
    double trace_drift = 0.0, hermiticity_defect = 0.0;
};

/// Propagates the solution's own boundary data through the oracle grid at each level and
/// compares the far slice with the solution.
inline std::vector<PropagationLevel> propagation_study(std::shared_ptr<const DressedSolution> sol, const OracleGrid& grid,
                                                       int levels) {
    std::vector<PropagationLevel> out;
    OracleGrid g = grid;
    for (int level = 0; level < levels; ++level, g = g.refined()) {
        const auto tr = integrate_maxwell_bloch(boundary_from(sol, g), sol->params(), g);
        PropagationLevel pl{g.h_tau, 0.0, 0.0, 0.0, tr.max_trace_drift, tr.max_hermiticity_defect};
        const double z = tr.zeta.back();
        for (std::size_t i = 0; i < tr.tau.size(); ++i) {
            const auto q = (*sol)(tr.tau[i], z);
            pl.error_a = std::max(pl.error_a, std::abs(tr.omega_a.back()[i] - q.omega_a));
            pl.error_b = std::max(pl.error_b, std::abs(tr.omega_b.back()[i] - q.omega_b));
            pl.error_rho = std::max(pl.error_rho, (tr.rho_final[i] - q.rho).cwiseAbs().maxCoeff());
        }
        out.push_back(pl);
    }
    return out;
}

inline ojson to_json(const std::vector<PropagationLevel>& levels) {
    ojson lv = ojson::array(), orders = ojson::array();
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const auto& l = levels[k];
        lv.push_back({{"h", l.h},
                      {"error_omega_a", l.error_a},
                      {"error_omega_b", l.error_b},
                      {"error_rho", l.error_rho},
                      {"trace_drift", l.trace_drift},
                      {"hermiticity_defect", l.hermiticity_defect}});
        if (k > 0) {
            const double e0 = std::max(levels[k - 1].error_a, levels[k - 1].error_b);
            const double e1 = std::max(l.error_a, l.error_b);
            orders.push_back(finite_or_null(std::log(e0 / e1) / std::log(levels[k - 1].h / l.h)));
        }
    }
    return {{"levels", lv}, {"orders", orders}};
}

/// Largest deviation of the literal printed normalization from the one that normalizes the state.
inline ojson normalization_diagnostic(const DressedSolution& sol, const GridSpec& grid) {
    const auto tau = grid.tau.values(), zeta = grid.zeta.values();
    const std::size_t st = std::max<std::size_t>(1, tau.size() / 40), sz = std::max<std::size_t>(1, zeta.size() / 40);
    double worst = 0.0, at_tau = 0.0, at_zeta = 0.0;
    for (std::size_t i = 0; i < tau.size(); i += st)
        for (std::size_t j = 0; j < zeta.size(); j += sz) {
            const double d = std::abs(sol.printed_normalization_ratio(tau[i], zeta[j]) - 1.0);
            if (d > worst) {
                worst = d;
                at_tau = tau[i];
                at_zeta = zeta[j];
            }
        }
    return {{"max_relative_deviation", worst},
            {"at", {at_tau, at_zeta}},
            {"flagged", worst > 1e-10},
            {"note", "printed normalization (cross term without factor 2) against the one that normalizes the state"}};
}

inline ojson velocity_diagnostic(const PhysicalParams& p, const SpectralConfig& s) {
    const double v = group_velocity(p, s);
    const auto lim = small_field_limits(p);
    return {{"exact", v},
            {"small_field_half", lim.half},
            {"small_field_full", lim.full},
            {"ratio_to_half", v / lim.half},
            {"ratio_to_full", v / lim.full},
            {"omega0_over_epsilon", p.omega0 / s.epsilon()}};
}

struct RunResult {
    std::filesystem::path field_map;
    std::filesystem::path summary_path;
    ojson summary;
};

/// Builds, evaluates and verifies a scenario; writes the field map and the summary into out_dir.
inline RunResult run_scenario(const Scenario& sc, const std::filesystem::path& out_dir) {
    const auto start = std::chrono::steady_clock::now();
    sc.validate();
    prepare_output_dir(out_dir);

    const auto [tau_lo, tau_hi] = sc.tau_range();
    const auto scat = sc.scattering(tau_lo, tau_hi);
    const auto sol = sc.solution(scat);

    const auto map = evaluate_field_map(*sol, sc.grid);
    RunResult res{out_dir / sc.output.field_map, out_dir / sc.output.summary, {}};
    write_field_map(res.field_map.string(), map);

    ojson obs = ojson::object();
    const auto& p = sc.physical;
    const auto& s = sc.spectral;
    if (sc.observables.velocity) {
        ojson v = ojson::object();
        if (p.omega0 > 0.0) v["predicted"] = group_velocity(p, s);
        if (const auto& t = sc.observables.track) {
            const auto tr = track_peak(map, t->channel, t->options);
            v["tracked"] = {{"channel", to_string(t->channel)},
                            {"slope", tr.slope},
                            {"slope_error", tr.slope_error},
                            {"velocity", tr.velocity},
                            {"velocity_error", tr.velocity_error},
                            {"samples", tr.samples.size()}};
        }
        obs["velocity"] = v;
    }
    if (sc.observables.width) obs["width"] = {{"predicted", memory_bit_width(p, s)}};
    if (sc.observables.zs_functionals) {
        const auto f = zs_functionals(scat->profile());
        obs["zs_functionals"] = {{"i1", f.i1}, {"i2", f.i2}};
    }
    if (sc.observables.stopping_distance) {
        auto rep = stopping_distance(p, s, *scat);
        const auto m = measure_stop(*sol, sc.grid.zeta, 0.0, sc.grid.tau.end);
        rep.measured = m.displacement;
        rep.measured_width = m.width;
        auto j = key_value_json(rep.to_text());
        j["measured_start"] = m.start;
        j["measured_end"] = m.end;
        obs["stopping_distance"] = j;
        if (sc.observables.width) obs["width"]["measured"] = m.width;
    }

    ojson ver = ojson::object();
    const ResidualOptions ropt{feature_width(*sol), sc.verify.levels};
    if (sc.verify.riccati_residual) {
        std::vector<double> grid;
        for (double t : sc.grid.tau.values())
            if (t >= scat->tau_min() && t <= scat->tau_max()) grid.push_back(t);
        const auto r = riccati_residual(*scat, grid);
        ver["riccati_residual"] = {{"w_relative", r.w_relative}, {"z_relative", r.z_relative}, {"points", grid.size()}};
    }
    if (sc.verify.pde_residual) ver["pde_residual"] = to_json(nonlinear_residual(as_mb_field(sol), p, sc.verify.grid, ropt));
    if (sc.verify.zero_curvature) {
        auto j = to_json(zero_curvature_residual(as_mb_field(sol), p, sc.verify.probes, sc.verify.grid, ropt));
        ojson probes = ojson::array();
        for (auto z : sc.verify.probes) probes.push_back({z.real(), z.imag()});
        j["probes"] = probes;
        ver["zero_curvature"] = j;
    }
    if (sc.verify.oracle_propagation)
        ver["oracle_propagation"] = to_json(propagation_study(sol, sc.verify.grid, sc.verify.levels));

    ojson diag = ojson::object();
    if (p.omega0 > 0.0) diag["velocity_factor_two"] = velocity_diagnostic(p, s);
    diag["normalization_formula"] = normalization_diagnostic(*sol, sc.grid);
    diag["max_population_defect"] = map.max_population_defect();

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.summary = {{"version", SLOWLIGHT_VERSION},
                   {"family", to_string(sc.family)},
                   {"scattering_method", to_string(scat->method())},
                   {"field_map", sc.output.field_map},
                   {"observables", obs},
                   {"verification", ver},
                   {"diagnostics", diag},
                   {"parameters", ojson::parse(scenario_to_json(sc).dump())},
                   {"wall_time_seconds", wall}};
    write_json(res.summary_path, res.summary);
    return res;
}

// ---------------------------------------------------------------------------------------------
// Figure bundles. Ids follow the order of the data figures: 1 gate, 2 reading, 3 control field
// at three depths, 4 channel-a intensity map, 5 level-2 population map, 6 adiabatic comparison.

/// The stopping scenario shared by figures 3 to 5: exponential switch-off at rate 4 with a
/// cutoff at 4/alpha and a restart three units later.
inline Scenario memory_scenario() {
    Scenario s;
    s.family = Family::time_dependent;
    s.spectral.lambda0 = {0.0, -4.1};
    s.background = {"exponential_switch", 4.0, 1.0, 4.0, ""};
    s.grid = {{-4.0, 10.0, 281}, {-4.0, 12.0, 321}};
    return s;
}

inline Scenario gate_scenario() {
    Scenario s;
    s.grid = {{-4.0, 4.0, 161}, {-6.0, 30.0, 721}};
    return s;
}

inline Scenario reading_scenario() {
    Scenario s;
    s.family = Family::zero_background;
    s.physical.omega0 = 0.0;
    s.grid = {{-3.0, 3.0, 121}, {-6.0, 6.0, 241}};
    return s;
}

/// Exponential background without cutoff, Omega0 = 0.5, for the adiabatic comparison.
inline Scenario adiabatic_scenario() {
    Scenario s;
    s.family = Family::time_dependent;
    s.physical.omega0 = 0.5;
    s.spectral.lambda0 = {0.0, -4.1};
    s.background = {"exponential_switch", 4.0, infinite_time, infinite_time, ""};
    s.grid = {{-1.0, 3.0, 401}, {-1.0, 1.0, 5}};
    return s;
}

struct AdiabaticComparison {
    double w_deviation = 0.0;        // sup |w_exact - w_adiabatic| / sup |w_exact|
    double z_deviation = 0.0;
    double omega_a_deviation = 0.0;  // same for Omega_a on the sampled zeta slices
};

inline AdiabaticComparison compare_adiabatic(const Scenario& s) {
    const auto prof = s.profile();
    const cplx lam = s.spectral.lambda0;
    const auto exact = s.scattering(s.grid.tau.begin, s.grid.tau.end);
    auto adi = std::make_shared<const ScatteringSolution>(adiabatic_solution(prof, lam));
    const auto se = s.solution(exact), sa = s.solution(adi);
    AdiabaticComparison c;
    double nw = 0.0, nz = 0.0, na = 0.0, dw = 0.0, dz = 0.0, da = 0.0;
    for (double t : s.grid.tau.values()) {
        const auto e = (*exact)(t), a = (*adi)(t);
        nw = std::max(nw, std::abs(e.w));
        nz = std::max(nz, std::abs(e.z));
        dw = std::max(dw, std::abs(e.w - a.w));
        dz = std::max(dz, std::abs(e.z - a.z));
        for (double z : s.grid.zeta.values()) {
            const cplx oe = (*se)(t, z).omega_a, oa = (*sa)(t, z).omega_a;
            na = std::max(na, std::abs(oe));
            da = std::max(da, std::abs(oe - oa));
        }
    }
    c.w_deviation = dw / nw;
    c.z_deviation = dz / nz;
    c.omega_a_deviation = da / na;
    return c;
}

struct FigureBundle {
    std::vector<std::filesystem::path> files;
    ojson summary;
};

namespace detail {

inline void write_columns(const std::filesystem::path& path, const std::string& header,
                          const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << header << '\n';
    std::string line;
    for (const auto& r : rows) {
        line.clear();
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (k) line += ',';
            append_number(line, r[k]);
        }
        out << line << '\n';
    }
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline FigureBundle map_figure(const Scenario& s, const std::filesystem::path& path, const std::string& shows) {
    const auto [lo, hi] = s.tau_range();
    const auto sol = s.solution(s.scattering(lo, hi));
    write_field_map(path.string(), evaluate_field_map(*sol, s.grid));
    return {{path}, {{"shows", shows}, {"parameters", ojson::parse(scenario_to_json(s).dump())}}};
}

}  // namespace detail

inline bool known_figure(int id) { return id >= 1 && id <= 6; }

inline FigureBundle emit_figure(int id, const std::filesystem::path& out_dir) {
    if (!known_figure(id)) throw ConfigError("unknown figure id " + std::to_string(id) + ", expected 1 to 6");
    prepare_output_dir(out_dir);
    FigureBundle b;
    switch (id) {
        case 1:
            b = detail::map_figure(gate_scenario(), out_dir / "figure1_gate.csv",
                                   "slow soliton knocked down by a fast soliton: intensities and populations");
            break;
        case 2:
            b = detail::map_figure(reading_scenario(), out_dir / "figure2_reading.csv",
                                   "stored polarization read out by a fast soliton without control field");
            break;
        case 3: {
            const auto s = memory_scenario();
            const auto sol = s.solution(s.scattering(-3.0, 21.0));
            const auto prof = s.profile();
            const std::vector<double> depths{0.0, 6.0, 12.0};
            std::vector<std::vector<double>> rows;
            for (const double t : Axis{-2.0, 20.0, 1101}.values()) {
                std::vector<double> r{t, std::norm(prof(t))};
                for (double z : depths) r.push_back(std::norm((*sol)(t - z, z).omega_b));
                rows.push_back(std::move(r));
            }
            const auto path = out_dir / "figure3_control.csv";
            detail::write_columns(path, "t[scaled],background_z0[1/t_p^2],intensity_b_z0[1/t_p^2],"
                                        "intensity_b_z6[1/t_p^2],intensity_b_z12[1/t_p^2]", rows);
            b = {{path},
                 {{"shows", "control intensity against lab time at z = 0, 6, 12"},
                  {"parameters", ojson::parse(scenario_to_json(s).dump())}}};
            break;
        }
        case 4:
            b = detail::map_figure(memory_scenario(), out_dir / "figure4_intensity_a.csv",
                                   "channel-a intensity with the break-up between the two soliton trails");
            break;
        case 5:
            b = detail::map_figure(memory_scenario(), out_dir / "figure5_population_2.csv",
                                   "level-2 population with the standing flip during the dark interval");
            break;
        case 6: {
            const auto s = adiabatic_scenario();
            const auto prof = s.profile();
            const auto exact = s.scattering(s.grid.tau.begin, s.grid.tau.end);
            const auto adi = std::make_shared<const ScatteringSolution>(adiabatic_solution(prof, s.spectral.lambda0));
            const auto se = s.solution(exact), sa = s.solution(adi);
            std::vector<std::vector<double>> rows;
            for (double t : s.grid.tau.values()) {
                const auto e = (*exact)(t), a = (*adi)(t);
                const cplx oe = (*se)(t, 0.0).omega_a, oa = (*sa)(t, 0.0).omega_a;
                rows.push_back({t, std::norm(prof(t)), e.w.real(), e.w.imag(), a.w.real(), a.w.imag(), e.z.real(),
                                e.z.imag(), a.z.real(), a.z.imag(), std::norm(oe), std::norm(oa)});
            }
            const auto path = out_dir / "figure6_adiabatic.csv";
            detail::write_columns(path,
                                  "tau[t_p],background[1/t_p^2],re_w_exact,im_w_exact,re_w_adiabatic,im_w_adiabatic,"
                                  "re_z_exact,im_z_exact,re_z_adiabatic,im_z_adiabatic,intensity_a_exact[1/t_p^2],"
                                  "intensity_a_adiabatic[1/t_p^2]",
                                  rows);
            const auto c = compare_adiabatic(s);
            b = {{path},
                 {{"shows", "exact against adiabatic scattering data and channel-a intensity"},
                  {"w_relative_deviation", c.w_deviation},
                  {"z_relative_deviation", c.z_deviation},
                  {"omega_a_relative_deviation", c.omega_a_deviation},
                  {"parameters", ojson::parse(scenario_to_json(s).dump())}}};
            break;
        }
    }
    b.summary["figure"] = id;
    b.summary["version"] = SLOWLIGHT_VERSION;
    ojson files = ojson::array();
    for (const auto& f : b.files) files.push_back(f.filename().string());
    b.summary["files"] = files;
    const auto path = out_dir / ("figure" + std::to_string(id) + ".json");
    write_json(path, b.summary);
    b.files.push_back(path);
    return b;
}

// ---------------------------------------------------------------------------------------------
// Self-check: the fast subset of the acceptance checks.

struct CheckItem {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SelfcheckOptions {
    /// Series truncation used by the Bessel checks; raising it is the negative control.
    double bessel_tolerance = BesselOptions{}.tolerance;
};

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream o;
    o.precision(6);
    o << v;
    return o.str();
}

inline CheckItem check(const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
    try {
        const auto [ok, detail] = body();
        return {name, ok, detail};
    } catch (const std::exception& e) {
        return {name, false, std::string("error: ") + e.what()};
    }
}

/// Worst deviation from a unit-trace projector over a map.
inline std::pair<double, double> purity_defects(const DressedSolution& sol, const GridSpec& g) {
    double trace = 0.0, idem = 0.0;
    for (double t : g.tau.values()) {
        const auto col = sol.column(t);
        for (double z : g.zeta.values()) {
            const Mat3 r = sol.evaluate(col, z).rho;
            trace = std::max(trace, std::abs(r.trace() - 1.0));
            idem = std::max(idem, (r * r - r).cwiseAbs().maxCoeff());
        }
    }
    return {trace, idem};
}

}  // namespace detail

/// 100 points: ten complex orders, ten arguments including negative ones.
inline double bessel_recurrence_sweep(const BesselOptions& opt) {
    double worst = 0.0;
    for (int a = 0; a < 10; ++a) {
        const cplx nu(-2.3 + 0.7 * a, 0.4 * std::sin(1.3 * a) + 0.2 * a - 0.9);
        for (int b = 0; b < 10; ++b) {
            const double x = -9.0 + 2.0 * b + 0.35;
            worst = std::max(worst, bessel_recurrence_residual(nu, x, opt));
        }
    }
    return worst;
}

/// Largest deviation of J_{1/2}, J_{-1/2}, J_{3/2} from their elementary forms.
inline double bessel_half_integer_error(const BesselOptions& opt) {
    double worst = 0.0;
    for (int b = 1; b <= 40; ++b) {
        const double x = 0.25 * b;
        const double c = std::sqrt(2.0 / (M_PI * x));
        const double ref[] = {c * std::sin(x), c * std::cos(x), c * (std::sin(x) / x - std::cos(x))};
        const double nus[] = {0.5, -0.5, 1.5};
        for (int k = 0; k < 3; ++k) {
            const double scale = std::max(1.0, std::abs(ref[k]));
            worst = std::max(worst, std::abs(bessel_j(nus[k], x, opt) - ref[k]) / scale);
        }
    }
    return worst;
}

inline std::vector<CheckItem> run_selfcheck(const SelfcheckOptions& opt = {}) {
    using detail::fmt;
    std::vector<CheckItem> items;
    BesselOptions bo;
    bo.tolerance = opt.bessel_tolerance;

    items.push_back(detail::check("bessel_recurrence", [&] {
        const double r = bessel_recurrence_sweep(bo);
        return std::pair{r <= 1e-10, "max residual " + fmt(r) + " (limit 1e-10)"};
    }));
    items.push_back(detail::check("bessel_half_integer", [&] {
        const double r = bessel_half_integer_error(bo);
        return std::pair{r <= 1e-12, "max error " + fmt(r) + " (limit 1e-12)"};
    }));
    items.push_back(detail::check("riccati_closed_forms", [] {
        const auto grid = Axis{-2.0, 8.0, 1000}.values();
        double worst = 0.0;
        for (double im : {4.1, -4.1}) {
            const cplx lam(0.0, im);
            const auto c = constant_solution(lam, 3.0);
            const auto e = exponential_tail_solution(lam, 3.0, 4.0);
            for (const auto* sol : {&c, &e}) {
                const auto r = riccati_residual(*sol, grid);
                worst = std::max({worst, r.w_relative, r.z_relative});
            }
        }
        const auto pw = piecewise_scenario({0.0, -4.1}, 3.0, 4.0, 1.0, 4.0);
        const auto r = riccati_residual(pw, grid);
        worst = std::max({worst, r.w_relative, r.z_relative});
        return std::pair{worst <= 1e-6, "max relative residual " + fmt(worst) + " (limit 1e-6)"};
    }));
    items.push_back(detail::check("ode_against_closed_form", [] {
        const cplx lam(0.0, -4.1);
        const BackgroundProfile prof = ExponentialSwitch{3.0, 4.0, infinite_time, infinite_time};
        OdeOptions o;
        o.rtol = 1e-12;
        o.atol = 1e-13;
        const auto ode = solve_riccati_ode(prof, lam, -2.0, 6.0, asymptotic_initial(prof, lam, -2.0), o);
        const auto ex = exponential_tail_solution(lam, 3.0, 4.0);
        double worst = 0.0;
        for (double t : Axis{-2.0, 6.0, 801}.values()) {
            const auto a = ode(t), b = ex(t);
            worst = std::max({worst, std::abs(a.w - b.w), std::abs(a.z - b.z)});
        }
        return std::pair{worst <= 1e-8, "sup difference " + fmt(worst) + " (limit 1e-8)"};
    }));
    items.push_back(detail::check("normalization_and_purity", [] {
        const GridSpec g{{-3.0, 3.0, 41}, {-4.0, 4.0, 41}};
        PhysicalParams p;
        SpectralConfig s;
        PhysicalParams p0 = p;
        p0.omega0 = 0.0;
        SpectralConfig sm = s;
        sm.lambda0 = {0.0, -4.1};
        auto sc = std::make_shared<const ScatteringSolution>(exponential_tail_solution(sm.lambda0, 3.0, 4.0));
        const DressedSolution sols[] = {dressed_general(p, s), slow_soliton(p, s), fast_soliton(p, s),
                                        zero_background_memory(p0, s), one_soliton_timedep(p, sm, sc)};
        double trace = 0.0, idem = 0.0;
        for (const auto& sol : sols) {
            const auto [t, i] = detail::purity_defects(sol, g);
            trace = std::max(trace, t);
            idem = std::max(idem, i);
        }
        return std::pair{trace <= 1e-12 && idem <= 1e-10,
                         "trace defect " + fmt(trace) + " (1e-12), idempotency defect " + fmt(idem) + " (1e-10)"};
    }));
    items.push_back(detail::check("general_reduces_to_slow", [] {
        PhysicalParams p;
        SpectralConfig s;
        s.c3 = 0.0;
        const auto g = dressed_general(p, s), sl = slow_soliton(p, s);
        double worst = 0.0;
        for (double t : Axis{-3.0, 3.0, 13}.values())
            for (double z : Axis{-4.0, 4.0, 17}.values()) {
                const auto a = g.generic(t, z), b = sl(t, z);
                worst = std::max({worst, std::abs(a.omega_a - b.omega_a), std::abs(a.omega_b - b.omega_b),
                                  (a.rho - b.rho).cwiseAbs().maxCoeff()});
            }
        return std::pair{worst <= 1e-10, "max difference " + fmt(worst) + " (limit 1e-10)"};
    }));
    items.push_back(detail::check("derived_values", [] {
        PhysicalParams p;
        SpectralConfig s;
        const double v = group_velocity(p, s);
        s.lambda0 = {0.0, -4.1};
        const double w = memory_bit_width(p, s), l0 = instant_stop_distance(p, s);
        const bool ok = std::abs(v - 0.5432) < 1e-4 && std::abs(w - 4.7996) < 1e-4 && std::abs(l0 - 0.1580) < 1e-4;
        return std::pair{ok, "velocity " + fmt(v) + ", width " + fmt(w) + ", instant stop " + fmt(l0)};
    }));
    items.push_back(detail::check("zero_background_maximum", [] {
        PhysicalParams p;
        p.omega0 = 0.0;
        p.delta = 1.0;
        SpectralConfig s;
        s.lambda0 = {0.0, -4.1};
        s.c3 = 0.0;
        const auto sol = zero_background_memory(p, s);
        const auto r = boost::math::tools::brent_find_minima(
            [&](double z) { return -sol(20.0, z).rho(1, 1).real(); }, -10.0, 10.0, 52);
        const double best = -r.second;
        return std::pair{std::abs(best - 0.9438) < 1e-4, "max P2 " + fmt(best) + " (expected 0.9438)"};
    }));
    return items;
}

// ---------------------------------------------------------------------------------------------
// Sweeps.

inline const std::vector<std::string>& sweep_parameters() {
    static const std::vector<std::string> names{"nu0",   "delta", "omega0", "k_phase", "lambda_re", "lambda_im",
                                                "c2_re", "c2_im", "c3_re",  "c3_im",   "c1_phase",  "alpha",
                                                "cutoff", "restart"};
    return names;
}

inline void set_parameter(Scenario& s, const std::string& name, double v) {
    if (name == "nu0") s.physical.nu0 = v;
    else if (name == "delta") s.physical.delta = v;
    else if (name == "omega0") s.physical.omega0 = v;
    else if (name == "k_phase") s.physical.k_phase = v;
    else if (name == "lambda_re") s.spectral.lambda0.real(v);
    else if (name == "lambda_im") s.spectral.lambda0.imag(v);
    else if (name == "c2_re") s.spectral.c2.real(v);
    else if (name == "c2_im") s.spectral.c2.imag(v);
    else if (name == "c3_re") s.spectral.c3.real(v);
    else if (name == "c3_im") s.spectral.c3.imag(v);
    else if (name == "c1_phase") s.spectral.c1_phase = v;
    else if (name == "alpha") s.background.alpha = v;
    else if (name == "cutoff") s.background.cutoff = v;
    else if (name == "restart") s.background.restart = v;
    else throw ConfigError("unknown sweep parameter '" + name + "'");
}

/// Runs one scenario per value into out_dir/<name>_<index>/ and writes sweep.json.
inline ojson run_sweep(const Scenario& base, const std::string& name, const std::vector<double>& values,
                       const std::filesystem::path& out_dir) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    std::vector<Scenario> runs;
    for (double v : values) {
        Scenario s = base;
        set_parameter(s, name, v);
        try {
            s.validate();
        } catch (const Error& e) {
            throw ConfigError(name + " = " + detail::fmt(v) + ": " + e.what());
        }
        runs.push_back(std::move(s));
    }
    prepare_output_dir(out_dir);
    ojson entries = ojson::array();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto dir = out_dir / (name + "_" + std::to_string(k));
        const auto r = run_scenario(runs[k], dir);
        entries.push_back({{"value", values[k]},
                           {"dir", dir.filename().string()},
                           {"observables", r.summary["observables"]},
                           {"wall_time_seconds", r.summary["wall_time_seconds"]}});
    }
    ojson j{{"version", SLOWLIGHT_VERSION}, {"parameter", name}, {"runs", entries}};
    write_json(out_dir / "sweep.json", j);
    return j;
}

}  // namespace slowlight
