#pragma once

// Scenario files: JSON with comments, every key checked. Defaults reproduce the gate map
// (general family, nu0 = 4.5, Omega0 = 3, lambda0 = 4.1i, c2 = c3 = 1).

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "background.hpp"
#include "darboux.hpp"
#include "errors.hpp"
#include "field_map.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "scattering.hpp"

namespace slowlight {

struct BackgroundSpec {
    std::string kind = "constant";  // constant | exponential_switch | step_off | tabulated
    double alpha = 4.0;
    double cutoff = infinite_time;
    double restart = infinite_time;
    std::string file;  // tabulated samples, relative to the scenario file
};

struct VerifySpec {
    bool riccati_residual = false;
    bool pde_residual = false;
    bool zero_curvature = false;
    bool oracle_propagation = false;
    /// Coarsest oracle grid; steps halve at every level.
    OracleGrid grid{-1.0, 1.0, 0.02, -1.0, 1.0, 0.02, 0};
    int levels = 3;
    std::vector<cplx> probes{{1.0, 2.0}, {-0.5, 3.0}};
};

struct TrackSpec {
    Channel channel = Channel::intensity_a;
    TrackOptions options;
};

struct ObservableSpec {
    bool velocity = true;
    bool width = true;
    bool stopping_distance = false;
    bool zs_functionals = false;
    std::optional<TrackSpec> track;
};

struct OutputSpec {
    std::string dir = "out";
    std::string field_map = "field_map.csv";
    std::string summary = "summary.json";
};

struct Scenario {
    PhysicalParams physical;
    SpectralConfig spectral;
    BackgroundSpec background;
    Family family = Family::general;
    GridSpec grid{{-4.0, 4.0, 161}, {-6.0, 6.0, 241}};
    VerifySpec verify;
    ObservableSpec observables;
    OutputSpec output;
    std::filesystem::path base_dir = ".";  // directory of the scenario file

    void validate() const;
    BackgroundProfile profile() const;
    /// Scattering data covering [tau_begin, tau_end] at least.
    std::shared_ptr<const ScatteringSolution> scattering(double tau_begin, double tau_end) const;
    std::shared_ptr<const DressedSolution> solution(std::shared_ptr<const ScatteringSolution> sc) const;
    /// Tau range every requested computation touches.
    std::pair<double, double> tau_range() const;
};

inline Family family_from_string(const std::string& s) {
    for (auto f : {Family::general, Family::slow, Family::fast, Family::zero_background, Family::time_dependent})
        if (to_string(f) == s) return f;
    throw ConfigError("unknown family '" + s + "'");
}

namespace detail {

using json = nlohmann::json;

inline std::size_t line_of(const std::string& text, std::size_t pos) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos && i < text.size(); ++i) line += text[i] == '\n';
    return line;
}

/// Walks the scenario text to find the line of a dotted key path; 0 when not found.
inline std::size_t locate(const std::string& text, const std::string& path) {
    std::size_t pos = 0;
    std::stringstream ss(path);
    std::string key;
    while (std::getline(ss, key, '.')) {
        const auto at = text.find('"' + key + '"', pos);
        if (at == std::string::npos) return 0;
        pos = at + 1;
    }
    return line_of(text, pos);
}

/// Reads one JSON object, remembering which keys were consumed.
class Reader {
public:
    Reader(const json& j, std::string path, const std::string& text) : j_(j), path_(std::move(path)), text_(text) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    [[noreturn]] void fail(const std::string& path, const std::string& what) const {
        const auto line = locate(text_, path);
        throw ConfigError((line ? "line " + std::to_string(line) + ": " : std::string()) + path + ": " + what);
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* get(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out, bool allow_infinite = false) {
        if (const auto* v = get(key)) out = to_number(*v, child(key), allow_infinite);
    }
    void optional_number(const std::string& key, std::optional<double>& out) {
        if (const auto* v = get(key)) {
            if (v->is_null()) out.reset();
            else out = to_number(*v, child(key), false);
        }
    }
    void integer(const std::string& key, int& out) {
        if (const auto* v = get(key)) {
            if (!v->is_number_integer()) fail(child(key), "expected an integer");
            out = v->get<int>();
        }
    }
    void boolean(const std::string& key, bool& out) {
        if (const auto* v = get(key)) {
            if (!v->is_boolean()) fail(child(key), "expected true or false");
            out = v->get<bool>();
        }
    }
    void string(const std::string& key, std::string& out) {
        if (const auto* v = get(key)) {
            if (!v->is_string()) fail(child(key), "expected a string");
            out = v->get<std::string>();
        }
    }
    /// A complex number written as [re, im] or as a bare real.
    void complex(const std::string& key, cplx& out) {
        if (const auto* v = get(key)) out = to_complex(*v, child(key));
    }
    cplx to_complex(const json& v, const std::string& path) const {
        if (v.is_number()) return {to_number(v, path, false), 0.0};
        if (!v.is_array() || v.size() != 2) fail(path, "expected [re, im] or a number");
        return {to_number(v[0], path, false), to_number(v[1], path, false)};
    }
    /// [begin, end] with either end allowed to be infinite.
    void range(const std::string& key, double& lo, double& hi) {
        if (const auto* v = get(key)) {
            if (!v->is_array() || v->size() != 2) fail(child(key), "expected [begin, end]");
            lo = to_number((*v)[0], child(key), true);
            hi = to_number((*v)[1], child(key), true);
        }
    }
    void axis(const std::string& key, Axis& out) {
        if (const auto* v = get(key)) {
            if (!v->is_array() || v->size() != 3 || !(*v)[2].is_number_integer())
                fail(child(key), "expected [begin, end, points]");
            out.begin = to_number((*v)[0], child(key), false);
            out.end = to_number((*v)[1], child(key), false);
            out.points = (*v)[2].get<int>();
            try {
                out.validate(key.c_str());
            } catch (const ConfigError& e) {
                fail(child(key), e.what());
            }
        }
    }
    /// [begin, end, step] for oracle grids.
    void stepped(const std::string& key, double& begin, double& end, double& step) {
        if (const auto* v = get(key)) {
            if (!v->is_array() || v->size() != 3) fail(child(key), "expected [begin, end, step]");
            begin = to_number((*v)[0], child(key), false);
            end = to_number((*v)[1], child(key), false);
            step = to_number((*v)[2], child(key), false);
        }
    }
    Reader object(const std::string& key, const json& empty) {
        const auto* v = get(key);
        return Reader(v ? *v : empty, child(key), text_);
    }
    bool has(const std::string& key) const { return j_.contains(key); }

    void finish() const {
        for (const auto& [k, _] : j_.items())
            if (!seen_.count(k)) fail(child(k), "unknown key");
    }

private:
    double to_number(const json& v, const std::string& path, bool allow_infinite) const {
        if (allow_infinite) {
            if (v.is_null()) return infinite_time;
            if (v.is_string() && (v == "inf" || v == "infinity")) return infinite_time;
            if (v.is_string() && (v == "-inf" || v == "-infinity")) return -infinite_time;
        }
        if (!v.is_number()) fail(path, allow_infinite ? "expected a number, \"inf\" or null" : "expected a number");
        return v.get<double>();
    }

    const json& j_;
    std::string path_;
    const std::string& text_;
    std::set<std::string> seen_;
};

inline json number_or_inf(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    return v;
}

inline json complex_json(cplx c) { return json::array({c.real(), c.imag()}); }

}  // namespace detail

/// Parses scenario text. Syntax errors and field errors carry the offending line.
inline Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir = ".") {
    using detail::json;
    json root;
    try {
        root = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("line " + std::to_string(detail::line_of(text, e.byte > 0 ? e.byte - 1 : 0)) +
                          ": syntax error: " + e.what());
    }
    Scenario s;
    s.base_dir = base_dir;
    const json empty = json::object();
    detail::Reader top(root, "", text);

    {
        auto r = top.object("physical", empty);
        r.number("nu0", s.physical.nu0);
        r.number("delta", s.physical.delta);
        r.number("omega0", s.physical.omega0);
        r.number("k_phase", s.physical.k_phase);
        r.optional_number("x_excited", s.physical.x_excited);
        r.finish();
    }
    {
        auto r = top.object("spectral", empty);
        r.complex("lambda", s.spectral.lambda0);
        r.complex("c2", s.spectral.c2);
        r.complex("c3", s.spectral.c3);
        r.number("c1_phase", s.spectral.c1_phase);
        r.finish();
    }
    {
        auto r = top.object("background", empty);
        r.string("kind", s.background.kind);
        r.number("alpha", s.background.alpha);
        r.number("cutoff", s.background.cutoff, true);
        r.number("restart", s.background.restart, true);
        r.string("file", s.background.file);
        r.finish();
    }
    if (const auto* f = top.get("family")) {
        if (!f->is_string()) top.fail("family", "expected a string");
        try {
            s.family = family_from_string(f->get<std::string>());
        } catch (const ConfigError& e) {
            top.fail("family", e.what());
        }
    }
    {
        auto r = top.object("grid", empty);
        r.axis("tau", s.grid.tau);
        r.axis("zeta", s.grid.zeta);
        r.finish();
    }
    {
        auto r = top.object("verify", empty);
        r.boolean("riccati_residual", s.verify.riccati_residual);
        r.boolean("pde_residual", s.verify.pde_residual);
        r.boolean("zero_curvature", s.verify.zero_curvature);
        r.boolean("oracle_propagation", s.verify.oracle_propagation);
        r.integer("levels", s.verify.levels);
        if (r.has("grid")) {
            auto g = r.object("grid", empty);
            auto& og = s.verify.grid;
            g.stepped("tau", og.tau_begin, og.tau_end, og.h_tau);
            g.stepped("zeta", og.zeta_begin, og.zeta_end, og.h_zeta);
            g.finish();
        }
        if (const auto* p = r.get("probes")) {
            if (!p->is_array()) r.fail(r.child("probes"), "expected a list of [re, im]");
            s.verify.probes.clear();
            for (const auto& v : *p) s.verify.probes.push_back(r.to_complex(v, r.child("probes")));
        }
        r.finish();
    }
    {
        auto r = top.object("observables", empty);
        r.boolean("velocity", s.observables.velocity);
        r.boolean("width", s.observables.width);
        r.boolean("stopping_distance", s.observables.stopping_distance);
        r.boolean("zs_functionals", s.observables.zs_functionals);
        if (r.has("track")) {
            auto t = r.object("track", empty);
            TrackSpec ts;
            std::string ch = to_string(ts.channel);
            t.string("channel", ch);
            try {
                ts.channel = channel_from_string(ch);
            } catch (const ConfigError& e) {
                t.fail(t.child("channel"), e.what());
            }
            t.range("tau", ts.options.tau_min, ts.options.tau_max);
            t.range("zeta", ts.options.zeta_min, ts.options.zeta_max);
            t.number("comparable", ts.options.comparable);
            t.number("fit_fraction", ts.options.fit_fraction);
            t.finish();
            s.observables.track = ts;
        }
        r.finish();
    }
    {
        auto r = top.object("output", empty);
        r.string("dir", s.output.dir);
        r.string("field_map", s.output.field_map);
        r.string("summary", s.output.summary);
        r.finish();
    }
    top.finish();

    try {
        s.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("invalid scenario: ") + e.what());
    }
    return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_scenario(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

/// The fully resolved scenario, defaults included, in the input format.
inline nlohmann::json scenario_to_json(const Scenario& s) {
    using detail::complex_json;
    using detail::json;
    using detail::number_or_inf;
    json j;
    j["physical"] = {{"nu0", s.physical.nu0},
                     {"delta", s.physical.delta},
                     {"omega0", s.physical.omega0},
                     {"k_phase", s.physical.k_phase},
                     {"x_excited", s.physical.x_excited ? json(*s.physical.x_excited) : json(nullptr)}};
    j["spectral"] = {{"lambda", complex_json(s.spectral.lambda0)},
                     {"c2", complex_json(s.spectral.c2)},
                     {"c3", complex_json(s.spectral.c3)},
                     {"c1_phase", s.spectral.c1_phase}};
    j["background"] = {{"kind", s.background.kind},
                       {"alpha", s.background.alpha},
                       {"cutoff", number_or_inf(s.background.cutoff)},
                       {"restart", number_or_inf(s.background.restart)}};
    if (!s.background.file.empty()) j["background"]["file"] = s.background.file;
    j["family"] = to_string(s.family);
    j["grid"] = {{"tau", {s.grid.tau.begin, s.grid.tau.end, s.grid.tau.points}},
                 {"zeta", {s.grid.zeta.begin, s.grid.zeta.end, s.grid.zeta.points}}};
    json probes = json::array();
    for (auto p : s.verify.probes) probes.push_back(complex_json(p));
    const auto& g = s.verify.grid;
    j["verify"] = {{"riccati_residual", s.verify.riccati_residual},
                   {"pde_residual", s.verify.pde_residual},
                   {"zero_curvature", s.verify.zero_curvature},
                   {"oracle_propagation", s.verify.oracle_propagation},
                   {"levels", s.verify.levels},
                   {"grid", {{"tau", {g.tau_begin, g.tau_end, g.h_tau}}, {"zeta", {g.zeta_begin, g.zeta_end, g.h_zeta}}}},
                   {"probes", probes}};
    j["observables"] = {{"velocity", s.observables.velocity},
                        {"width", s.observables.width},
                        {"stopping_distance", s.observables.stopping_distance},
                        {"zs_functionals", s.observables.zs_functionals}};
    if (const auto& t = s.observables.track) {
        j["observables"]["track"] = {
            {"channel", to_string(t->channel)},
            {"tau", {number_or_inf(t->options.tau_min), number_or_inf(t->options.tau_max)}},
            {"zeta", {number_or_inf(t->options.zeta_min), number_or_inf(t->options.zeta_max)}},
            {"comparable", t->options.comparable},
            {"fit_fraction", t->options.fit_fraction}};
    }
    j["output"] = {{"dir", s.output.dir}, {"field_map", s.output.field_map}, {"summary", s.output.summary}};
    return j;
}

inline void Scenario::validate() const {
    physical.validate();
    spectral.validate();
    grid.validate();
    const auto& b = background;
    if (b.kind != "constant" && b.kind != "exponential_switch" && b.kind != "step_off" && b.kind != "tabulated")
        throw ConfigError("background.kind must be constant, exponential_switch, step_off or tabulated");
    if (b.kind == "exponential_switch") {
        if (!(b.alpha > 0.0) || !std::isfinite(b.alpha)) throw ConfigError("background.alpha must be positive");
        if (!(b.cutoff > 0.0)) throw ConfigError("background.cutoff must be positive");
        if (!(b.restart >= b.cutoff)) throw ConfigError("background.restart must not precede the cutoff");
        if (std::isfinite(b.restart) && !std::isfinite(b.cutoff))
            throw ConfigError("background.restart needs a finite cutoff");
        if (std::isfinite(b.cutoff) && b.restart == b.cutoff)
            throw ConfigError("background.restart must follow the cutoff");
        if (std::isfinite(b.cutoff) && family == Family::time_dependent && !(spectral.lambda0.imag() < 0.0))
            throw ConfigError("a finite cutoff needs Im lambda < 0: w does not decay in the dark interval otherwise");
    }
    if (b.kind == "tabulated" && b.file.empty()) throw ConfigError("background.file is required for tabulated");
    if (b.kind != "tabulated" && !b.file.empty()) throw ConfigError("background.file only applies to tabulated");

    switch (family) {
        case Family::general:
        case Family::slow:
        case Family::fast:
            if (b.kind != "constant")
                throw FamilyMismatchError("family " + to_string(family) + " needs a constant background, got " +
                                          b.kind);
            if (physical.omega0 == 0.0)
                throw FamilyMismatchError("family " + to_string(family) + " needs omega0 > 0; use zero_background");
            break;
        case Family::zero_background:
            if (b.kind != "constant") throw FamilyMismatchError("zero_background needs a constant background");
            if (physical.omega0 != 0.0) throw FamilyMismatchError("zero_background needs omega0 = 0");
            break;
        case Family::time_dependent:
            if (physical.omega0 == 0.0) throw FamilyMismatchError("time_dependent needs omega0 > 0");
            if (physical.k_phase != 0.0) throw FamilyMismatchError("time_dependent needs k_phase = 0");
            break;
    }

    if (observables.stopping_distance) {
        if (family != Family::time_dependent)
            throw FamilyMismatchError("stopping distance needs the time_dependent family");
        if (!(spectral.lambda0.imag() < 0.0)) throw ConfigError("stopping distance needs Im lambda < 0");
        if (b.kind == "constant" || (b.kind == "exponential_switch" && std::isfinite(b.restart)))
            throw NotStoppingError("stopping distance needs a background that stays off, got " + b.kind +
                                   (std::isfinite(b.restart) ? " with a restart" : ""));
    }
    if (observables.zs_functionals && b.kind == "constant")
        throw ConfigError("ZS functionals need a background that switches off");
    if (observables.track) {
        const auto& o = observables.track->options;
        if (!(o.tau_max > o.tau_min) || !(o.zeta_max > o.zeta_min))
            throw ConfigError("observables.track ranges need end > begin");
        if (!(o.fit_fraction > 0.0 && o.fit_fraction <= 1.0))
            throw ConfigError("observables.track.fit_fraction must lie in (0, 1]");
    }
    if (verify.pde_residual || verify.zero_curvature || verify.oracle_propagation) {
        verify.grid.validate();
        if (verify.levels < 1) throw ConfigError("verify.levels must be at least 1");
    }
    if (verify.zero_curvature) {
        if (verify.probes.size() < 2) throw ConfigError("verify.probes needs at least two values");
        for (std::size_t a = 0; a < verify.probes.size(); ++a)
            for (std::size_t c = 0; c < a; ++c)
                if (verify.probes[a] == verify.probes[c]) throw ConfigError("verify.probes must be distinct");
    }
    if (output.dir.empty() || output.field_map.empty() || output.summary.empty())
        throw ConfigError("output paths must not be empty");
}

inline BackgroundProfile Scenario::profile() const {
    const auto& b = background;
    if (b.kind == "constant") return ConstantField{physical.omega0, physical.k_phase};
    if (b.kind == "exponential_switch") return ExponentialSwitch{physical.omega0, b.alpha, b.cutoff, b.restart};
    if (b.kind == "step_off") return StepOff{physical.omega0};
    const auto path = std::filesystem::path(b.file).is_absolute() ? std::filesystem::path(b.file) : base_dir / b.file;
    auto prof = load_tabulated_profile(path.string());
    if (std::abs(std::abs(prof.asymptotics().minus_infinity) - physical.omega0) > 1e-9)
        throw ConfigError("tabulated background starts at |Omega| = " +
                          std::to_string(std::abs(prof.asymptotics().minus_infinity)) + ", omega0 is " +
                          std::to_string(physical.omega0));
    return prof;
}

inline std::pair<double, double> Scenario::tau_range() const {
    double lo = grid.tau.begin, hi = grid.tau.end;
    if (verify.pde_residual || verify.zero_curvature || verify.oracle_propagation) {
        lo = std::min(lo, verify.grid.tau_begin);
        hi = std::max(hi, verify.grid.tau_end);
    }
    return {lo - 1.0, hi + 1.0};
}

inline std::shared_ptr<const ScatteringSolution> Scenario::scattering(double tau_begin, double tau_end) const {
    const auto prof = profile();
    const cplx lam = spectral.lambda0;
    if (prof.holds<ConstantField>()) return std::make_shared<const ScatteringSolution>(constant_solution(lam, physical.omega0));
    if (const auto* e = std::get_if<ExponentialSwitch>(&prof.variant())) {
        if (!std::isfinite(e->cutoff))
            return std::make_shared<const ScatteringSolution>(exponential_tail_solution(lam, e->omega0, e->alpha));
        return std::make_shared<const ScatteringSolution>(
            piecewise_scenario(lam, e->omega0, e->alpha, e->cutoff, e->restart));
    }
    // Step and tabulated profiles: integrate from where the field is still constant.
    double a = std::min(tau_begin, -1.0), b = std::max(tau_end, 1.0);
    for (double k : prof.breakpoints()) {
        a = std::min(a, k - 1.0);
        b = std::max(b, k + 1.0);
    }
    return std::make_shared<const ScatteringSolution>(solve_riccati_ode(prof, lam, a, b, asymptotic_initial(prof, lam, a)));
}

inline std::shared_ptr<const DressedSolution> Scenario::solution(std::shared_ptr<const ScatteringSolution> sc) const {
    switch (family) {
        case Family::general: return std::make_shared<const DressedSolution>(dressed_general(physical, spectral));
        case Family::slow: return std::make_shared<const DressedSolution>(slow_soliton(physical, spectral));
        case Family::fast: return std::make_shared<const DressedSolution>(fast_soliton(physical, spectral));
        case Family::zero_background:
            return std::make_shared<const DressedSolution>(zero_background_memory(physical, spectral));
        case Family::time_dependent:
            return std::make_shared<const DressedSolution>(one_soliton_timedep(physical, spectral, std::move(sc)));
    }
    throw ConfigError("unknown family");
}

}  // namespace slowlight
