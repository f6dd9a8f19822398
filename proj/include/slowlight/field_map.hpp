#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "darboux.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "parallel.hpp"

namespace slowlight {

struct FieldSample {
    cplx omega_a;
    cplx omega_b;
    double p1 = 0.0, p2 = 0.0, p3 = 0.0;
};

enum class Channel { intensity_a, intensity_b, p1, p2, p3 };

inline std::string to_string(Channel c) {
    switch (c) {
        case Channel::intensity_a: return "intensity_a";
        case Channel::intensity_b: return "intensity_b";
        case Channel::p1: return "P1";
        case Channel::p2: return "P2";
        case Channel::p3: return "P3";
    }
    return "unknown";
}

inline Channel channel_from_string(const std::string& s) {
    for (auto c : {Channel::intensity_a, Channel::intensity_b, Channel::p1, Channel::p2, Channel::p3})
        if (to_string(c) == s) return c;
    throw ConfigError("unknown channel '" + s + "'");
}

inline double channel_value(const FieldSample& s, Channel c) {
    switch (c) {
        case Channel::intensity_a: return std::norm(s.omega_a);
        case Channel::intensity_b: return std::norm(s.omega_b);
        case Channel::p1: return s.p1;
        case Channel::p2: return s.p2;
        case Channel::p3: return s.p3;
    }
    return 0.0;
}

/// Uniform axis from begin to end inclusive.
struct Axis {
    double begin = 0.0;
    double end = 0.0;
    int points = 0;

    void validate(const char* name) const {
        if (points < 1) throw ConfigError(std::string(name) + " axis needs at least one point");
        if (points > 1 && !(end > begin))
            throw ConfigError(std::string(name) + " axis needs end > begin");
        if (!std::isfinite(begin) || !std::isfinite(end))
            throw ConfigError(std::string(name) + " axis bounds must be finite");
    }
    std::vector<double> values() const {
        std::vector<double> v(points);
        for (int i = 0; i < points; ++i)
            v[i] = points == 1 ? begin : begin + (end - begin) * i / (points - 1);
        return v;
    }
};

struct GridSpec {
    Axis tau;
    Axis zeta;
    void validate() const {
        tau.validate("tau");
        zeta.validate("zeta");
    }
};

/// Samples on a (tau, zeta) grid, stored row-major with one row per tau.
struct FieldMap {
    std::vector<double> tau;
    std::vector<double> zeta;
    std::vector<FieldSample> samples;

    const FieldSample& at(std::size_t i, std::size_t j) const { return samples[i * zeta.size() + j]; }
    FieldSample& at(std::size_t i, std::size_t j) { return samples[i * zeta.size() + j]; }

    std::vector<double> row(std::size_t i, Channel c) const {
        std::vector<double> r(zeta.size());
        for (std::size_t j = 0; j < zeta.size(); ++j) r[j] = channel_value(at(i, j), c);
        return r;
    }

    double max_population_defect() const {
        double worst = 0.0;
        for (const auto& s : samples) worst = std::max(worst, std::abs(s.p1 + s.p2 + s.p3 - 1.0));
        return worst;
    }
};

inline FieldSample to_sample(const DressedPoint& p) {
    return {p.omega_a, p.omega_b, p.rho(0, 0).real(), p.rho(1, 1).real(), p.rho(2, 2).real()};
}

inline FieldMap evaluate_field_map(const DressedSolution& sol, const GridSpec& grid) {
    grid.validate();
    FieldMap m{grid.tau.values(), grid.zeta.values(), {}};
    m.samples.resize(m.tau.size() * m.zeta.size());
    parallel_rows(static_cast<int>(m.tau.size()), [&](int i) {
        const auto col = sol.column(m.tau[i]);
        for (std::size_t j = 0; j < m.zeta.size(); ++j) m.at(i, j) = to_sample(sol.evaluate(col, m.zeta[j]));
    });
    return m;
}

/// Map from an arbitrary sampler, for synthetic data.
inline FieldMap tabulate_field_map(const GridSpec& grid,
                                   const std::function<FieldSample(double, double)>& f) {
    grid.validate();
    FieldMap m{grid.tau.values(), grid.zeta.values(), {}};
    m.samples.resize(m.tau.size() * m.zeta.size());
    for (std::size_t i = 0; i < m.tau.size(); ++i)
        for (std::size_t j = 0; j < m.zeta.size(); ++j) m.at(i, j) = f(m.tau[i], m.zeta[j]);
    return m;
}

namespace detail {

inline void append_number(std::string& out, double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

inline double parse_number(const std::string& s, std::size_t line) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ConfigError("field map line " + std::to_string(line) + ": bad number '" + s + "'");
    return v;
}

}  // namespace detail

inline const char* field_map_header() {
    return "tau[t_p],zeta[l_p/c],t[scaled],z[l_p/c],re_omega_a[1/t_p],im_omega_a[1/t_p],"
           "re_omega_b[1/t_p],im_omega_b[1/t_p],intensity_a[1/t_p^2],intensity_b[1/t_p^2],P1,P2,P3";
}

/// One row per grid point, shortest round-trip number formatting.
inline void write_field_map(std::ostream& out, const FieldMap& m) {
    out << field_map_header() << '\n';
    std::string line;
    for (std::size_t i = 0; i < m.tau.size(); ++i)
        for (std::size_t j = 0; j < m.zeta.size(); ++j) {
            const auto& s = m.at(i, j);
            const auto lab = to_lab_frame({m.tau[i], m.zeta[j]});
            line.clear();
            const double cols[] = {m.tau[i],         m.zeta[j],        lab.t,
                                   lab.z,            s.omega_a.real(), s.omega_a.imag(),
                                   s.omega_b.real(), s.omega_b.imag(), std::norm(s.omega_a),
                                   std::norm(s.omega_b), s.p1,         s.p2,
                                   s.p3};
            for (std::size_t k = 0; k < std::size(cols); ++k) {
                if (k) line += ',';
                detail::append_number(line, cols[k]);
            }
            out << line << '\n';
        }
}

inline void write_field_map(const std::string& path, const FieldMap& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_field_map(out, m);
    if (!out) throw IoError("write to '" + path + "' failed");
}

inline FieldMap read_field_map(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != field_map_header())
        throw ConfigError("field map line 1: unexpected header");
    FieldMap m;
    std::size_t n = 1;
    std::vector<double> taus;
    std::vector<std::array<double, 13>> rows;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        std::array<double, 13> v{};
        std::stringstream ss(line);
        std::string cell;
        std::size_t k = 0;
        while (std::getline(ss, cell, ',')) {
            if (k >= v.size()) throw ConfigError("field map line " + std::to_string(n) + ": too many columns");
            v[k++] = detail::parse_number(cell, n);
        }
        if (k != v.size()) throw ConfigError("field map line " + std::to_string(n) + ": too few columns");
        rows.push_back(v);
    }
    for (const auto& r : rows) {
        if (taus.empty() || taus.back() != r[0]) taus.push_back(r[0]);
        if (taus.size() == 1) m.zeta.push_back(r[1]);
    }
    m.tau = taus;
    if (rows.size() != m.tau.size() * m.zeta.size()) throw ConfigError("field map is not a full grid");
    for (const auto& r : rows) m.samples.push_back({{r[4], r[5]}, {r[6], r[7]}, r[10], r[11], r[12]});
    return m;
}

inline FieldMap read_field_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_field_map(in);
}

}  // namespace slowlight
