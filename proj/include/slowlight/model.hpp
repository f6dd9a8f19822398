#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "errors.hpp"

namespace slowlight {

using cplx = std::complex<double>;
using Vec3 = Eigen::Matrix<cplx, 3, 1>;
using Mat3 = Eigen::Matrix<cplx, 3, 3>;

inline constexpr cplx I{0.0, 1.0};

/// Level signature diag(1, 1, -1): ground sublevels |1>, |2> against the excited |3>.
inline Mat3 level_signature() {
    Mat3 d = Mat3::Zero();
    d(0, 0) = 1.0;
    d(1, 1) = 1.0;
    d(2, 2) = -1.0;
    return d;
}

struct PhysicalParams {
    double nu0 = 4.5;
    double delta = 0.0;
    double omega0 = 3.0;
    double k_phase = 0.0;
    std::optional<double> x_excited;

    void validate() const {
        if (!(nu0 > 0.0) || !std::isfinite(nu0)) throw ConfigError("nu0 must be positive and finite");
        if (!(omega0 >= 0.0) || !std::isfinite(omega0))
            throw ConfigError("omega0 must be non-negative and finite");
        if (!std::isfinite(delta)) throw ConfigError("delta must be finite");
        if (!std::isfinite(k_phase)) throw ConfigError("k_phase must be finite");
        if (k_phase != 0.0) {
            if (!x_excited) throw ConfigError("x_excited is required when k_phase != 0");
            if (!(*x_excited > 2.0 * delta))
                throw ConfigError("x_excited must exceed 2*delta when k_phase != 0");
        }
    }
};

struct SpectralConfig {
    cplx lambda0{0.0, 4.1};
    double c1_phase = 0.0;
    cplx c2{1.0, 0.0};
    cplx c3{1.0, 0.0};

    void validate() const {
        if (lambda0.imag() == 0.0) throw ConfigError("lambda0 must have a nonzero imaginary part");
        if (!std::isfinite(lambda0.real()) || !std::isfinite(lambda0.imag()))
            throw ConfigError("lambda0 must be finite");
        if (!std::isfinite(c1_phase)) throw ConfigError("c1_phase must be finite");
    }

    /// Soliton amplitude scale |Im lambda0|.
    double epsilon() const { return std::abs(lambda0.imag()); }

    bool solitonic(double omega0) const { return epsilon() > omega0; }
};

class AtomicState {
public:
    static constexpr double norm_tolerance = 1e-12;

    explicit AtomicState(const Vec3& amplitudes) : a_(amplitudes) {
        const double n = a_.squaredNorm();
        if (!(std::abs(n - 1.0) <= norm_tolerance))
            throw NormalizationError("atomic state norm deviates from 1 by " +
                                     std::to_string(std::abs(n - 1.0)));
    }

    static AtomicState ground() { return AtomicState(Vec3(1.0, 0.0, 0.0)); }

    const Vec3& amplitudes() const { return a_; }
    cplx operator[](int i) const { return a_(i); }

private:
    Vec3 a_;
};

struct Populations {
    double p1, p2, p3;
};

inline Populations populations(const Vec3& amplitudes) {
    const double n = amplitudes.squaredNorm();
    if (!(std::abs(n - 1.0) <= AtomicState::norm_tolerance))
        throw NormalizationError("populations requested for a non-normalized state (norm^2 = " +
                                 std::to_string(n) + ")");
    return {std::norm(amplitudes(0)), std::norm(amplitudes(1)), std::norm(amplitudes(2))};
}

inline Populations populations(const AtomicState& state) { return populations(state.amplitudes()); }

class DensityMatrix {
public:
    static constexpr double tolerance = 1e-12;

    explicit DensityMatrix(const Mat3& m) : m_(m) {
        if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > tolerance)
            throw NormalizationError("density matrix is not Hermitian");
        if (std::abs(m_.trace() - 1.0) > tolerance)
            throw NormalizationError("density matrix trace deviates from 1");
    }

    static DensityMatrix pure(const AtomicState& s) {
        return DensityMatrix(s.amplitudes() * s.amplitudes().adjoint());
    }

    const Mat3& matrix() const { return m_; }
    cplx operator()(int i, int j) const { return m_(i, j); }

    /// Max-abs entry of rho^2 - rho.
    double idempotency_defect() const { return (m_ * m_ - m_).cwiseAbs().maxCoeff(); }
    bool is_pure(double tol = 1e-10) const { return idempotency_defect() <= tol; }

    Populations populations() const {
        return {m_(0, 0).real(), m_(1, 1).real(), m_(2, 2).real()};
    }

private:
    Mat3 m_;
};

/// Seed state of the medium on the constant background. With a slow spatial
/// phase k the state is mixed; for k = 0 it reduces to |1><1|.
inline Mat3 seed_density(const PhysicalParams& p, double zeta) {
    Mat3 rho = Mat3::Zero();
    if (p.k_phase == 0.0) {
        rho(0, 0) = 1.0;
        return rho;
    }
    const double g = p.k_phase / p.nu0;
    const double x = *p.x_excited;
    const cplx ph = std::exp(I * (p.k_phase * zeta));
    rho(0, 0) = 1.0 - g * x;
    rho(1, 1) = g * (0.5 * x + p.delta);
    rho(2, 2) = g * (0.5 * x - p.delta);
    rho(1, 2) = g * p.omega0 * std::conj(ph);
    rho(2, 1) = g * p.omega0 * ph;
    return rho;
}

/// H_I = -(Omega_a |3><1| + Omega_b |3><2|)/2 + h.c.
inline Mat3 interaction_hamiltonian(cplx omega_a, cplx omega_b) {
    Mat3 h = Mat3::Zero();
    h(2, 0) = -0.5 * omega_a;
    h(2, 1) = -0.5 * omega_b;
    h(0, 2) = std::conj(h(2, 0));
    h(1, 2) = std::conj(h(2, 1));
    return h;
}

struct Coordinates {
    double tau = 0.0;
    double zeta = 0.0;
};

struct LabPoint {
    double t = 0.0;
    double z = 0.0;
};

inline LabPoint to_lab_frame(const Coordinates& c) { return {c.tau + c.zeta, c.zeta}; }
inline Coordinates from_lab_frame(const LabPoint& p) { return {p.t - p.z, p.z}; }

/// Maps a slope dzeta/dtau of a trajectory to its lab-frame speed dz/dt.
inline double lab_speed_from_slope(double dzeta_dtau) { return dzeta_dtau / (1.0 + dzeta_dtau); }
inline double slope_from_lab_speed(double v) { return v / (1.0 - v); }

struct UnitSystem {
    double t_p = 1e-6;                 // seconds per unit of tau
    double group_velocity_ref = 1e-7;  // v_g / c setting the zeta scale
    std::optional<double> dipole_a, dipole_b, atom_density, carrier_a, carrier_b;

    static constexpr double light_speed = 299792458.0;

    double seconds(double tau) const { return tau * t_p; }
    double tau_from_seconds(double s) const { return s / t_p; }
    /// zeta is measured in units of group_velocity_ref * t_p of light travel time.
    double meters(double zeta) const { return zeta * group_velocity_ref * t_p * light_speed; }
    double zeta_from_meters(double m) const { return m / (group_velocity_ref * t_p * light_speed); }
    /// Rabi frequency in rad/s.
    double angular_frequency(double omega) const { return omega / t_p; }
    double omega_from_angular_frequency(double w) const { return w * t_p; }
};

}  // namespace slowlight
