#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "background.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "scattering.hpp"

namespace slowlight {

enum class Family { general, slow, fast, zero_background, time_dependent };

inline std::string to_string(Family f) {
    switch (f) {
        case Family::general: return "general";
        case Family::slow: return "slow";
        case Family::fast: return "fast";
        case Family::zero_background: return "zero_background";
        case Family::time_dependent: return "time_dependent";
    }
    return "unknown";
}

namespace detail {

/// sech(x) without overflow.
inline double sech(double x) {
    const double e = std::exp(-std::abs(x));
    return 2.0 * e / (1.0 + e * e);
}

/// e^x sech(x) = 2 / (1 + e^{-2x}).
inline double exp_sech(double x) { return 2.0 / (1.0 + std::exp(-2.0 * x)); }

/// log c with log 0 = -infinity, so that e^{phase} vanishes cleanly.
inline cplx log_coefficient(cplx c) {
    if (c == 0.0) return {-std::numeric_limits<double>::infinity(), 0.0};
    return std::log(c);
}

inline Mat3 adjugate(const Mat3& m) {
    Mat3 a;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
            const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
            a(i, j) = m(r0, c0) * m(r1, c1) - m(r0, c1) * m(r1, c0);
        }
    return a;
}

}  // namespace detail

/// Seed ingredients of the fundamental matrix at one (tau, zeta):
/// (Phi0)_11 = e^{log11}, T = (I + W) e^{diag(z11, z22)} with W = [[0, -wbar], [w, 0]].
/// wbar is the reflected coefficient conj(w(tau, lambda*)).
struct FundamentalData {
    cplx log11;
    cplx z11, z22;
    cplx w, wbar;
    cplx omega;
};

/// Per-tau cache so a sweep over zeta evaluates the scattering data once.
struct TauColumn {
    double tau;
    WZ wz;
    cplx omega;
};

/// Fundamental solution Phi0 of the linear pair on the seed background.
/// On a constant background the slow spatial phase k is carried by the shifted
/// time tau + k zeta / (lambda - Delta) and the sigma_3 correction. On a
/// time-dependent background (k = 0) the third column is a stand-in: it keeps
/// T invertible and grows like the second column so Psi1 stays well conditioned.
/// The dressing does not depend on it when c3 = 0.
class FundamentalMatrix {
public:
    FundamentalMatrix(const PhysicalParams& params, cplx lambda)
        : params_(params), lambda_(lambda), constant_(constant_background(lambda, params.omega0)) {
        params_.validate();
        check_pole();
    }

    FundamentalMatrix(const PhysicalParams& params, std::shared_ptr<const ScatteringSolution> sc)
        : params_(params), lambda_(sc->lambda()), scattering_(std::move(sc)) {
        params_.validate();
        if (params_.k_phase != 0.0)
            throw ConfigError("time-dependent backgrounds require k_phase = 0");
        check_pole();
    }

    cplx lambda() const { return lambda_; }
    const PhysicalParams& params() const { return params_; }
    bool constant() const { return !scattering_; }

    TauColumn column(double tau) const {
        if (!scattering_) return {tau, {constant_->w0, constant_->z_rate * tau}, params_.omega0};
        return {tau, (*scattering_)(tau), scattering_->profile()(tau)};
    }

    FundamentalData data(const TauColumn& col, double zeta) const {
        const cplx lam = lambda_;
        const cplx inv = 1.0 / (lam - params_.delta);
        FundamentalData d;
        if (scattering_) {
            d.log11 = 0.5 * I * (lam * col.tau + params_.nu0 * zeta * inv);
            d.z11 = 0.5 * I * lam * col.tau + col.wz.z;
            d.z22 = d.z11;
            d.w = col.wz.w;
            d.wbar = std::conj(col.wz.w);
            d.omega = col.omega;
            return d;
        }
        const double k = params_.k_phase;
        const double x = k != 0.0 ? *params_.x_excited : 0.0;
        const cplx shifted = col.tau + k * zeta * inv;
        const cplx common = 0.25 * I * k * x * zeta * inv;
        const cplx spin = 0.5 * I * k * zeta;
        d.log11 = 0.5 * I * (lam * col.tau + (params_.nu0 - k * x) * zeta * inv);
        d.z11 = 0.5 * I * lam * shifted + constant_->z_rate * shifted + common - spin;
        d.z22 = -0.5 * I * lam * shifted - constant_->z_rate * shifted + common + spin;
        const cplx phase = std::exp(I * (k * zeta));
        d.w = constant_->w0 * phase;
        d.wbar = constant_->w0 * std::conj(phase);
        d.omega = params_.omega0 * phase;
        return d;
    }

    FundamentalData data(double tau, double zeta) const { return data(column(tau), zeta); }

    Mat3 operator()(double tau, double zeta) const { return assemble(data(tau, zeta)); }

    /// (Phi0^{-1})^dagger, the solution at lambda* paired with Phi0.
    Mat3 companion(double tau, double zeta) const {
        const auto d = data(tau, zeta);
        const cplx det = 1.0 + d.w * d.wbar;
        Mat3 c = Mat3::Zero();
        c(0, 0) = std::conj(std::exp(-d.log11));
        const cplx ia = std::exp(-d.z11), ib = std::exp(-d.z22);
        c(1, 1) = std::conj(ia / det);
        c(2, 1) = std::conj(d.wbar * ia / det);
        c(1, 2) = -std::conj(d.w * ib / det);
        c(2, 2) = std::conj(ib / det);
        return c;
    }

    static Mat3 assemble(const FundamentalData& d) {
        Mat3 m = Mat3::Zero();
        const cplx a = std::exp(d.z11), b = std::exp(d.z22);
        m(0, 0) = std::exp(d.log11);
        m(1, 1) = a;
        m(2, 1) = d.w * a;
        m(1, 2) = -d.wbar * b;
        m(2, 2) = b;
        return m;
    }

private:
    void check_pole() const {
        if (lambda_ == cplx(params_.delta))
            throw DomainError("lambda equals the detuning: the zeta exponent has a pole");
    }

    PhysicalParams params_;
    cplx lambda_;
    std::optional<ConstantScattering> constant_;
    std::shared_ptr<const ScatteringSolution> scattering_;
};

/// Psi1 and Xi(Delta) = Psi1 (L1 - Delta) Psi1^{-1}, L1 = diag(lambda*, lambda*, lambda).
/// Columns of Psi1 are normalized to unit length; Xi does not depend on their scale.
class DressingMatrix {
public:
    DressingMatrix(const Mat3& phi, const Mat3& companion, cplx lambda, cplx c1, cplx c2, cplx c3,
                   double tau = 0.0, double zeta = 0.0)
        : lambda_(lambda) {
        psi_.col(2) = c1 * phi.col(0) + c2 * phi.col(1) + c3 * phi.col(2);
        psi_.col(0) = std::conj(c2 + c3) * companion.col(0) -
                      std::conj(c1) * (companion.col(1) + companion.col(2));
        psi_.col(1) = std::conj(c3) * companion.col(1) - std::conj(c2) * companion.col(2);
        for (int j = 0; j < 3; ++j) {
            const double n = psi_.col(j).norm();
            if (!(n > 0.0) || !std::isfinite(n))
                throw SingularDressingError("dressing column " + std::to_string(j + 1) +
                                                " is zero or not finite",
                                            tau, zeta);
            psi_.col(j) /= n;
        }
        const Mat3 adj = detail::adjugate(psi_);
        det_ = psi_(0, 0) * adj(0, 0) + psi_(0, 1) * adj(1, 0) + psi_(0, 2) * adj(2, 0);
        if (!(std::abs(det_) > singular_threshold))
            throw SingularDressingError("dressing matrix is singular (|det| = " +
                                            std::to_string(std::abs(det_)) + ")",
                                        tau, zeta);
        inverse_ = adj / det_;
    }

    static constexpr double singular_threshold = 1e-13;

    const Mat3& psi1() const { return psi_; }
    const Mat3& psi1_inverse() const { return inverse_; }
    cplx determinant() const { return det_; }
    cplx lambda() const { return lambda_; }

    Mat3 xi(double delta) const { return psi_ * spectral(delta).asDiagonal() * inverse_; }
    Mat3 xi_inverse(double delta) const {
        return psi_ * spectral(delta).cwiseInverse().asDiagonal() * inverse_;
    }

private:
    Vec3 spectral(double delta) const {
        const cplx lc = std::conj(lambda_);
        return Vec3(lc - delta, lc - delta, lambda_ - delta);
    }

    cplx lambda_;
    Mat3 psi_;
    Mat3 inverse_;
    cplx det_;
};

inline DressingMatrix dressing_matrix(const FundamentalMatrix& fm, const SpectralConfig& spectral,
                                      double tau, double zeta) {
    return DressingMatrix(fm(tau, zeta), fm.companion(tau, zeta), fm.lambda(),
                          std::exp(I * spectral.c1_phase), spectral.c2, spectral.c3, tau, zeta);
}

struct DressedPoint {
    cplx omega_a;
    cplx omega_b;
    Mat3 rho;
    /// Present when the seed state is pure (k_phase = 0).
    std::optional<Vec3> psi;
};

/// Phases of the two soliton components at one point.
struct DressingPhases {
    cplx phi2, phi3;
    cplx w, wbar;
    cplx omega;
};

/// Dressed fields and atomic state for one soliton configuration.
class DressedSolution {
public:
    DressedSolution(Family family, PhysicalParams params, SpectralConfig spectral,
                    std::shared_ptr<const FundamentalMatrix> fm, BackgroundProfile profile)
        : family_(family), params_(std::move(params)), spectral_(std::move(spectral)),
          fm_(std::move(fm)), profile_(std::move(profile)) {
        if (family_ == Family::slow || family_ == Family::time_dependent) spectral_.c3 = 0.0;
        if (family_ == Family::fast) spectral_.c2 = 0.0;
        log_c2_ = detail::log_coefficient(spectral_.c2);
        log_c3_ = detail::log_coefficient(spectral_.c3);
    }

    Family family() const { return family_; }
    const PhysicalParams& params() const { return params_; }
    /// Coefficients actually used: the slow and time-dependent families fix c3 = 0,
    /// the fast family fixes c2 = 0.
    const SpectralConfig& spectral() const { return spectral_; }
    const BackgroundProfile& profile() const { return profile_; }
    const FundamentalMatrix& fundamental() const { return *fm_; }
    cplx lambda() const { return spectral_.lambda0; }

    TauColumn column(double tau) const { return fm_->column(tau); }

    DressingPhases phases(const TauColumn& col, double zeta) const {
        const auto d = fm_->data(col, zeta);
        return {log_c2_ + d.z11 - d.log11, log_c3_ + d.z22 - d.log11, d.w, d.wbar, d.omega};
    }
    DressingPhases phases(double tau, double zeta) const { return phases(column(tau), zeta); }

    /// Slow phase Re phi2 + log sqrt(1 + |w|^2).
    double slow_phase(double tau, double zeta) const {
        const auto p = phases(tau, zeta);
        return p.phi2.real() + 0.5 * std::log1p(std::norm(p.w));
    }
    /// Fast phase Re phi3 + log sqrt(1 + |wbar|^2).
    double fast_phase(double tau, double zeta) const {
        const auto p = phases(tau, zeta);
        return p.phi3.real() + 0.5 * std::log1p(std::norm(p.wbar));
    }

    DressedPoint operator()(double tau, double zeta) const { return evaluate(column(tau), zeta); }

    DressedPoint evaluate(const TauColumn& col, double zeta) const {
        const auto ph = phases(col, zeta);
        switch (family_) {
            case Family::slow:
            case Family::time_dependent: return slow_point(ph, zeta);
            case Family::fast: return fast_point(ph, zeta);
            case Family::zero_background: return zero_background_point(ph, zeta);
            case Family::general: break;
        }
        return general_point(ph, zeta);
    }

    /// Same quantities through Psi1 and Xi, without the closed forms.
    DressedPoint generic(double tau, double zeta) const {
        const auto col = column(tau);
        const auto d = fm_->data(col, zeta);
        const DressingMatrix dm(FundamentalMatrix::assemble(d), fm_->companion(tau, zeta), lambda(),
                                std::exp(I * spectral_.c1_phase), spectral_.c2, spectral_.c3, tau,
                                zeta);
        const Mat3 x0 = dm.xi(0.0);
        const Mat3 xd = dm.xi(params_.delta);
        const double scale = std::abs(lambda() - params_.delta);
        DressedPoint p;
        p.omega_a = -2.0 * x0(2, 0);
        p.omega_b = d.omega - 2.0 * x0(2, 1);
        if (params_.k_phase == 0.0) {
            const Vec3 psi = xd.col(0) / scale;
            p.psi = psi;
            p.rho = psi * psi.adjoint();
        } else {
            p.rho = xd * seed_density(params_, zeta) * dm.xi_inverse(params_.delta);
        }
        return p;
    }

    /// Normalization N with every exponential scaled by e^{-2m}, m = max(0, Re phi2, Re phi3).
    /// Returns log N.
    double log_normalization(double tau, double zeta) const {
        const auto ph = phases(tau, zeta);
        const double m = scale_of(ph);
        return std::log(scaled_normalization(ph, m)) + 2.0 * m;
    }

    /// Ratio of the literal printed normalization (cross term without the factor 2,
    /// (1 + |w|^2) on both exponentials) to the one that normalizes the state.
    double printed_normalization_ratio(double tau, double zeta) const {
        const auto ph = phases(tau, zeta);
        const double m = scale_of(ph);
        const cplx a = std::exp(ph.phi2 - m), b = std::exp(ph.phi3 - m);
        const double printed = std::exp(-2.0 * m) +
                               ((ph.w - std::conj(ph.wbar)) * a * std::conj(b)).real() +
                               (1.0 + std::norm(ph.w)) * (std::norm(a) + std::norm(b));
        return printed / scaled_normalization(ph, m);
    }

private:
    static double scale_of(const DressingPhases& ph) {
        return std::max({0.0, ph.phi2.real(), ph.phi3.real()});
    }

    static double scaled_normalization(const DressingPhases& ph, double m) {
        const cplx a = std::exp(ph.phi2 - m), b = std::exp(ph.phi3 - m);
        return std::exp(-2.0 * m) + 2.0 * ((ph.w - std::conj(ph.wbar)) * a * std::conj(b)).real() +
               (1.0 + std::norm(ph.w)) * std::norm(a) + (1.0 + std::norm(ph.wbar)) * std::norm(b);
    }

    double level_scale() const { return std::abs(lambda() - params_.delta); }

    /// Fills the state. For a pure seed the closed-form column is used; otherwise
    /// rho = U rho0 U^dagger with U = Xi(Delta)/|lambda - Delta| from the projector form.
    void finish_state(DressedPoint& p, const Vec3& psi, const DressingPhases& ph, double m,
                      double zeta) const {
        if (params_.k_phase == 0.0) {
            p.psi = psi;
            p.rho = psi * psi.adjoint();
            return;
        }
        const cplx e = std::exp(-I * spectral_.c1_phase);
        const cplx a = std::exp(ph.phi2 - m), b = std::exp(ph.phi3 - m);
        const Vec3 v(std::exp(-m), e * (a - ph.wbar * b), e * (ph.w * a + b));
        const cplx lam = lambda();
        const Mat3 u = ((std::conj(lam) - params_.delta) * Mat3::Identity() +
                        (lam - std::conj(lam)) * v * v.adjoint() / v.squaredNorm()) /
                       level_scale();
        p.rho = u * seed_density(params_, zeta) * u.adjoint();
    }

    DressedPoint general_point(const DressingPhases& ph, double zeta) const {
        const cplx lam = lambda(), lc = std::conj(lam);
        const double m = scale_of(ph);
        const double n = scaled_normalization(ph, m);
        const cplx e = std::exp(-I * spectral_.c1_phase);
        const cplx a = std::exp(ph.phi2 - m), b = std::exp(ph.phi3 - m);
        const cplx up = ph.w * a + b;
        const cplx down = a - ph.wbar * b;
        const double em = std::exp(-m);
        DressedPoint p;
        p.omega_a = 2.0 * (lc - lam) * e * up * em / n;
        p.omega_b = ph.omega + 2.0 * (lc - lam) * up * std::conj(down) / n;
        const double s = level_scale();
        const Vec3 psi(((lc - params_.delta) + (lam - lc) * em * em / n) / s,
                       (lam - lc) * e * down * em / (n * s), (lam - lc) * e * up * em / (n * s));
        finish_state(p, psi, ph, m, zeta);
        return p;
    }

    DressedPoint slow_point(const DressingPhases& ph, double zeta) const {
        const cplx lam = lambda(), lc = std::conj(lam);
        const double root = std::sqrt(1.0 + std::norm(ph.w));
        const double phi = ph.phi2.real() + std::log(root);
        const cplx rot = std::exp(I * (ph.phi2.imag() - spectral_.c1_phase));
        const double sech = detail::sech(phi);
        const double s = level_scale();
        DressedPoint p;
        p.omega_a = (lc - lam) * ph.w * rot * sech / root;
        p.omega_b = ph.omega - (lam - lc) * ph.w * detail::exp_sech(phi) / (root * root);
        const Vec3 psi((lam.real() - params_.delta - I * lam.imag() * std::tanh(phi)) / s,
                       (lam - lc) * rot * sech / (2.0 * root * s), -p.omega_a / (2.0 * s));
        finish_state(p, psi, ph, std::max({0.0, ph.phi2.real()}), zeta);
        return p;
    }

    DressedPoint fast_point(const DressingPhases& ph, double zeta) const {
        const cplx lam = lambda(), lc = std::conj(lam);
        const double root = std::sqrt(1.0 + std::norm(ph.wbar));
        const double phi = ph.phi3.real() + std::log(root);
        const cplx rot = std::exp(I * (ph.phi3.imag() - spectral_.c1_phase));
        const double s = level_scale();
        DressedPoint p;
        p.omega_a = (lc - lam) * rot * detail::sech(phi) / root;
        p.omega_b = ph.omega + (lam - lc) * std::conj(ph.wbar) * detail::exp_sech(phi) / (root * root);
        const Vec3 psi((lam.real() - params_.delta - I * lam.imag() * std::tanh(phi)) / s,
                       ph.wbar * p.omega_a / (2.0 * s), -p.omega_a / (2.0 * s));
        finish_state(p, psi, ph, std::max({0.0, ph.phi3.real()}), zeta);
        return p;
    }

    DressedPoint zero_background_point(const DressingPhases& ph, double zeta) const {
        const cplx lam = lambda(), lc = std::conj(lam);
        const double m = scale_of(ph);
        const cplx a = std::exp(ph.phi2 - m), b = std::exp(ph.phi3 - m);
        const double em = std::exp(-m);
        const double n = em * em + std::norm(a) + std::norm(b);
        const cplx e = std::exp(-I * spectral_.c1_phase);
        const double s = level_scale();
        DressedPoint p;
        p.omega_a = 2.0 * (lc - lam) * e * b * em / n;
        p.omega_b = 2.0 * (lc - lam) * b * std::conj(a) / n;
        const Vec3 psi(((lc - params_.delta) + (lam - lc) * em * em / n) / s,
                       (lam - lc) * e * a * em / (n * s), -p.omega_a / (2.0 * s));
        finish_state(p, psi, ph, m, zeta);
        return p;
    }

    Family family_;
    PhysicalParams params_;
    SpectralConfig spectral_;
    std::shared_ptr<const FundamentalMatrix> fm_;
    BackgroundProfile profile_;
    cplx log_c2_, log_c3_;
};

inline FundamentalMatrix fundamental_matrix(const PhysicalParams& params, cplx lambda) {
    return FundamentalMatrix(params, lambda);
}

inline FundamentalMatrix fundamental_matrix(const PhysicalParams& params,
                                            std::shared_ptr<const ScatteringSolution> sc) {
    return FundamentalMatrix(params, std::move(sc));
}

namespace detail {

inline DressedSolution constant_family(Family f, const PhysicalParams& params,
                                       const SpectralConfig& spectral) {
    params.validate();
    spectral.validate();
    auto fm = std::make_shared<const FundamentalMatrix>(params, spectral.lambda0);
    return DressedSolution(f, params, spectral, std::move(fm),
                           BackgroundProfile(ConstantField{params.omega0, params.k_phase}));
}

inline void require_constant(const BackgroundProfile& profile, const PhysicalParams& params,
                             const char* who) {
    if (!profile.holds<ConstantField>())
        throw FamilyMismatchError(std::string(who) + " needs a constant background, got " +
                                  profile.kind());
    if (std::abs(profile.omega_minus() - params.omega0) > 1e-12)
        throw ConfigError(std::string(who) + ": background amplitude differs from omega0");
}

}  // namespace detail

/// Slow-light soliton (c3 = 0) on the constant background.
inline DressedSolution slow_soliton(const PhysicalParams& params, const SpectralConfig& spectral) {
    return detail::constant_family(Family::slow, params, spectral);
}
inline DressedSolution slow_soliton(const PhysicalParams& params, const SpectralConfig& spectral,
                                    const BackgroundProfile& profile) {
    detail::require_constant(profile, params, "slow soliton");
    return slow_soliton(params, spectral);
}

/// Fast soliton (c2 = 0) on the constant background.
inline DressedSolution fast_soliton(const PhysicalParams& params, const SpectralConfig& spectral) {
    return detail::constant_family(Family::fast, params, spectral);
}
inline DressedSolution fast_soliton(const PhysicalParams& params, const SpectralConfig& spectral,
                                    const BackgroundProfile& profile) {
    detail::require_constant(profile, params, "fast soliton");
    return fast_soliton(params, spectral);
}

/// Both components on the constant background.
inline DressedSolution dressed_general(const PhysicalParams& params, const SpectralConfig& spectral) {
    return detail::constant_family(Family::general, params, spectral);
}
inline DressedSolution dressed_general(const PhysicalParams& params, const SpectralConfig& spectral,
                                       const ScatteringSolution& scattering) {
    detail::require_constant(scattering.profile(), params, "general dressing");
    if (scattering.lambda() != spectral.lambda0)
        throw ConfigError("scattering data was built for a different lambda");
    return dressed_general(params, spectral);
}

/// Stored polariton and fast pulse without a control field.
inline DressedSolution zero_background_memory(const PhysicalParams& params,
                                              const SpectralConfig& spectral) {
    if (params.omega0 != 0.0)
        throw FamilyMismatchError("zero-background family needs omega0 = 0");
    return detail::constant_family(Family::zero_background, params, spectral);
}

/// One slow soliton on an arbitrary background, driven by its scattering data.
inline DressedSolution one_soliton_timedep(const PhysicalParams& params, const SpectralConfig& spectral,
                                           std::shared_ptr<const ScatteringSolution> scattering) {
    params.validate();
    spectral.validate();
    if (!scattering) throw ConfigError("missing scattering data");
    if (scattering->lambda() != spectral.lambda0)
        throw ConfigError("scattering data was built for a different lambda");
    if (std::abs(scattering->omega_minus() - params.omega0) > 1e-12)
        throw ConfigError("background amplitude at -infinity differs from omega0");
    auto fm = std::make_shared<const FundamentalMatrix>(params, scattering);
    auto profile = scattering->profile();
    return DressedSolution(Family::time_dependent, params, spectral, std::move(fm),
                           std::move(profile));
}

}  // namespace slowlight
