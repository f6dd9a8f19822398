#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace slowlight {

/// Broad failure category. The CLI maps these to exit codes.
enum class ErrorKind { validation, numeric, io };

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::validation: return 2;
        case ErrorKind::numeric: return 3;
        case ErrorKind::io: return 4;
    }
    return 1;
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// --- validation ---

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class NormalizationError : public Error {
public:
    explicit NormalizationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class DegenerateParameterError : public Error {
public:
    explicit DegenerateParameterError(const std::string& what)
        : Error(ErrorKind::validation, what) {}
};

class FamilyMismatchError : public Error {
public:
    explicit FamilyMismatchError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class NotStoppingError : public Error {
public:
    explicit NotStoppingError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

// --- numeric ---

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

class BlowUpError : public Error {
public:
    BlowUpError(const std::string& what, double tau)
        : Error(ErrorKind::numeric, what + " (tau = " + std::to_string(tau) + ")"), tau_(tau) {}
    double tau() const noexcept { return tau_; }

private:
    double tau_;
};

class IterationDivergedError : public Error {
public:
    IterationDivergedError(const std::string& what, std::vector<double> history)
        : Error(ErrorKind::numeric, what), history_(std::move(history)) {}
    const std::vector<double>& residual_history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

class SingularDressingError : public Error {
public:
    SingularDressingError(const std::string& what, double tau, double zeta)
        : Error(ErrorKind::numeric, what + " at (tau, zeta) = (" + std::to_string(tau) + ", " +
                                        std::to_string(zeta) + ")"),
          tau_(tau), zeta_(zeta) {}
    double tau() const noexcept { return tau_; }
    double zeta() const noexcept { return zeta_; }

private:
    double tau_, zeta_;
};

class RidgeError : public Error {
public:
    RidgeError(const std::string& what, std::vector<double> candidates = {})
        : Error(ErrorKind::numeric, what), candidates_(std::move(candidates)) {}
    /// Candidate ridge positions (zeta) when the failure is an ambiguity.
    const std::vector<double>& candidates() const noexcept { return candidates_; }

private:
    std::vector<double> candidates_;
};

class ResolutionError : public Error {
public:
    explicit ResolutionError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

class InstabilityError : public Error {
public:
    InstabilityError(const std::string& what, double suggested_step)
        : Error(ErrorKind::numeric, what), suggested_step_(suggested_step) {}
    double suggested_step() const noexcept { return suggested_step_; }

private:
    double suggested_step_;
};

// --- io ---

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

}  // namespace slowlight
