#pragma once

#include <stdexcept>
#include <string>

namespace tiadc {

/// Base of every error raised by the toolkit. `kind()` is a stable short tag
/// used by the command-line front end for machine-parseable error lines.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* kind() const noexcept { return "error"; }
};

class ValidationError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "validation"; }
};

class IoError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "io"; }
};

/// The perfect-reconstruction system is too ill-conditioned at some grid frequency.
class SingularDesignError : public Error {
public:
    SingularDesignError(const std::string& what, double omega)
        : Error(what), omega_(omega) {}
    const char* kind() const noexcept override { return "singular-design"; }
    double omega() const noexcept { return omega_; }

private:
    double omega_;
};

/// A calibration tone is too weak relative to the fit residual.
class UnreliableMeasurementError : public Error {
public:
    UnreliableMeasurementError(const std::string& what, double freq_hz)
        : Error(what), freq_hz_(freq_hz) {}
    const char* kind() const noexcept override { return "unreliable-measurement"; }
    double freq_hz() const noexcept { return freq_hz_; }

private:
    double freq_hz_;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

} // namespace tiadc
