#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cwopo {

/// A mode function with zero norm was passed where a normalizable one is needed.
class DegenerateModeError : public std::invalid_argument {
public:
    DegenerateModeError() : std::invalid_argument("degenerate mode") {}
};

/// Click conditioning was requested for a state whose trigger mode carries no
/// photons (V11 - 1 vanishes), so the conditioned state is undefined.
class NoClickInformation : public std::domain_error {
public:
    NoClickInformation() : std::domain_error("no click information") {}
};

/// A covariance matrix (or a block of one) failed a physicality or
/// positive-definiteness requirement.
class UnphysicalCovariance : public std::domain_error {
public:
    explicit UnphysicalCovariance(const std::string& what) : std::domain_error(what) {}
};

/// Base for iterative solvers that ran out of iterations.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, int iterations, double residual)
        : std::runtime_error(what), iterations_(iterations), residual_(residual) {}

    int iterations() const { return iterations_; }
    double residual() const { return residual_; }

private:
    int iterations_;
    double residual_;
};

// Non-fatal diagnostics (short-box validity etc.). The default handler
// writes to stderr; tests and the CLI may install their own.
using WarningHandler = std::function<void(std::string_view)>;

void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace cwopo
