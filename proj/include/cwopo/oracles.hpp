#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cwopo/gaussian_conditioning.hpp"
#include "cwopo/mode_functions.hpp"
#include "cwopo/opo_model.hpp"

// Brute-force reference implementations. Nothing here shares code with the
// closed-form paths beyond the kernel and mode evaluators.
namespace cwopo::oracle {

struct QuadResult {
    double value;
    double error;
};

/// Adaptive Gauss-Kronrod on [a, b], split at every break point inside the
/// interval. Throws ConvergenceError when the error estimate exceeds tol.
QuadResult quad1d(const std::function<double(double)>& f, double a, double b, double tol,
                  std::vector<double> breaks = {});

struct Domain2D {
    double x0, x1, y0, y1;
    std::vector<double> x_breaks;
    std::vector<double> y_breaks;
    /// Extra y break at the current x (for integrands with a cusp on y = x).
    bool diagonal_break = false;
};

/// Nested adaptive quadrature over a rectangle.
QuadResult quad2d(const std::function<double(double, double)>& f, const Domain2D& domain, double tol);

double quad_kernel_quadratic_form(const ModeGrid& f, const ModeGrid& g, const ExpKernel& kernel, double tol = 1e-9);
double quad_kernel_convolution(const ModeGrid& f, const ExpKernel& kernel, double t, double tol = 1e-10);

/// Extended covariance assembled element by element from quadrature (short
/// trigger boxes, real f2).
Eigen::MatrixXd quad_extended_cov(const OpoParams& params, const ModeGrid& f2, const ClickMode& click,
                                  const WindowSpec& window, double tol = 1e-9);

/// Wigner function of a zero-mean Gaussian with covariance V (vacuum = I).
double gaussian_wigner(const Eigen::MatrixXd& v, const Eigen::VectorXd& xi);

/// 2 pi int W W_1 over [-half, half]^2.
double fidelity_by_quadrature(const std::function<double(double, double)>& w, double half = 7.0, double tol = 1e-10);

/// Click-conditioned signal Wigner function at (x2, p2) by integrating the
/// trigger quadratures against 1/2 (x1^2 + p1^2 - 1) and dividing by the
/// click probability.
double click_wigner_by_quadrature(const Cov& cov4, double x2, double p2, double half = 9.0, double tol = 1e-9);

/// Vacuum projection by multiplying with the vacuum Wigner function of every
/// mode past the second and integrating them out (Gaussian product algebra on
/// the precision matrix). For m <= 2.
Cov direct_vacuum_projection(const Cov& cov);

/// Projects a single mode onto vacuum and drops it.
Cov project_mode_on_vacuum(const Cov& cov, std::size_t mode);

struct McConfig {
    std::uint64_t seed = 12345;
    std::size_t samples = 1000000;
    double sigma_multiplier = 3.0;
    unsigned shards = 8;

    void validate() const;
};

struct McEstimate {
    double estimate;
    double sigma;
    std::size_t samples;
    std::uint64_t seed;

    bool agrees_with(double reference, double multiplier) const;
};

/// Seeded Monte Carlo estimate of the click-and-vacuum probability of a
/// trigger-only covariance, sampling the (nonnegative) Gaussian Wigner
/// function. Shards draw from per-shard derived seeds.
McEstimate mc_vac_click(const Cov& trigger_cov, const McConfig& mc = {});

nlohmann::json report(const McEstimate& est, const McConfig& mc, double reference);
nlohmann::json report(const char* name, const QuadResult& q, double reference, double tol);

}  // namespace cwopo::oracle
