#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cwopo/opo_model.hpp"

namespace cwopo {

/// Geometry of a uniform sample grid.
struct GridSpec {
    double t_start = 0.0;
    double dt = 1.0;
    std::size_t size = 0;

    double time(std::size_t i) const { return t_start + dt * static_cast<double>(i); }
    double t_end() const { return time(size - 1); }
};

/// Real temporal mode function sampled on a uniform grid. Between samples the
/// function is linear; outside [t_start, t_end] it is zero.
class ModeGrid {
public:
    /// Throws std::invalid_argument for dt <= 0, fewer than three samples or
    /// non-finite values.
    ModeGrid(double t_start, double dt, std::vector<double> values);
    ModeGrid(const GridSpec& grid, const Eigen::VectorXd& values);

    GridSpec grid() const { return {t_start_, dt_, values_.size()}; }
    double t_start() const { return t_start_; }
    double t_end() const { return t_start_ + dt_ * static_cast<double>(values_.size() - 1); }
    double dt() const { return dt_; }
    std::size_t size() const { return values_.size(); }
    double time(std::size_t i) const { return t_start_ + dt_ * static_cast<double>(i); }

    std::span<const double> values() const { return values_; }
    Eigen::Map<const Eigen::VectorXd> vector() const {
        return {values_.data(), static_cast<Eigen::Index>(values_.size())};
    }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Piecewise-linear interpolant, zero outside the support.
    double operator()(double t) const;

    ModeGrid scaled(double factor) const;
    ModeGrid shifted(double delta) const;

private:
    double t_start_;
    double dt_;
    std::vector<double> values_;
};

/// Trigger click box: centre t_c and width dt_c.
struct ClickMode {
    double t_c = 0.0;
    double dt_c = 0.02;
};

/// Exact integral of f^2 for the piecewise-linear interpolant.
double norm_squared(const ModeGrid& f);

/// Exact integral of f g; the grids need not coincide.
double inner_product(const ModeGrid& f, const ModeGrid& g);

/// Rescales to unit L2 norm. Throws DegenerateModeError on a zero function.
ModeGrid normalize(const ModeGrid& f);

/// sqrt(gamma/2) exp(-gamma |t - t_c| / 2) sampled on t_c +- half_width and
/// normalized over the truncated support. n must be odd and >= 3 so that the
/// cusp at t_c is a sample.
ModeGrid exp_mode(double t_c, double half_width, std::size_t n);

/// Box function of height 1/sqrt(width) centred on t_c (the finite click box).
ModeGrid box_mode(double t_c, double width);

/// Double integral f(t) k(t - t') g(t') over the plane, exact for the
/// piecewise-linear interpolants. Cost is linear in the merged sample count.
double kernel_quadratic_form(const ModeGrid& f, const ModeGrid& g, const ExpKernel& kernel);

/// Integral f(t') k(t - t') dt', exact per linear segment.
double kernel_convolution(const ModeGrid& f, const ExpKernel& kernel, double t);

/// Weights w with kernel_convolution(f, k, t) = w . f for every f on `grid`.
Eigen::VectorXd convolution_weights(const GridSpec& grid, const ExpKernel& kernel, double t);

/// Galerkin vector (K f)_i = int phi_i(t) (k * f)(t) dt for hat functions
/// phi_i on `grid`, so that kernel_quadratic_form(g, f) = g . (K f).
Eigen::VectorXd kernel_apply(const GridSpec& grid, const Eigen::VectorXd& f, const ExpKernel& kernel);

/// Exact convolution (k * f)(t_i) at every grid node, in linear time.
Eigen::VectorXd convolution_on_grid(const GridSpec& grid, const Eigen::VectorXd& f,
                                    const ExpKernel& kernel);

/// Piecewise-linear mass matrix M (tridiagonal), M_ij = int phi_i phi_j.
Eigen::VectorXd mass_apply(const GridSpec& grid, const Eigen::VectorXd& f);
Eigen::VectorXd mass_solve(const GridSpec& grid, const Eigen::VectorXd& rhs);

/// Full width at half maximum of |f|, using linear interpolation between
/// samples around the global peak.
double full_width_half_max(const ModeGrid& f);

/// L2 distance between two unit modes, minimized over the global sign.
double l2_distance(const ModeGrid& f, const ModeGrid& g);

}  // namespace cwopo
