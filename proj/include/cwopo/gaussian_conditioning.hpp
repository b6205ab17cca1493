#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cwopo/mode_functions.hpp"
#include "cwopo/opo_model.hpp"

namespace cwopo {

/// Covariance matrix of a zero-mean Gaussian state over quadrature pairs
/// (x_i, p_i), with V_ij = <y_i y_j> + <y_j y_i> so that vacuum is the
/// identity. Mode order for the heralding problem is click, signal, then the
/// vacuum boxes in time order.
class Cov {
public:
    /// Throws std::invalid_argument unless the matrix is 2*labels.size()
    /// square, finite and symmetric to 1e-12 (relative to its largest entry).
    Cov(std::vector<std::string> labels, Eigen::MatrixXd matrix);

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    const std::vector<std::string>& labels() const { return labels_; }
    std::size_t modes() const { return labels_.size(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return matrix_(i, j); }

    bool is_positive_definite() const;

private:
    std::vector<std::string> labels_;
    Eigen::MatrixXd matrix_;
};

/// Symplectic eigenvalues (ascending) of a 2n x 2n positive definite matrix in
/// the vacuum = identity convention; a physical state has all of them >= 1.
Eigen::VectorXd symplectic_eigenvalues(const Eigen::MatrixXd& v);

struct Interval {
    double start;
    double end;

    double centre() const { return 0.5 * (start + end); }
    double width() const { return end - start; }
};

/// Dark window around the click: the set of vacuum boxes on which no click
/// was registered.
class WindowSpec {
public:
    /// No dark window (T = 0).
    WindowSpec() = default;

    /// Total dark time T split evenly before and after the click box. The box
    /// width defaults to the click-box width. T / (2 dt_box) must be an
    /// integer to within 1e-6.
    static WindowSpec symmetric(double total, std::optional<double> box_width = std::nullopt);

    /// Arbitrary box list (asymmetric windows, interrupted windows, m = 1 tests).
    static WindowSpec explicit_boxes(std::vector<Interval> boxes);

    /// Box intervals in time order. Throws std::invalid_argument if a box
    /// overlaps the click box or the box count is not integral.
    std::vector<Interval> boxes(const ClickMode& click) const;

    double total_duration() const;
    bool is_symmetric() const { return !explicit_; }
    std::optional<double> box_width() const { return box_width_; }

private:
    double total_ = 0.0;
    std::optional<double> box_width_;
    bool explicit_ = false;
    std::vector<Interval> explicit_boxes_;
};

enum class BoxIntegration {
    short_box,  ///< trigger boxes as weighted deltas at their centres
    exact,      ///< finite boxes integrated exactly (convergence studies)
};

struct CovOptions {
    BoxIntegration boxes = BoxIntegration::short_box;
    /// Efficiency applied to the click mode only. Defaults to eta_t. Click
    /// conditioned quantities do not depend on it, which lets eta_t = 0 be
    /// evaluated as its eta_t -> 0+ limit.
    std::optional<double> click_efficiency;
};

/// Complex signal mode re(t) + i im(t); only used to probe phase stationarity.
struct ComplexMode {
    ModeGrid re;
    ModeGrid im;
};

/// 4 x 4 covariance of (click, signal).
Cov build_click_signal_cov(const OpoParams& params, const ModeGrid& f2, const ClickMode& click,
                           const CovOptions& options = {});
Cov build_click_signal_cov(const OpoParams& params, const ComplexMode& f2, const ClickMode& click,
                           const CovOptions& options = {});

/// (2m + 4)-dimensional covariance of click, signal and m vacuum boxes.
Cov build_extended_cov(const OpoParams& params, const ModeGrid& f2, const ClickMode& click,
                       const WindowSpec& window, const CovOptions& options = {});

/// Trigger-only covariance of the click and the m vacuum boxes (2m + 2).
Cov build_trigger_cov(const OpoParams& params, const ClickMode& click, const WindowSpec& window,
                      const CovOptions& options = {});

/// Conditions the first two modes on vacuum outcomes in all remaining ones:
/// V4 - C (V2m + I)^{-1} C^T. Returns the input unchanged when there are no
/// further modes. Throws UnphysicalCovariance if V2m + I is not positive
/// definite.
Cov vacuum_condition(const Cov& cov);

/// Rotationally symmetric Wigner function (a1 + a2 r^2) exp(-a3 r^2).
struct RadialWigner {
    double a1;
    double a2;
    double a3;

    double operator()(double x, double p) const;
    /// Plane integral, pi (a1/a3 + a2/a3^2).
    double normalization() const;
};

/// Signal Wigner function after a click in mode 0. Throws NoClickInformation
/// when V11 - 1 <= 1e-12.
RadialWigner click_condition(const Cov& cov4);

double wigner_eval(const RadialWigner& w, double x, double p);
double wigner_one_photon(double x, double p);

/// One-photon fidelity 2 pi int W_click W_1 of the click-conditioned signal.
double fidelity_one_photon(const Cov& cov4);

/// Click and vacuum conditioned (click, signal) covariance for the given
/// configuration. With eta_t = 0 the click mode is evaluated at unit
/// efficiency (the eta_t -> 0+ limit; the vacuum boxes then decouple).
Cov conditioned_covariance(const OpoParams& params, const ModeGrid& f2, const ClickMode& click,
                           const WindowSpec& window, BoxIntegration boxes = BoxIntegration::short_box);

double conditioned_fidelity(const OpoParams& params, const ModeGrid& f2, const ClickMode& click,
                            const WindowSpec& window = {},
                            BoxIntegration boxes = BoxIntegration::short_box);

}  // namespace cwopo
