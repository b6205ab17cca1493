#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cwopo/errors.hpp"
#include "cwopo/gaussian_conditioning.hpp"
#include "cwopo/mode_functions.hpp"
#include "cwopo/opo_model.hpp"

namespace cwopo {

enum class ObjectiveMode {
    fixed_point,       ///< integral-equation iteration, T = 0 only
    gradient_ascent,   ///< projected ascent on the unit sphere, any window
};

struct OptimizerConfig {
    double alpha = 0.5;  ///< relaxation weight on the previous iterate, in [0, 1)
    double tol = 1e-9;   ///< max-norm change of f between iterations
    int max_iter = 10000;
    ObjectiveMode mode = ObjectiveMode::fixed_point;
    double half_width = 10.0;   ///< grid covers t_c +- half_width
    std::size_t samples = 801;  ///< odd, so t_c is a node
    /// Starting mode; defaults to exp_mode on the grid above. When set, its
    /// grid is used instead.
    std::optional<ModeGrid> start;

    void validate() const;
};

struct TraceEntry {
    int iteration;
    double fidelity;
    double residual;
};

struct OptimizationResult {
    ModeGrid mode;
    double fidelity;
    int iterations;
    double residual;
    std::vector<TraceEntry> trace;
};

/// Thrown when an optimizer runs out of iterations; keeps the last iterate.
class OptimizerNotConverged : public ConvergenceError {
public:
    explicit OptimizerNotConverged(OptimizationResult last);
    const OptimizationResult& last() const { return last_; }

private:
    OptimizationResult last_;
};

struct CCoefficients {
    double c1;
    double c2;
};

/// Coefficients of the stationarity equation for the optimal mode, evaluated
/// from a click-signal covariance. Throws NoClickInformation for V11 <= 1.
CCoefficients c_coefficients(const Cov& cov4, const OpoParams& params);

/// One-photon fidelity after click and vacuum conditioning as a function of
/// the signal grid coefficients. The trigger side is factorized once, so a
/// value or gradient costs O(n + m n + m^2). Agrees with conditioned_fidelity
/// under the short-box model.
class FidelityObjective {
public:
    FidelityObjective(const OpoParams& params, const ClickMode& click, const WindowSpec& window,
                      const GridSpec& grid);

    struct Elements {
        double v11;
        double v33;
        double v13;
    };

    /// Conditioned V11, V33 and V13 (V14 vanishes for real modes).
    Elements elements(const Eigen::VectorXd& f) const;
    double value(const Eigen::VectorXd& f) const;
    /// Euclidean gradient with respect to the (unnormalized) coefficients.
    double value_and_gradient(const Eigen::VectorXd& f, Eigen::VectorXd& grad) const;

    const GridSpec& grid() const { return grid_; }

private:
    OpoParams params_;
    GridSpec grid_;
    ExpKernel normal_;
    double u_;               // conditioned V11 - 1
    Eigen::VectorXd v13_;    // conditioned V13 = v13_ . f
    Eigen::MatrixXd boxes_;  // scaled convolution rows of the vacuum boxes
    Eigen::LLT<Eigen::MatrixXd> vac_;
};

/// Integral-equation iteration for T = 0, started from exp_mode. Each step
/// relaxes towards the normalized right-hand side; when that would lower the
/// fidelity the relaxation weight is raised until it does not, so fidelity
/// never decreases. For epsilon = 0 the exponential mode is returned as is.
OptimizationResult optimize_fixed_point(const OpoParams& params, const ClickMode& click,
                                        const OptimizerConfig& cfg = {});

/// Projected gradient ascent (Barzilai-Borwein step, Armijo backtracking) on
/// the unit sphere of the grid, started from exp_mode. Any window.
OptimizationResult optimize_general(const OpoParams& params, const ClickMode& click, const WindowSpec& window,
                                    const OptimizerConfig& cfg = {});

/// Dispatches on cfg.mode; fixed_point requires an empty window.
OptimizationResult optimize(const OpoParams& params, const ClickMode& click, const WindowSpec& window,
                            const OptimizerConfig& cfg = {});

/// |dF/d delta| at delta = 0 for f -> e^{i theta0} (f + i delta g), maximized
/// over a few smooth g, by central differences. Vanishes for constant phase.
double phase_stationarity_check(const OpoParams& params, const ModeGrid& f, const ClickMode& click,
                                std::optional<double> phase = std::nullopt);

/// Fidelity of a complex mode after click conditioning (T = 0).
double fidelity_complex(const OpoParams& params, const ComplexMode& f, const ClickMode& click);

/// The epsilon -> 0+ limit of the click-conditioned fidelity of f,
/// (eta_s / 2) (int f(t) exp(-|t - t_c| / 2) dt)^2.
double zero_intensity_fidelity(const OpoParams& params, const ModeGrid& f, const ClickMode& click);

}  // namespace cwopo
