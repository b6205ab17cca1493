#include "cwopo/mode_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace cwopo {

namespace {

// F(q, s) with q = V33 - 1 and s = (V13^2 + V14^2) / (V11 - 1); this form
// avoids the cancellation in V33^2 - 1 for nearly empty signal modes.
struct FidelityParts {
    double value;
    double d_q;
    double d_s;
};

FidelityParts fidelity_qs(double q, double s) {
    const double a = 2.0 + q;
    const double a2 = a * a, a3 = a2 * a, a4 = a3 * a;
    return {
        2.0 * q / a2 + 2.0 * (2.0 - q) * s / a3,
        2.0 / a2 - 4.0 * q / a3 - 2.0 * s / a3 - 6.0 * (2.0 - q) * s / a4,
        2.0 * (2.0 - q) / a3,
    };
}

// eta_t = 0 is evaluated in its eta_t -> 0+ limit; click conditioned
// quantities are independent of the click efficiency.
OpoParams click_params(const OpoParams& params) {
    return params.eta_t() == 0.0 ? params.with_eta_t(1.0) : params;
}

double mass_norm(const GridSpec& grid, const Eigen::VectorXd& f) {
    return std::sqrt(f.dot(mass_apply(grid, f)));
}

Eigen::VectorXd normalized(const GridSpec& grid, const Eigen::VectorXd& f) {
    const double n = mass_norm(grid, f);
    if (!(n > 0.0) || !std::isfinite(n)) throw DegenerateModeError();
    return f / n;
}

std::size_t centre_index(const GridSpec& grid, double t_c) {
    const double pos = (t_c - grid.t_start) / grid.dt;
    const auto i = static_cast<long>(std::lround(pos));
    return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(grid.size) - 1));
}

void fix_sign(const GridSpec& grid, double t_c, Eigen::VectorXd& f) {
    const std::size_t c = centre_index(grid, t_c);
    double pivot = f[static_cast<Eigen::Index>(c)];
    if (pivot == 0.0) pivot = f.sum();
    if (pivot < 0.0) f = -f;
}

ModeGrid start_mode(const ClickMode& click, const OptimizerConfig& cfg) {
    if (cfg.start) return normalize(*cfg.start);
    return exp_mode(click.t_c, cfg.half_width, cfg.samples);
}

OptimizationResult finish(const OpoParams& params, const ClickMode& click, const WindowSpec& window,
                          const GridSpec& grid, Eigen::VectorXd f, int iterations, double residual,
                          std::vector<TraceEntry> trace) {
    fix_sign(grid, click.t_c, f);
    ModeGrid mode(grid, f);
    const double fidelity = conditioned_fidelity(params, mode, click, window);
    return {std::move(mode), fidelity, iterations, residual, std::move(trace)};
}

}  // namespace

void OptimizerConfig::validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("OptimizerConfig: alpha must lie in [0, 1)");
    if (!(tol > 0.0)) throw std::invalid_argument("OptimizerConfig: tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("OptimizerConfig: max_iter must be at least 1");
    if (!(half_width > 0.0)) throw std::invalid_argument("OptimizerConfig: half_width must be positive");
    if (samples < 3 || samples % 2 == 0) throw std::invalid_argument("OptimizerConfig: samples must be odd and >= 3");
}

OptimizerNotConverged::OptimizerNotConverged(OptimizationResult last)
    : ConvergenceError("optimizer did not converge", last.iterations, last.residual), last_(std::move(last)) {}

CCoefficients c_coefficients(const Cov& cov4, const OpoParams& params) {
    const auto& v = cov4.matrix();
    const double u = v(0, 0) - 1.0;
    if (!(u > 1e-12)) throw NoClickInformation();
    const double v33 = v(2, 2);
    const double s = v(0, 2) * v(0, 2) + v(0, 3) * v(0, 3);
    const double a = 1.0 + v33;
    const double a2 = a * a, a3 = a2 * a, a4 = a3 * a;
    const double c1 = 4.0 * params.eta_s() *
                      (1.0 / a2 - s / (u * a3) - 2.0 * (v33 - 1.0) / a3 - 3.0 * (3.0 - v33) * s / (u * a4));
    const double c2 = 8.0 * params.eta_s() * params.eta_t() * params.dt_c() * (3.0 - v33) / (u * a3);
    return {c1, c2};
}

FidelityObjective::FidelityObjective(const OpoParams& params, const ClickMode& click, const WindowSpec& window,
                                     const GridSpec& grid)
    : params_(params), grid_(grid), normal_(normal_kernel(params)) {
    const double click_eff = params.eta_t() == 0.0 ? 1.0 : params.eta_t();
    CovOptions options;
    options.click_efficiency = click_eff;
    const Cov trig = build_trigger_cov(params, click, window, options);
    const auto& v = trig.matrix();
    const auto m = static_cast<Eigen::Index>(trig.modes()) - 1;

    Eigen::VectorXd c1(m);
    Eigen::MatrixXd vac(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        c1[i] = v(0, 2 * (i + 1));
        for (Eigen::Index j = 0; j < m; ++j) vac(i, j) = v(2 * (i + 1), 2 * (j + 1));
    }
    vac += Eigen::MatrixXd::Identity(m, m);
    vac_.compute(vac);
    if (vac_.info() != Eigen::Success) throw UnphysicalCovariance("FidelityObjective: V2m + I is not positive definite");

    const ExpKernel anomalous = anomalous_kernel(params);
    u_ = v(0, 0) - 1.0;
    const Eigen::VectorXd wc1 = vac_.solve(c1);
    if (m > 0) u_ -= c1.dot(wc1);
    if (!(u_ > 1e-12)) throw NoClickInformation();

    v13_ = 2.0 * std::sqrt(click_eff * params.eta_s() * click.dt_c) *
           convolution_weights(grid, anomalous, click.t_c);
    const auto boxes = window.boxes(click);
    boxes_.resize(m, static_cast<Eigen::Index>(grid.size));
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& b = boxes[static_cast<std::size_t>(i)];
        const double scale = 2.0 * std::sqrt(params.eta_t() * params.eta_s() * b.width());
        boxes_.row(i) = scale * convolution_weights(grid, anomalous, b.centre()).transpose();
    }
    if (m > 0) v13_ -= boxes_.transpose() * wc1;
}

FidelityObjective::Elements FidelityObjective::elements(const Eigen::VectorXd& f) const {
    const Eigen::VectorXd kf = kernel_apply(grid_, f, normal_);
    double v33 = 1.0 + 2.0 * params_.eta_s() * f.dot(kf);
    if (boxes_.rows() > 0) {
        const Eigen::VectorXd y = boxes_ * f;
        v33 -= y.dot(vac_.solve(y));
    }
    return {1.0 + u_, v33, v13_.dot(f)};
}

double FidelityObjective::value(const Eigen::VectorXd& f) const {
    const auto e = elements(f);
    return fidelity_qs(e.v33 - 1.0, e.v13 * e.v13 / u_).value;
}

double FidelityObjective::value_and_gradient(const Eigen::VectorXd& f, Eigen::VectorXd& grad) const {
    const Eigen::VectorXd kf = kernel_apply(grid_, f, normal_);
    double v33 = 1.0 + 2.0 * params_.eta_s() * f.dot(kf);
    Eigen::VectorXd dq = 4.0 * params_.eta_s() * kf;
    if (boxes_.rows() > 0) {
        const Eigen::VectorXd y = boxes_ * f;
        const Eigen::VectorXd z = vac_.solve(y);
        v33 -= y.dot(z);
        dq -= 2.0 * (boxes_.transpose() * z);
    }
    const double v13 = v13_.dot(f);
    const auto parts = fidelity_qs(v33 - 1.0, v13 * v13 / u_);
    grad = parts.d_q * dq + parts.d_s * (2.0 * v13 / u_) * v13_;
    return parts.value;
}

double zero_intensity_fidelity(const OpoParams& params, const ModeGrid& f, const ClickMode& click) {
    const double overlap = kernel_convolution(f, ExpKernel({{1.0, 0.5}}), click.t_c);
    return 0.5 * params.eta_s() * overlap * overlap;
}

OptimizationResult optimize_fixed_point(const OpoParams& params, const ClickMode& click, const OptimizerConfig& cfg) {
    cfg.validate();
    const ModeGrid start = start_mode(click, cfg);
    const GridSpec grid = start.grid();
    Eigen::VectorXd f = start.vector();
    fix_sign(grid, click.t_c, f);

    if (params.epsilon() == 0.0) {
        ModeGrid mode(grid, f);
        const double fidelity = zero_intensity_fidelity(params, mode, click);
        return {std::move(mode), fidelity, 0, 0.0, {}};
    }
    if (params.eta_s() == 0.0) return finish(params, click, {}, grid, f, 0, 0.0, {});

    const OpoParams eff = click_params(params);
    const FidelityObjective objective(eff, click, {}, grid);
    const ExpKernel normal = normal_kernel(eff);
    const Eigen::VectorXd b0 = convolution_weights(grid, anomalous_kernel(eff), click.t_c);
    const double b_scale = 1.0 / (2.0 * std::sqrt(eff.eta_s() * eff.eta_t() * eff.dt_c()));

    double fidelity = objective.value(f);
    std::vector<TraceEntry> trace{{0, fidelity, 0.0}};
    double residual = 0.0;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        const Cov cov = build_click_signal_cov(eff, ModeGrid(grid, f), click);
        const auto c = c_coefficients(cov, eff);
        const Eigen::VectorXd rhs = c.c1 * kernel_apply(grid, f, normal) + c.c2 * cov(0, 2) * b_scale * b0;
        const Eigen::VectorXd g = normalized(grid, mass_solve(grid, rhs));

        // The right-hand side may point away from f when the multiplier is
        // negative; a larger weight on f then restores ascent.
        double alpha = cfg.alpha;
        Eigen::VectorXd next;
        double next_fidelity = fidelity;
        bool accepted = false;
        while (alpha < 1.0 - 1e-12) {
            const Eigen::VectorXd mixed = (1.0 - alpha) * g + alpha * f;
            if (mass_norm(grid, mixed) > 1e-300) {
                next = normalized(grid, mixed);
                next_fidelity = objective.value(next);
                if (next_fidelity >= fidelity) {
                    accepted = true;
                    break;
                }
            }
            alpha = 0.5 * (1.0 + alpha);
        }
        if (!accepted) {
            // No ascent left at floating-point resolution: f is stationary.
            residual = std::min((g - f).cwiseAbs().maxCoeff(), (g + f).cwiseAbs().maxCoeff());
            trace.push_back({it, fidelity, residual});
            return finish(params, click, {}, grid, f, it, residual, std::move(trace));
        }
        fix_sign(grid, click.t_c, next);
        residual = (next - f).cwiseAbs().maxCoeff();
        f = std::move(next);
        fidelity = next_fidelity;
        trace.push_back({it, fidelity, residual});
        if (residual < cfg.tol) return finish(params, click, {}, grid, f, it, residual, std::move(trace));
    }
    throw OptimizerNotConverged(finish(params, click, {}, grid, f, cfg.max_iter, residual, std::move(trace)));
}

OptimizationResult optimize_general(const OpoParams& params, const ClickMode& click, const WindowSpec& window,
                                    const OptimizerConfig& cfg) {
    cfg.validate();
    const ModeGrid start = start_mode(click, cfg);
    const GridSpec grid = start.grid();
    Eigen::VectorXd f = start.vector();
    fix_sign(grid, click.t_c, f);

    if (params.epsilon() == 0.0) {
        ModeGrid mode(grid, f);
        const double fidelity = zero_intensity_fidelity(params, mode, click);
        return {std::move(mode), fidelity, 0, 0.0, {}};
    }
    if (params.eta_s() == 0.0) return finish(params, click, window, grid, f, 0, 0.0, {});

    const FidelityObjective objective(params, click, window, grid);
    auto riemannian = [&](const Eigen::VectorXd& x, Eigen::VectorXd& rg) {
        Eigen::VectorXd grad;
        const double value = objective.value_and_gradient(x, grad);
        rg = mass_solve(grid, grad) - x.dot(grad) * x;
        return value;
    };

    Eigen::VectorXd rg;
    double fidelity = riemannian(f, rg);
    std::vector<TraceEntry> trace{{0, fidelity, 0.0}};
    double residual = 0.0;
    double step = 0.1 * f.cwiseAbs().maxCoeff() / std::max(rg.cwiseAbs().maxCoeff(), 1e-300);

    for (int it = 1; it <= cfg.max_iter; ++it) {
        const double slope = rg.dot(mass_apply(grid, rg));
        Eigen::VectorXd trial;
        double trial_fidelity = fidelity;
        bool accepted = false;
        while (step * rg.cwiseAbs().maxCoeff() > 1e-3 * cfg.tol) {
            trial = normalized(grid, f + step * rg);
            trial_fidelity = objective.value(trial);
            if (trial_fidelity >= fidelity + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // The Armijo step fell below the resolution of tol.
            residual = step * rg.cwiseAbs().maxCoeff();
            trace.push_back({it, fidelity, residual});
            return finish(params, click, window, grid, f, it, residual, std::move(trace));
        }
        Eigen::VectorXd rg_next;
        trial_fidelity = riemannian(trial, rg_next);
        const Eigen::VectorXd s = trial - f;
        const Eigen::VectorXd y = rg_next - rg;
        residual = s.cwiseAbs().maxCoeff();
        const Eigen::VectorXd ms = mass_apply(grid, s);
        const double sy = std::abs(ms.dot(y));
        step = sy > 0.0 ? ms.dot(s) / sy : 2.0 * step;
        f = std::move(trial);
        rg = std::move(rg_next);
        fidelity = trial_fidelity;
        trace.push_back({it, fidelity, residual});
        if (residual < cfg.tol) return finish(params, click, window, grid, f, it, residual, std::move(trace));
    }
    throw OptimizerNotConverged(finish(params, click, window, grid, f, cfg.max_iter, residual, std::move(trace)));
}

OptimizationResult optimize(const OpoParams& params, const ClickMode& click, const WindowSpec& window,
                            const OptimizerConfig& cfg) {
    if (cfg.mode == ObjectiveMode::fixed_point) {
        if (!window.boxes(click).empty())
            throw std::invalid_argument("optimize: the fixed-point iteration needs T = 0");
        return optimize_fixed_point(params, click, cfg);
    }
    return optimize_general(params, click, window, cfg);
}

double fidelity_complex(const OpoParams& params, const ComplexMode& f, const ClickMode& click) {
    CovOptions options;
    if (params.eta_t() == 0.0) options.click_efficiency = 1.0;
    return fidelity_one_photon(build_click_signal_cov(params, f, click, options));
}

double phase_stationarity_check(const OpoParams& params, const ModeGrid& f, const ClickMode& click,
                                std::optional<double> phase) {
    const double theta = phase.value_or(0.0);
    const double ct = std::cos(theta), st = std::sin(theta);
    const GridSpec grid = f.grid();
    const Eigen::VectorXd base = f.vector();
    const auto n = static_cast<Eigen::Index>(grid.size);
    const double width = 0.25 * (grid.t_end() - grid.t_start);

    std::vector<Eigen::VectorXd> directions(3, Eigen::VectorXd(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = (grid.time(static_cast<std::size_t>(i)) - click.t_c) / width;
        const double bump = std::exp(-s * s);
        directions[0][i] = bump;
        directions[1][i] = s * bump;
        directions[2][i] = std::cos(3.0 * s) * bump;
    }

    const double delta = 1e-4;
    double residual = 0.0;
    for (const auto& g : directions) {
        auto eval = [&](double d) {
            const Eigen::VectorXd re = ct * base - d * st * g;
            const Eigen::VectorXd im = st * base + d * ct * g;
            const double norm = std::sqrt(re.dot(mass_apply(grid, re)) + im.dot(mass_apply(grid, im)));
            return fidelity_complex(params, {ModeGrid(grid, re / norm), ModeGrid(grid, im / norm)}, click);
        };
        residual = std::max(residual, std::abs(eval(delta) - eval(-delta)) / (2.0 * delta));
    }
    return residual;
}

}  // namespace cwopo
