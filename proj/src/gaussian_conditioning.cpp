#include "cwopo/gaussian_conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cwopo/errors.hpp"

namespace cwopo {

namespace {

constexpr double kPi = std::numbers::pi;

struct TriggerBox {
    double centre;
    double width;
    double efficiency;
    std::string label;
};

std::vector<TriggerBox> trigger_boxes(const OpoParams& params, const ClickMode& click,
                                      const WindowSpec& window, const CovOptions& options) {
    std::vector<TriggerBox> out;
    out.push_back({click.t_c, click.dt_c, options.click_efficiency.value_or(params.eta_t()), "click"});
    const auto boxes = window.boxes(click);
    for (std::size_t i = 0; i < boxes.size(); ++i)
        out.push_back({boxes[i].centre(), boxes[i].width(), params.eta_t(), "vac" + std::to_string(i + 1)});
    return out;
}

double normal_between(const OpoParams& params, const TriggerBox& a, const TriggerBox& b, BoxIntegration mode) {
    const double eff = std::sqrt(a.efficiency * b.efficiency);
    if (eff == 0.0) return 0.0;
    if (mode == BoxIntegration::short_box)
        return eff * std::sqrt(a.width * b.width) * kernel_normal(params, a.centre - b.centre);
    return eff * kernel_quadratic_form(box_mode(a.centre, a.width), box_mode(b.centre, b.width),
                                       normal_kernel(params));
}

double anomalous_with(const OpoParams& params, const TriggerBox& a, const ModeGrid& f, BoxIntegration mode) {
    const double eff = std::sqrt(a.efficiency * params.eta_s());
    if (eff == 0.0) return 0.0;
    if (mode == BoxIntegration::short_box)
        return eff * std::sqrt(a.width) * kernel_convolution(f, anomalous_kernel(params), a.centre);
    return eff * kernel_quadratic_form(box_mode(a.centre, a.width), f, anomalous_kernel(params));
}

// Assembles the covariance from the normally ordered moments. The click box
// is mode 0; the signal, when present, is mode 1; remaining boxes follow.
Cov assemble(const OpoParams& params, const ModeGrid* re, const ModeGrid* im,
             const std::vector<TriggerBox>& trig, BoxIntegration mode) {
    const bool has_signal = re != nullptr;
    const std::size_t modes = trig.size() + (has_signal ? 1 : 0);
    auto index = [&](std::size_t k) -> Eigen::Index {
        return static_cast<Eigen::Index>(2 * ((k == 0 || !has_signal) ? k : k + 1));
    };
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(2 * modes, 2 * modes);

    for (std::size_t a = 0; a < trig.size(); ++a) {
        for (std::size_t b = a; b < trig.size(); ++b) {
            const double n = normal_between(params, trig[a], trig[b], mode);
            const auto ia = index(a), ib = index(b);
            v(ia, ib) += 2.0 * n;
            v(ia + 1, ib + 1) += 2.0 * n;
            if (a != b) {
                v(ib, ia) = v(ia, ib);
                v(ib + 1, ia + 1) = v(ia + 1, ib + 1);
            }
        }
    }

    std::vector<std::string> labels;
    labels.reserve(modes);
    for (std::size_t k = 0; k < trig.size(); ++k) {
        labels.push_back(trig[k].label);
        if (k == 0 && has_signal) labels.emplace_back("signal");
    }
    if (!has_signal) return Cov(std::move(labels), std::move(v));

    const auto normal = normal_kernel(params);
    double n_signal = kernel_quadratic_form(*re, *re, normal);
    if (im) n_signal += kernel_quadratic_form(*im, *im, normal);
    n_signal *= params.eta_s();
    v(2, 2) += 2.0 * n_signal;
    v(3, 3) += 2.0 * n_signal;

    for (std::size_t k = 0; k < trig.size(); ++k) {
        const double m_re = anomalous_with(params, trig[k], *re, mode);
        const double m_im = im ? anomalous_with(params, trig[k], *im, mode) : 0.0;
        const auto i = index(k);
        // x_i x_s = 2 Re M, p_i p_s = -2 Re M, x_i p_s = p_i x_s = 2 Im M.
        v(i, 2) = v(2, i) = 2.0 * m_re;
        v(i + 1, 3) = v(3, i + 1) = -2.0 * m_re;
        v(i, 3) = v(3, i) = 2.0 * m_im;
        v(i + 1, 2) = v(2, i + 1) = 2.0 * m_im;
    }
    return Cov(std::move(labels), std::move(v));
}

}  // namespace

Cov::Cov(std::vector<std::string> labels, Eigen::MatrixXd matrix)
    : labels_(std::move(labels)), matrix_(std::move(matrix)) {
    const auto n = static_cast<Eigen::Index>(2 * labels_.size());
    if (matrix_.rows() != n || matrix_.cols() != n)
        throw std::invalid_argument("Cov: matrix must be 2n x 2n for n labelled modes");
    if (!matrix_.allFinite()) throw std::invalid_argument("Cov: non-finite entry");
    const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
    if ((matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("Cov: matrix is not symmetric");
}

bool Cov::is_positive_definite() const {
    return Eigen::LLT<Eigen::MatrixXd>(matrix_).info() == Eigen::Success;
}

Eigen::VectorXd symplectic_eigenvalues(const Eigen::MatrixXd& v) {
    const auto n = v.rows();
    if (n % 2 != 0 || v.cols() != n) throw std::invalid_argument("symplectic_eigenvalues: need 2n x 2n");
    Eigen::LLT<Eigen::MatrixXd> llt(v);
    if (llt.info() != Eigen::Success) throw UnphysicalCovariance("symplectic_eigenvalues: not positive definite");
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; i += 2) {
        omega(i, i + 1) = 1.0;
        omega(i + 1, i) = -1.0;
    }
    const Eigen::MatrixXd l = llt.matrixL();
    const Eigen::MatrixXd a = l.transpose() * omega * l;  // antisymmetric, spectrum +-i nu
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.transpose() * a, Eigen::EigenvaluesOnly);
    Eigen::VectorXd nu(n / 2);
    for (Eigen::Index k = 0; k < n / 2; ++k) {
        // Eigenvalues come in equal pairs; average the pair.
        nu[k] = std::sqrt(std::max(0.0, 0.5 * (es.eigenvalues()[2 * k] + es.eigenvalues()[2 * k + 1])));
    }
    return nu;
}

WindowSpec WindowSpec::symmetric(double total, std::optional<double> box_width) {
    if (!(total >= 0.0)) throw std::invalid_argument("WindowSpec: T must be non-negative");
    if (box_width && !(*box_width > 0.0)) throw std::invalid_argument("WindowSpec: box width must be positive");
    WindowSpec w;
    w.total_ = total;
    w.box_width_ = box_width;
    return w;
}

WindowSpec WindowSpec::explicit_boxes(std::vector<Interval> boxes) {
    WindowSpec w;
    w.explicit_ = true;
    for (const auto& b : boxes) {
        if (!(b.end > b.start)) throw std::invalid_argument("WindowSpec: empty box interval");
        w.total_ += b.width();
    }
    std::sort(boxes.begin(), boxes.end(), [](const Interval& a, const Interval& b) { return a.start < b.start; });
    w.explicit_boxes_ = std::move(boxes);
    return w;
}

double WindowSpec::total_duration() const { return total_; }

std::vector<Interval> WindowSpec::boxes(const ClickMode& click) const {
    const double c0 = click.t_c - 0.5 * click.dt_c;
    const double c1 = click.t_c + 0.5 * click.dt_c;
    const double tol = 1e-12 * std::max(1.0, std::abs(click.t_c) + total_);
    std::vector<Interval> out;
    if (explicit_) {
        out = explicit_boxes_;
    } else if (total_ > 0.0) {
        const double width = box_width_.value_or(click.dt_c);
        const double per_side = total_ / (2.0 * width);
        const double rounded = std::round(per_side);
        if (std::abs(per_side - rounded) > 1e-6 || rounded < 1.0)
            throw std::invalid_argument("WindowSpec: T / (2 box width) must be a positive integer");
        const auto n = static_cast<std::size_t>(rounded);
        out.reserve(2 * n);
        for (std::size_t k = n; k-- > 0;)
            out.push_back({c0 - static_cast<double>(k + 1) * width, c0 - static_cast<double>(k) * width});
        for (std::size_t k = 0; k < n; ++k)
            out.push_back({c1 + static_cast<double>(k) * width, c1 + static_cast<double>(k + 1) * width});
    }
    for (const auto& b : out) {
        if (b.start < c1 - tol && b.end > c0 + tol)
            throw std::invalid_argument("WindowSpec: vacuum box overlaps the click box");
    }
    return out;
}

Cov build_click_signal_cov(const OpoParams& params, const ModeGrid& f2, const ClickMode& click,
                           const CovOptions& options) {
    return assemble(params, &f2, nullptr, trigger_boxes(params, click, WindowSpec{}, options), options.boxes);
}

Cov build_click_signal_cov(const OpoParams& params, const ComplexMode& f2, const ClickMode& click,
                           const CovOptions& options) {
    return assemble(params, &f2.re, &f2.im, trigger_boxes(params, click, WindowSpec{}, options), options.boxes);
}

Cov build_extended_cov(const OpoParams& params, const ModeGrid& f2, const ClickMode& click,
                       const WindowSpec& window, const CovOptions& options) {
    return assemble(params, &f2, nullptr, trigger_boxes(params, click, window, options), options.boxes);
}

Cov build_trigger_cov(const OpoParams& params, const ClickMode& click, const WindowSpec& window,
                      const CovOptions& options) {
    return assemble(params, nullptr, nullptr, trigger_boxes(params, click, window, options), options.boxes);
}

Cov vacuum_condition(const Cov& cov) {
    if (cov.modes() < 2) throw std::invalid_argument("vacuum_condition: need click and signal modes");
    const auto& v = cov.matrix();
    const Eigen::Index rest = v.rows() - 4;
    std::vector<std::string> labels(cov.labels().begin(), cov.labels().begin() + 2);
    if (rest == 0) return Cov(std::move(labels), v);

    const Eigen::MatrixXd v4 = v.topLeftCorner(4, 4);
    const Eigen::MatrixXd c = v.topRightCorner(4, rest);
    const Eigen::MatrixXd shifted = v.bottomRightCorner(rest, rest) + Eigen::MatrixXd::Identity(rest, rest);
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success)
        throw UnphysicalCovariance("vacuum_condition: V2m + I is not positive definite");
    Eigen::MatrixXd out = v4 - c * llt.solve(c.transpose());
    out = 0.5 * (out + out.transpose()).eval();
    return Cov(std::move(labels), std::move(out));
}

double RadialWigner::operator()(double x, double p) const {
    const double r2 = x * x + p * p;
    return (a1 + a2 * r2) * std::exp(-a3 * r2);
}

double RadialWigner::normalization() const {
    return kPi * (a1 / a3 + a2 / (a3 * a3));
}

RadialWigner click_condition(const Cov& cov4) {
    const auto& v = cov4.matrix();
    const double u = v(0, 0) - 1.0;
    if (!(u > 1e-12)) throw NoClickInformation();
    const double v33 = v(2, 2);
    const double s = v(0, 2) * v(0, 2) + v(0, 3) * v(0, 3);
    return {
        (u * v33 - s) / (kPi * u * v33 * v33),
        s / (kPi * u * v33 * v33 * v33),
        1.0 / v33,
    };
}

double wigner_eval(const RadialWigner& w, double x, double p) { return w(x, p); }

double wigner_one_photon(double x, double p) {
    const double r2 = x * x + p * p;
    return (-1.0 + 2.0 * r2) * std::exp(-r2) / kPi;
}

double fidelity_one_photon(const Cov& cov4) {
    const auto& v = cov4.matrix();
    const double u = v(0, 0) - 1.0;
    if (!(u > 1e-12)) throw NoClickInformation();
    const double v33 = v(2, 2);
    const double s = v(0, 2) * v(0, 2) + v(0, 3) * v(0, 3);
    const double denom = u * std::pow(1.0 + v33, 3);
    return (2.0 * u * (v33 * v33 - 1.0) + 2.0 * (3.0 - v33) * s) / denom;
}

Cov conditioned_covariance(const OpoParams& params, const ModeGrid& f2, const ClickMode& click,
                           const WindowSpec& window, BoxIntegration boxes) {
    CovOptions options;
    options.boxes = boxes;
    if (params.eta_t() == 0.0) options.click_efficiency = 1.0;
    return vacuum_condition(build_extended_cov(params, f2, click, window, options));
}

double conditioned_fidelity(const OpoParams& params, const ModeGrid& f2, const ClickMode& click,
                            const WindowSpec& window, BoxIntegration boxes) {
    return fidelity_one_photon(conditioned_covariance(params, f2, click, window, boxes));
}

}  // namespace cwopo
