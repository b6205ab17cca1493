#include "cwopo/degenerate.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cwopo/errors.hpp"

namespace cwopo {

namespace {

constexpr double kPi = std::numbers::pi;

double trigger_photons(const Cov& cov4) {
    const auto& v = cov4.matrix();
    const double n = v(0, 0) + v(1, 1) - 2.0;
    if (!(n > 1e-12)) throw NoClickInformation();
    return n;
}

}  // namespace

void DegenerateParams::validate() const {
    if (!(R >= 0.0 && R <= 1.0)) throw std::invalid_argument("DegenerateParams: R must lie in [0, 1]");
}

double AxialWigner::operator()(double x, double p) const {
    return (c2 + c3 * x * x + c4 * p * p) * std::exp(-c5 * x * x - c6 * p * p) / c1;
}

double AxialWigner::normalization() const {
    return kPi / (c1 * std::sqrt(c5 * c6)) * (c2 + 0.5 * c3 / c5 + 0.5 * c4 / c6);
}

double AxialWigner::second_moment_x() const {
    // Gaussian moments <x^2> = 1/(2 c5), <x^4> = 3/(4 c5^2).
    const double base = kPi / (c1 * std::sqrt(c5 * c6));
    return base * (0.5 * c2 / c5 + 0.75 * c3 / (c5 * c5) + 0.25 * c4 / (c5 * c6));
}

double AxialWigner::second_moment_p() const {
    const double base = kPi / (c1 * std::sqrt(c5 * c6));
    return base * (0.5 * c2 / c6 + 0.75 * c4 / (c6 * c6) + 0.25 * c3 / (c5 * c6));
}

Cov build_cov_degenerate(const DegenerateParams& dp, const ModeGrid& f2, const ClickMode& click) {
    dp.validate();
    const OpoParams& p = dp.base;
    const double trig = p.eta_t() * (1.0 - dp.R) * click.dt_c;
    const double sig = p.eta_s() * dp.R;
    const double cross = std::sqrt(p.eta_t() * p.eta_s() * dp.R * (1.0 - dp.R) * click.dt_c);

    const ExpKernel ka = anomalous_kernel(p), kn = normal_kernel(p);
    const double n11 = trig * kernel_normal(p, 0.0);
    const double a11 = trig * kernel_anomalous(p, 0.0);
    const double n22 = sig == 0.0 ? 0.0 : sig * kernel_quadratic_form(f2, f2, kn);
    const double a22 = sig == 0.0 ? 0.0 : sig * kernel_quadratic_form(f2, f2, ka);
    const double n12 = cross == 0.0 ? 0.0 : cross * kernel_convolution(f2, kn, click.t_c);
    const double m12 = cross == 0.0 ? 0.0 : cross * kernel_convolution(f2, ka, click.t_c);

    Eigen::Matrix4d v = Eigen::Matrix4d::Identity();
    v(0, 0) += 2.0 * (n11 + a11);
    v(1, 1) += 2.0 * (n11 - a11);
    v(2, 2) += 2.0 * (n22 + a22);
    v(3, 3) += 2.0 * (n22 - a22);
    v(0, 2) = v(2, 0) = 2.0 * (n12 + m12);
    v(1, 3) = v(3, 1) = 2.0 * (n12 - m12);
    return Cov({"click", "signal"}, v);
}

AxialWigner click_condition_degenerate(const Cov& cov4) {
    const double n = trigger_photons(cov4);
    const auto& v = cov4.matrix();
    const double v33 = v(2, 2), v44 = v(3, 3);
    const double v13s = v(0, 2) * v(0, 2), v24s = v(1, 3) * v(1, 3);
    const double d = v33 * v44;
    return {
        kPi * std::pow(d, 2.5) * n,
        d * (d * n - v33 * v24s - v44 * v13s),
        2.0 * v13s * v44 * v44,
        2.0 * v24s * v33 * v33,
        1.0 / v33,
        1.0 / v44,
    };
}

double fidelity_degenerate(const Cov& cov4) {
    const double n = trigger_photons(cov4);
    const auto& v = cov4.matrix();
    const double v33 = v(2, 2), v44 = v(3, 3);
    const double v13s = v(0, 2) * v(0, 2), v24s = v(1, 3) * v(1, 3);
    const double a = 1.0 + v33, b = 1.0 + v44;
    const double d = v33 * v44;
    return 2.0 * (d - 1.0) / std::pow(a * b, 1.5) +
           2.0 * (2.0 * b + 1.0 - d) * v13s / (n * std::pow(a, 2.5) * std::pow(b, 1.5)) +
           2.0 * (2.0 * a + 1.0 - d) * v24s / (n * std::pow(a, 1.5) * std::pow(b, 2.5));
}

}  // namespace cwopo
