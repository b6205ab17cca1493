#include "cwopo/heralding_rates.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "cwopo/errors.hpp"

namespace cwopo {

namespace {

double log_det_spd(const Eigen::MatrixXd& a) {
    if (a.rows() == 0) return 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw UnphysicalCovariance("matrix is not positive definite");
    const Eigen::MatrixXd& l = llt.matrixLLT();
    return 2.0 * l.diagonal().array().log().sum();
}

}  // namespace

double click_rate(const OpoParams& params) {
    const double occupation = mean_intensity(params) * params.eta_t() * params.dt_c();
    if (occupation > 0.1)
        warn("mean click-box occupation " + std::to_string(occupation) +
             " is not small; the click probability is overestimated");
    const double e = params.epsilon() / OpoParams::gamma();
    return 2.0 * e * e / (1.0 - 4.0 * e * e) * OpoParams::gamma() * params.eta_t();
}

double vac_click_probability(const Cov& trigger_cov) {
    const Eigen::MatrixXd& v = trigger_cov.matrix();
    const Eigen::Index dim = v.rows();
    const Eigen::Index modes = dim / 2;
    const Eigen::Index m = modes - 1;

    Eigen::MatrixXd vx(modes, modes), vp(modes, modes);
    double cross = 0.0;
    for (Eigen::Index i = 0; i < modes; ++i) {
        for (Eigen::Index j = 0; j < modes; ++j) {
            vx(i, j) = v(2 * i, 2 * j);
            vp(i, j) = v(2 * i + 1, 2 * j + 1);
            cross = std::max(cross, std::abs(v(2 * i, 2 * j + 1)));
        }
    }
    const double scale = std::max(1.0, vx.cwiseAbs().maxCoeff());
    if ((vx - vp).cwiseAbs().maxCoeff() > 1e-12 * scale || cross > 1e-12 * scale)
        throw std::invalid_argument("vac_click_probability: x and p blocks of the trigger covariance differ");

    // det(I + V J) with J selecting the vacuum-box quadratures.
    Eigen::MatrixXd ivj = Eigen::MatrixXd::Identity(dim, dim);
    ivj.rightCols(dim - 2) += v.rightCols(dim - 2);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(ivj);
    const Eigen::MatrixXd& packed = lu.matrixLU();
    double log_det = 0.0;
    double sign = lu.permutationP().determinant();
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double d = packed(i, i);
        if (d == 0.0) throw UnphysicalCovariance("vac_click_probability: I + V J is singular");
        if (d < 0.0) sign = -sign;
        log_det += std::log(std::abs(d));
    }
    if (sign < 0.0) throw UnphysicalCovariance("vac_click_probability: det(I + V J) is negative");

    Eigen::LLT<Eigen::MatrixXd> vx_llt(vx);
    if (vx_llt.info() != Eigen::Success) throw UnphysicalCovariance("vac_click_probability: V_x is singular");
    Eigen::MatrixXd a = vx_llt.solve(Eigen::MatrixXd::Identity(modes, modes));
    a = 0.5 * (a + a.transpose()).eval();
    a.diagonal().tail(m).array() += 1.0;  // + J_x
    const double ld_full = log_det_spd(a);
    const double ld_red = log_det_spd(a.bottomRightCorner(m, m));
    const double ratio_minus_one = std::expm1(ld_red - ld_full);
    if (!(ratio_minus_one > 0.0)) return 0.0;

    const double log_p = static_cast<double>(m - 1) * std::numbers::ln2 - 0.5 * log_det + std::log(ratio_minus_one);
    return std::exp(log_p);
}

double vac_click_probability(const OpoParams& params, const WindowSpec& window, const ClickMode& click) {
    return vac_click_probability(build_trigger_cov(params, click, window));
}

double production_rate_windowed(const OpoParams& params, const WindowSpec& window, const ClickMode& click) {
    return vac_click_probability(params, window, click) / click.dt_c;
}

}  // namespace cwopo
