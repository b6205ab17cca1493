#include "cwopo/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cwopo/errors.hpp"

namespace cwopo::oracle {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> node_times(const ModeGrid& f) {
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f.time(i);
    return out;
}

double integrate_piece(const std::function<double(double)>& f, double lo, double hi, double tol, double& err) {
    using boost::math::quadrature::gauss_kronrod;
    double e = 0.0;
    const double v = gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, tol, &e);
    err += e;
    return v;
}

}  // namespace

QuadResult quad1d(const std::function<double(double)>& f, double a, double b, double tol,
                  std::vector<double> breaks) {
    if (!(b > a)) return {0.0, 0.0};
    std::vector<double> pts{a};
    for (double t : breaks)
        if (t > a && t < b) pts.push_back(t);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    double sum = 0.0, err = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double v = integrate_piece(f, pts[i], pts[i + 1], tol, err);
        sum += v;
        l1 += std::abs(v);
    }
    if (!std::isfinite(sum) || err > 10.0 * tol * std::max(1.0, l1))
        throw ConvergenceError("quad1d: error estimate above tolerance", 0, err);
    return {sum, err};
}

QuadResult quad2d(const std::function<double(double, double)>& f, const Domain2D& d, double tol) {
    double inner_err = 0.0;
    auto outer = [&](double x) {
        std::vector<double> yb = d.y_breaks;
        if (d.diagonal_break) yb.push_back(x);
        const auto r = quad1d([&](double y) { return f(x, y); }, d.y0, d.y1, 0.1 * tol, std::move(yb));
        inner_err = std::max(inner_err, r.error);
        return r.value;
    };
    auto r = quad1d(outer, d.x0, d.x1, tol, d.x_breaks);
    r.error += inner_err * (d.x1 - d.x0);
    return r;
}

double quad_kernel_quadratic_form(const ModeGrid& f, const ModeGrid& g, const ExpKernel& kernel, double tol) {
    Domain2D d{f.t_start(), f.t_end(), g.t_start(), g.t_end(), node_times(f), node_times(g), true};
    return quad2d([&](double t, double s) { return f(t) * kernel(t - s) * g(s); }, d, tol).value;
}

double quad_kernel_convolution(const ModeGrid& f, const ExpKernel& kernel, double t, double tol) {
    auto breaks = node_times(f);
    breaks.push_back(t);
    return quad1d([&](double s) { return f(s) * kernel(t - s); }, f.t_start(), f.t_end(), tol, std::move(breaks))
        .value;
}

Eigen::MatrixXd quad_extended_cov(const OpoParams& params, const ModeGrid& f2, const ClickMode& click,
                                  const WindowSpec& window, double tol) {
    struct Box {
        double centre, width, eff;
    };
    std::vector<Box> trig{{click.t_c, click.dt_c, params.eta_t()}};
    for (const auto& b : window.boxes(click)) trig.push_back({b.centre(), b.width(), params.eta_t()});

    const ExpKernel ka = anomalous_kernel(params), kn = normal_kernel(params);
    const auto n = static_cast<Eigen::Index>(trig.size() + 1);
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    auto slot = [](std::size_t k) { return static_cast<Eigen::Index>(k == 0 ? 0 : 2 * (k + 1)); };

    for (std::size_t i = 0; i < trig.size(); ++i) {
        for (std::size_t j = 0; j < trig.size(); ++j) {
            const double nij = std::sqrt(trig[i].eff * trig[j].eff * trig[i].width * trig[j].width) *
                               kn(trig[i].centre - trig[j].centre);
            v(slot(i), slot(j)) += 2.0 * nij;
            v(slot(i) + 1, slot(j) + 1) += 2.0 * nij;
        }
        const double m = std::sqrt(trig[i].eff * params.eta_s() * trig[i].width) *
                         quad_kernel_convolution(f2, ka, trig[i].centre, tol);
        v(slot(i), 2) = v(2, slot(i)) = 2.0 * m;
        v(slot(i) + 1, 3) = v(3, slot(i) + 1) = -2.0 * m;
    }
    const double ns = params.eta_s() * quad_kernel_quadratic_form(f2, f2, kn, tol);
    v(2, 2) += 2.0 * ns;
    v(3, 3) += 2.0 * ns;
    return v;
}

double gaussian_wigner(const Eigen::MatrixXd& v, const Eigen::VectorXd& xi) {
    Eigen::LLT<Eigen::MatrixXd> llt(v);
    if (llt.info() != Eigen::Success) throw UnphysicalCovariance("gaussian_wigner: covariance not positive definite");
    const double n = static_cast<double>(v.rows()) / 2.0;
    const double log_det = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    return std::exp(-xi.dot(llt.solve(xi)) - 0.5 * log_det) / std::pow(kPi, n);
}

double fidelity_by_quadrature(const std::function<double(double, double)>& w, double half, double tol) {
    Domain2D d{-half, half, -half, half, {0.0}, {0.0}, false};
    return 2.0 * kPi * quad2d([&](double x, double p) { return w(x, p) * wigner_one_photon(x, p); }, d, tol).value;
}

double click_wigner_by_quadrature(const Cov& cov4, double x2, double p2, double half, double tol) {
    const Eigen::MatrixXd& v = cov4.matrix();
    Eigen::LLT<Eigen::MatrixXd> llt(v);
    if (llt.info() != Eigen::Success) throw UnphysicalCovariance("click_wigner_by_quadrature: not positive definite");
    const double log_det = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    const double norm = std::exp(-0.5 * log_det) / (kPi * kPi);
    const Eigen::MatrixXd prec = llt.solve(Eigen::MatrixXd::Identity(4, 4));
    Domain2D d{-half, half, -half, half, {0.0}, {0.0}, false};
    const auto r = quad2d(
        [&](double x1, double p1) {
            const Eigen::Vector4d xi(x1, p1, x2, p2);
            return 0.5 * (x1 * x1 + p1 * p1 - 1.0) * norm * std::exp(-xi.dot(prec * xi));
        },
        d, tol);
    return r.value / (0.5 * (v(0, 0) - 1.0));
}

Cov project_mode_on_vacuum(const Cov& cov, std::size_t mode) {
    const Eigen::MatrixXd& v = cov.matrix();
    const auto dim = v.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(v);
    if (llt.info() != Eigen::Success) throw UnphysicalCovariance("project_mode_on_vacuum: not positive definite");
    Eigen::MatrixXd prec = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
    const auto k = static_cast<Eigen::Index>(2 * mode);
    prec(k, k) += 1.0;  // vacuum Wigner exp(-x^2 - p^2)
    prec(k + 1, k + 1) += 1.0;
    const Eigen::MatrixXd sigma = prec.inverse();

    std::vector<Eigen::Index> keep;
    std::vector<std::string> labels;
    for (std::size_t j = 0; j < cov.modes(); ++j) {
        if (j == mode) continue;
        keep.push_back(static_cast<Eigen::Index>(2 * j));
        keep.push_back(static_cast<Eigen::Index>(2 * j + 1));
        labels.push_back(cov.labels()[j]);
    }
    const auto n = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) out(a, b) = sigma(keep[a], keep[b]);
    out = 0.5 * (out + out.transpose()).eval();
    return Cov(std::move(labels), std::move(out));
}

Cov direct_vacuum_projection(const Cov& cov) {
    const auto dim = cov.matrix().rows();
    if (cov.modes() < 2 || cov.modes() > 4) throw std::invalid_argument("direct_vacuum_projection: need m <= 2");
    Eigen::LLT<Eigen::MatrixXd> llt(cov.matrix());
    if (llt.info() != Eigen::Success) throw UnphysicalCovariance("direct_vacuum_projection: not positive definite");
    Eigen::MatrixXd prec = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
    for (Eigen::Index k = 4; k < dim; ++k) prec(k, k) += 1.0;
    Eigen::MatrixXd sigma = prec.inverse().topLeftCorner(4, 4);
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
    return Cov({cov.labels()[0], cov.labels()[1]}, sigma);
}

void McConfig::validate() const {
    if (samples < 10000) throw std::invalid_argument("McConfig: at least 1e4 samples");
    if (shards < 1) throw std::invalid_argument("McConfig: at least one shard");
    if (!(sigma_multiplier > 0.0)) throw std::invalid_argument("McConfig: sigma multiplier must be positive");
}

bool McEstimate::agrees_with(double reference, double multiplier) const {
    return std::abs(estimate - reference) <= multiplier * sigma;
}

McEstimate mc_vac_click(const Cov& trigger_cov, const McConfig& mc) {
    mc.validate();
    const Eigen::MatrixXd& v = trigger_cov.matrix();
    const auto dim = v.rows();
    // The Gaussian Wigner function is a probability density with covariance V/2.
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * v);
    if (llt.info() != Eigen::Success) throw UnphysicalCovariance("mc_vac_click: covariance not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    const double m = static_cast<double>(trigger_cov.modes() - 1);
    const double scale = std::pow(2.0, m);  // (2 pi)^m times the vacuum Wigner prefactors pi^-m

    struct Acc {
        double sum = 0.0, sumsq = 0.0;
    };
    std::vector<Acc> acc(mc.shards);
    std::vector<std::thread> workers;
    for (unsigned s = 0; s < mc.shards; ++s) {
        workers.emplace_back([&, s] {
            const std::size_t begin = mc.samples * s / mc.shards;
            const std::size_t end = mc.samples * (s + 1) / mc.shards;
            std::seed_seq seq{static_cast<std::uint32_t>(mc.seed), static_cast<std::uint32_t>(mc.seed >> 32), s};
            std::mt19937_64 rng(seq);
            std::normal_distribution<double> normal;
            Eigen::VectorXd z(dim), xi(dim);
            Acc a;
            for (std::size_t i = begin; i < end; ++i) {
                for (Eigen::Index k = 0; k < dim; ++k) z[k] = normal(rng);
                xi.noalias() = l * z;
                const double vac = xi.tail(dim - 2).squaredNorm();
                const double w = 0.5 * (xi[0] * xi[0] + xi[1] * xi[1] - 1.0) * scale * std::exp(-vac);
                a.sum += w;
                a.sumsq += w * w;
            }
            acc[s] = a;
        });
    }
    for (auto& w : workers) w.join();

    double sum = 0.0, sumsq = 0.0;
    for (const auto& a : acc) {
        sum += a.sum;
        sumsq += a.sumsq;
    }
    const auto n = static_cast<double>(mc.samples);
    const double mean = sum / n;
    const double var = std::max(0.0, (sumsq / n - mean * mean) * n / (n - 1.0));
    return {mean, std::sqrt(var / n), mc.samples, mc.seed};
}

nlohmann::json report(const McEstimate& est, const McConfig& mc, double reference) {
    return {
        {"oracle", "mc_vac_click"},
        {"value", est.estimate},
        {"error", est.sigma},
        {"reference", reference},
        {"deviation_sigmas", est.sigma > 0.0 ? (est.estimate - reference) / est.sigma : 0.0},
        {"agrees", est.agrees_with(reference, mc.sigma_multiplier)},
        {"seed", mc.seed},
        {"config", {{"samples", mc.samples}, {"shards", mc.shards}, {"sigma_multiplier", mc.sigma_multiplier}}},
    };
}

nlohmann::json report(const char* name, const QuadResult& q, double reference, double tol) {
    return {
        {"oracle", name},
        {"value", q.value},
        {"error", q.error},
        {"reference", reference},
        {"agrees", std::abs(q.value - reference) <= tol},
        {"config", {{"tolerance", tol}}},
    };
}

}  // namespace cwopo::oracle
