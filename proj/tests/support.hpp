#pragma once

#include <cmath>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cwopo/errors.hpp"
#include "cwopo/mode_functions.hpp"

namespace testing {

inline std::mt19937_64& rng() {
    static std::mt19937_64 gen(20240611);
    return gen;
}

inline double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng()); }

// Smooth random mode: a few Gaussian bumps of either sign around t_c.
inline cwopo::ModeGrid random_mode(double half_width = 8.0, std::size_t n = 201) {
    const int bumps = 1 + static_cast<int>(uniform(0.0, 3.0));
    std::vector<double> c(bumps), w(bumps), a(bumps);
    for (int k = 0; k < bumps; ++k) {
        c[k] = uniform(-2.0, 2.0);
        w[k] = uniform(0.4, 3.0);
        a[k] = uniform(k == 0 ? 0.5 : -1.0, 1.0);
    }
    std::vector<double> v(n);
    const double dt = 2.0 * half_width / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = -half_width + dt * static_cast<double>(i);
        for (int k = 0; k < bumps; ++k) v[i] += a[k] * std::exp(-(t - c[k]) * (t - c[k]) / (w[k] * w[k]));
    }
    return cwopo::normalize(cwopo::ModeGrid(-half_width, dt, v));
}

// Random physical covariance: thermal diagonal dressed with squeezers,
// phase rotations and beam splitters.
inline Eigen::MatrixXd random_physical_cov(int modes, double max_squeeze = 0.8) {
    const int n = 2 * modes;
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n);
    for (int k = 0; k < 3 * modes; ++k) {
        Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n, n);
        const int i = static_cast<int>(uniform(0.0, modes - 1e-9));
        const double th = uniform(0.0, 6.283185307179586);
        const double c = std::cos(th), sn = std::sin(th);
        g(2 * i, 2 * i) = c;
        g(2 * i, 2 * i + 1) = -sn;
        g(2 * i + 1, 2 * i) = sn;
        g(2 * i + 1, 2 * i + 1) = c;
        s = g * s;
        const double r = uniform(-max_squeeze, max_squeeze);
        s.row(2 * i) *= std::exp(r);
        s.row(2 * i + 1) *= std::exp(-r);
        if (modes > 1) {
            int j = static_cast<int>(uniform(0.0, modes - 1e-9));
            if (j == i) j = (i + 1) % modes;
            const double phi = uniform(0.0, 1.5707963267948966);
            Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n);
            for (int q = 0; q < 2; ++q) {
                b(2 * i + q, 2 * i + q) = std::cos(phi);
                b(2 * i + q, 2 * j + q) = std::sin(phi);
                b(2 * j + q, 2 * i + q) = -std::sin(phi);
                b(2 * j + q, 2 * j + q) = std::cos(phi);
            }
            s = b * s;
        }
    }
    Eigen::VectorXd d(n);
    for (int i = 0; i < modes; ++i) d[2 * i] = d[2 * i + 1] = uniform(1.0, 2.0);
    Eigen::MatrixXd v = s * d.asDiagonal() * s.transpose();
    return 0.5 * (v + v.transpose());
}

// Silences library warnings for the lifetime of the object.
struct QuietWarnings {
    QuietWarnings() { cwopo::set_warning_handler([](std::string_view) {}); }
    ~QuietWarnings() { cwopo::set_warning_handler(nullptr); }
};

}  // namespace testing
