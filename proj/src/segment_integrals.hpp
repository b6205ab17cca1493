#pragma once

// Closed-form moments of a linear segment against exp(-a |t - t'|).
//
// On a segment of length h the two hat functions are phi0(u) = 1 - u/h and
// phi1(u) = u/h. With x = a h:
//
//   e[p]    = int_0^h phi_p(u) exp(-a u) du
//   d[p][q] = int_0^h phi_p(u) int_0^u phi_q(v) exp(-a (u - v)) dv du
//
// Both reduce to h^k * sum_n c_n J_n(x) with J_n(x) = int_0^1 s^n exp(-x s) ds.

#include <array>
#include <cmath>

namespace cwopo::detail {

// J_n(x) for n = 0..3. Taylor series below x = 1 avoids the cancellation of
// the upward recurrence; above it the recurrence amplifies error by at most 3x.
inline std::array<double, 4> exp_moments(double x) {
    std::array<double, 4> j{};
    if (x < 1.0) {
        for (int n = 0; n < 4; ++n) {
            double term = 1.0;  // (-x)^k / k!
            double sum = 0.0;
            for (int k = 0; k < 40; ++k) {
                const double add = term / (n + k + 1);
                sum += add;
                if (std::abs(add) < 1e-18 * std::abs(sum)) break;
                term *= -x / (k + 1);
            }
            j[n] = sum;
        }
        return j;
    }
    const double ex = std::exp(-x);
    j[0] = -std::expm1(-x) / x;
    for (int n = 1; n < 4; ++n) j[n] = (n * j[n - 1] - ex) / x;
    return j;
}

struct SegmentMoments {
    double decay = 1.0;  // exp(-a h)
    std::array<double, 2> e{};
    std::array<std::array<double, 2>, 2> d{};
};

inline SegmentMoments segment_moments(double rate, double h) {
    const auto j = exp_moments(rate * h);
    SegmentMoments m;
    m.decay = std::exp(-rate * h);
    m.e[0] = h * (j[0] - j[1]);
    m.e[1] = h * j[1];
    const double h2 = h * h;
    // Polynomials P_pq(w) = int_w^1 phi_p(s) phi_q(s - w) ds.
    const double diag = h2 * (j[0] / 3.0 - j[1] / 2.0 + j[3] / 6.0);
    m.d[0][0] = diag;
    m.d[1][1] = diag;
    m.d[0][1] = h2 * (j[0] / 6.0 - j[1] / 2.0 + j[2] / 2.0 - j[3] / 6.0);
    m.d[1][0] = h2 * (j[0] / 6.0 + j[1] / 2.0 - j[2] / 2.0 - j[3] / 6.0);
    return m;
}

}  // namespace cwopo::detail
