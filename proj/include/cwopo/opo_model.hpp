#pragma once

#include <vector>

namespace cwopo {

/// One term c * exp(-rate * |tau|) of a two-time correlation kernel.
struct ExpTerm {
    double coeff;
    double rate;
};

/// Finite sum of two-sided exponentials; the form every correlation kernel
/// of the cavity output takes. All rates must be strictly positive.
class ExpKernel {
public:
    ExpKernel() = default;
    explicit ExpKernel(std::vector<ExpTerm> terms);

    double operator()(double tau) const;

    const std::vector<ExpTerm>& terms() const { return terms_; }
    ExpKernel scaled(double factor) const;

private:
    std::vector<ExpTerm> terms_;
};

/// Physical configuration of the source and detectors. Times and rates are in
/// units of the cavity decay rate, which is fixed to one.
class OpoParams {
public:
    /// Throws std::invalid_argument unless 0 <= epsilon < 1/2, both
    /// efficiencies lie in [0, 1] and dt_c > 0. A click box longer than 0.1
    /// only produces a warning since every trigger integral uses the
    /// short-box limit.
    explicit OpoParams(double epsilon, double eta_t = 1.0, double eta_s = 1.0,
                       double dt_c = 0.02);

    static constexpr double gamma() { return 1.0; }
    double epsilon() const { return epsilon_; }
    double eta_t() const { return eta_t_; }
    double eta_s() const { return eta_s_; }
    double dt_c() const { return dt_c_; }

    OpoParams with_epsilon(double epsilon) const;
    OpoParams with_eta_t(double eta_t) const;
    OpoParams with_eta_s(double eta_s) const;

private:
    double epsilon_;
    double eta_t_;
    double eta_s_;
    double dt_c_;
};

struct DecayRates {
    double lambda;
    double mu;
};

/// lambda = gamma/2 + epsilon, mu = gamma/2 - epsilon.
DecayRates lambda_mu(const OpoParams& params);

/// <a_+(t) a_-(t + tau)>, the pair-creation correlation between the twin beams.
double kernel_anomalous(const OpoParams& params, double tau);

/// <a_s^dag(t) a_s(t + tau)>, the intensity correlation within one beam.
/// Evaluated in a form free of the lambda/mu cancellation at small epsilon.
double kernel_normal(const OpoParams& params, double tau);

/// Mean photon flux of either twin beam, 2 e^2 / (1 - 4 e^2).
double mean_intensity(const OpoParams& params);

ExpKernel anomalous_kernel(const OpoParams& params);
ExpKernel normal_kernel(const OpoParams& params);

}  // namespace cwopo
