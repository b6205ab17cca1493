#include "cwopo/opo_model.hpp"

#include <cmath>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>

#include "cwopo/errors.hpp"

namespace cwopo {

namespace {

std::mutex& handler_mutex() {
    static std::mutex m;
    return m;
}

WarningHandler& handler_slot() {
    static WarningHandler h = [](std::string_view msg) {
        std::cerr << "cwopo: warning: " << msg << '\n';
    };
    return h;
}

}  // namespace

void set_warning_handler(WarningHandler handler) {
    std::lock_guard lock(handler_mutex());
    handler_slot() = std::move(handler);
}

void warn(std::string_view message) {
    std::lock_guard lock(handler_mutex());
    if (handler_slot()) handler_slot()(message);
}

ExpKernel::ExpKernel(std::vector<ExpTerm> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_) {
        if (!(t.rate > 0.0)) throw std::invalid_argument("ExpKernel: decay rates must be positive");
    }
}

double ExpKernel::operator()(double tau) const {
    const double a = std::abs(tau);
    double sum = 0.0;
    for (const auto& t : terms_) sum += t.coeff * std::exp(-t.rate * a);
    return sum;
}

ExpKernel ExpKernel::scaled(double factor) const {
    auto terms = terms_;
    for (auto& t : terms) t.coeff *= factor;
    return ExpKernel(std::move(terms));
}

OpoParams::OpoParams(double epsilon, double eta_t, double eta_s, double dt_c)
    : epsilon_(epsilon), eta_t_(eta_t), eta_s_(eta_s), dt_c_(dt_c) {
    if (!(epsilon >= 0.0 && epsilon < 0.5 * gamma()))
        throw std::invalid_argument("epsilon must satisfy 0 <= epsilon < gamma/2 (below threshold)");
    if (!(eta_t >= 0.0 && eta_t <= 1.0)) throw std::invalid_argument("eta_t must lie in [0, 1]");
    if (!(eta_s >= 0.0 && eta_s <= 1.0)) throw std::invalid_argument("eta_s must lie in [0, 1]");
    if (!(dt_c > 0.0)) throw std::invalid_argument("dt_c must be positive");
    if (dt_c * gamma() > 0.1)
        warn("dt_c * gamma = " + std::to_string(dt_c) + " exceeds 0.1; the short-box limit may be inaccurate");
}

OpoParams OpoParams::with_epsilon(double epsilon) const {
    return OpoParams(epsilon, eta_t_, eta_s_, dt_c_);
}

OpoParams OpoParams::with_eta_t(double eta_t) const {
    return OpoParams(epsilon_, eta_t, eta_s_, dt_c_);
}

OpoParams OpoParams::with_eta_s(double eta_s) const {
    return OpoParams(epsilon_, eta_t_, eta_s, dt_c_);
}

DecayRates lambda_mu(const OpoParams& params) {
    const double half = 0.5 * OpoParams::gamma();
    return {half + params.epsilon(), half - params.epsilon()};
}

double kernel_anomalous(const OpoParams& params, double tau) {
    const auto [lambda, mu] = lambda_mu(params);
    const double a = std::abs(tau);
    const double pref = 0.25 * (lambda * lambda - mu * mu);
    return pref * (std::exp(-mu * a) / (2.0 * mu) + std::exp(-lambda * a) / (2.0 * lambda));
}

double kernel_normal(const OpoParams& params, double tau) {
    const auto [lambda, mu] = lambda_mu(params);
    const double eps = params.epsilon();
    const double a = std::abs(tau);
    const double pref = 0.25 * (lambda * lambda - mu * mu);
    // lambda e^{-mu a} - mu e^{-lambda a} = e^{-mu a} (2 eps - mu expm1(-2 eps a))
    const double num = std::exp(-mu * a) * (2.0 * eps - mu * std::expm1(-2.0 * eps * a));
    return pref * num / (2.0 * lambda * mu);
}

double mean_intensity(const OpoParams& params) {
    const double e = params.epsilon() / OpoParams::gamma();
    return 2.0 * e * e * OpoParams::gamma() / (1.0 - 4.0 * e * e);
}

ExpKernel anomalous_kernel(const OpoParams& params) {
    const auto [lambda, mu] = lambda_mu(params);
    const double pref = 0.25 * (lambda * lambda - mu * mu);
    return ExpKernel({{pref / (2.0 * mu), mu}, {pref / (2.0 * lambda), lambda}});
}

ExpKernel normal_kernel(const OpoParams& params) {
    const auto [lambda, mu] = lambda_mu(params);
    const double pref = 0.25 * (lambda * lambda - mu * mu);
    return ExpKernel({{pref / (2.0 * mu), mu}, {-pref / (2.0 * lambda), lambda}});
}

}  // namespace cwopo
