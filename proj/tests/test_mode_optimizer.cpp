#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "cwopo/errors.hpp"
#include "cwopo/gaussian_conditioning.hpp"
#include "cwopo/mode_optimizer.hpp"
#include "support.hpp"

using namespace cwopo;

namespace {

OptimizerConfig coarse(ObjectiveMode mode, std::size_t n = 401) {
    OptimizerConfig c;
    c.mode = mode;
    c.samples = n;
    return c;
}

bool dips_on_both_flanks(const ModeGrid& f) {
    const auto v = f.values();
    const std::size_t c = v.size() / 2;
    auto has_min = [&](int dir) {
        for (std::size_t k = 1; k + 1 < c; ++k) {
            const std::size_t i = c + dir * static_cast<long>(k);
            if (v[i] < v[i - dir] && v[i] < v[i + dir]) return true;
        }
        return false;
    };
    return has_min(1) && has_min(-1);
}

}  // namespace

TEST_SUITE("mode_optimizer") {

TEST_CASE("configuration validation") {
    OptimizerConfig c;
    CHECK_NOTHROW(c.validate());
    c.alpha = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.tol = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.max_iter = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.samples = 400;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("stationarity coefficients") {
    const auto f = exp_mode(0.0, 10.0, 801);
    OpoParams p(0.1);
    auto c = c_coefficients(build_click_signal_cov(p, f, {}), p);
    CHECK(c.c1 == doctest::Approx(-2.1403682291104271).epsilon(1e-8));
    CHECK(c.c2 == doctest::Approx(31.74846392618548).epsilon(1e-8));

    auto c_half = c_coefficients(build_click_signal_cov(p.with_eta_t(0.3), f, {}), p.with_eta_t(0.3));
    CHECK(c_half.c1 == doctest::Approx(c.c1).epsilon(1e-10));
    CHECK(c_half.c2 == doctest::Approx(c.c2).epsilon(1e-10));

    OpoParams tiny(1e-4);
    auto ct = c_coefficients(build_click_signal_cov(tiny, f, {}), tiny);
    CHECK(std::abs(ct.c1 * mean_intensity(tiny)) < 1e-6);
    CHECK(std::isfinite(ct.c2));

    CHECK_THROWS_AS(c_coefficients(build_click_signal_cov(OpoParams(0.0), f, {}), OpoParams(0.0)), NoClickInformation);
}

TEST_CASE("objective agrees with the covariance pipeline") {
    testing::QuietWarnings quiet;
    for (int k = 0; k < 20; ++k) {
        OpoParams p(testing::uniform(0.02, 0.45), testing::uniform(0.1, 1.0), testing::uniform(0.1, 1.0));
        const ClickMode click{};
        const auto w = k % 2 ? WindowSpec::symmetric(0.04 * (1 + k)) : WindowSpec{};
        auto f = testing::random_mode(8.0, 161);
        FidelityObjective obj(p, click, w, f.grid());
        CHECK(obj.value(f.vector()) == doctest::Approx(conditioned_fidelity(p, f, click, w)).epsilon(1e-10));
    }
}

TEST_CASE("gradient matches finite differences") {
    testing::QuietWarnings quiet;
    for (int k = 0; k < 12; ++k) {
        OpoParams p(testing::uniform(0.02, 0.45), testing::uniform(0.1, 1.0), testing::uniform(0.1, 1.0));
        const auto w = k % 3 ? WindowSpec::symmetric(0.04 * (1 + 3 * k)) : WindowSpec{};
        auto f = testing::random_mode(8.0, 121);
        FidelityObjective obj(p, {}, w, f.grid());
        Eigen::VectorXd x = f.vector(), grad;
        obj.value_and_gradient(x, grad);
        for (int d = 0; d < 4; ++d) {
            Eigen::VectorXd dir = Eigen::VectorXd::NullaryExpr(x.size(), [] { return testing::uniform(-1.0, 1.0); });
            dir /= dir.norm();
            const double h = 1e-5;
            const double fd = (obj.value(x + h * dir) - obj.value(x - h * dir)) / (2 * h);
            const double an = grad.dot(dir);
            CHECK(an == doctest::Approx(fd).epsilon(1e-6).scale(grad.norm() * 1e-3));
        }
    }
}

TEST_CASE("zero gain returns the exponential mode") {
    OpoParams p(0.0, 1.0, 0.8);
    auto r = optimize_fixed_point(p, {});
    auto e = exp_mode(0.0, 10.0, 801);
    for (std::size_t i = 0; i < e.size(); ++i) CHECK(r.mode[i] == e[i]);
    CHECK(r.fidelity == doctest::Approx(0.8).epsilon(1e-3));
    CHECK(r.fidelity == doctest::Approx(zero_intensity_fidelity(p, e, {})));
}

TEST_CASE("low gain keeps the exponential mode") {
    for (double eta_s : {1.0, 0.8}) {
        OpoParams p(1e-4, 1.0, eta_s);
        auto r = optimize_fixed_point(p, {});
        auto e = exp_mode(0.0, 10.0, 801);
        double diff = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) diff = std::max(diff, std::abs(r.mode[i] - e[i]));
        CHECK(diff < 1e-3);
        CHECK(r.fidelity == doctest::Approx(eta_s).epsilon(1e-3));
    }
}

TEST_CASE("moderate gain improves on the exponential mode") {
    OpoParams p(0.1);
    auto r = optimize_fixed_point(p, {});
    const double base = conditioned_fidelity(p, exp_mode(0.0, 10.0, 801), {});
    CHECK(r.fidelity > base);
    CHECK(r.fidelity - base < 0.02);
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i].fidelity >= r.trace[i - 1].fidelity);
}

TEST_CASE("high gain narrows the mode and adds side dips") {
    OpoParams p(0.3);
    auto r = optimize_fixed_point(p, {});
    auto e = exp_mode(0.0, 10.0, 801);
    CHECK(full_width_half_max(r.mode) < full_width_half_max(e));
    CHECK(dips_on_both_flanks(r.mode));
    CHECK(!dips_on_both_flanks(e));
    CHECK(r.mode(0.0) > 0.0);
    for (std::size_t i = 0; i < r.mode.size(); ++i) CHECK(r.mode[i] == doctest::Approx(r.mode[r.mode.size() - 1 - i]).epsilon(1e-6).scale(1e-6));
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i].fidelity >= r.trace[i - 1].fidelity);
}

TEST_CASE("both optimizers agree without a window") {
    OpoParams p(0.2);
    auto a = optimize_fixed_point(p, {});
    OptimizerConfig cfg;
    cfg.mode = ObjectiveMode::gradient_ascent;
    auto b = optimize_general(p, {}, {}, cfg);
    CHECK(a.fidelity == doctest::Approx(b.fidelity).epsilon(1e-4));
    CHECK(l2_distance(a.mode, b.mode) < 1e-3);
    for (std::size_t i = 1; i < b.trace.size(); ++i) CHECK(b.trace[i].fidelity >= b.trace[i - 1].fidelity);
}

TEST_CASE("sign of the starting mode does not matter") {
    OpoParams p(0.25);
    auto cfg = coarse(ObjectiveMode::fixed_point);
    auto a = optimize_fixed_point(p, {}, cfg);
    cfg.start = exp_mode(0.0, 10.0, 401).scaled(-1.0);
    auto b = optimize_fixed_point(p, {}, cfg);
    CHECK(l2_distance(a.mode, b.mode) < 1e-6);
    CHECK(b.mode(0.0) > 0.0);
    cfg.mode = ObjectiveMode::gradient_ascent;
    auto c = optimize_general(p, {}, WindowSpec::symmetric(2.0), cfg);
    CHECK(c.mode(0.0) > 0.0);
}

TEST_CASE("symmetric windows give symmetric modes") {
    OpoParams p(0.2, 0.7);
    auto r = optimize_general(p, {}, WindowSpec::symmetric(4.0), coarse(ObjectiveMode::gradient_ascent));
    for (std::size_t i = 0; i < r.mode.size(); ++i)
        CHECK(r.mode[i] == doctest::Approx(r.mode[r.mode.size() - 1 - i]).epsilon(1e-6).scale(1e-6));
}

TEST_CASE("dark trigger reproduces the unwindowed optimum") {
    OpoParams p(0.2, 0.0);
    auto cfg = coarse(ObjectiveMode::gradient_ascent);
    auto a = optimize_general(p, {}, {}, cfg);
    for (double T : {1.0, 5.0}) {
        auto b = optimize_general(p, {}, WindowSpec::symmetric(T), cfg);
        CHECK(b.fidelity == doctest::Approx(a.fidelity).epsilon(1e-10));
        CHECK(l2_distance(a.mode, b.mode) < 1e-6);
    }
}

TEST_CASE("long window moves the optimum back towards the exponential mode") {
    OpoParams p(0.2);
    auto cfg = coarse(ObjectiveMode::gradient_ascent);
    auto e = exp_mode(0.0, 10.0, 401);
    auto a = optimize_general(p, {}, {}, cfg);
    auto b = optimize_general(p, {}, WindowSpec::symmetric(10.0), cfg);
    CHECK(l2_distance(b.mode, e) < l2_distance(a.mode, e));
    CHECK(b.fidelity > a.fidelity);
}

TEST_CASE("monotone trends") {
    auto cfg = coarse(ObjectiveMode::gradient_ascent, 201);
    SUBCASE("fidelity falls with gain") {
        double prev = 1.0;
        for (double e : {0.05, 0.15, 0.25, 0.35, 0.45}) {
            const double F = optimize_general(OpoParams(e), {}, {}, cfg).fidelity;
            CHECK(F < prev);
            prev = F;
        }
    }
    SUBCASE("fidelity grows with the window") {
        for (double eta_t : {0.4, 1.0}) {
            double prev = 0.0;
            for (double T : {0.0, 2.0, 6.0, 10.0}) {
                const double F = optimize_general(OpoParams(0.2, eta_t), {}, WindowSpec::symmetric(T), cfg).fidelity;
                CHECK(F >= prev - 1e-9);
                prev = F;
            }
        }
    }
    SUBCASE("window gain grows with gain") {
        double prev = 0.0;
        for (double e : {0.1, 0.2, 0.3}) {
            OpoParams p(e);
            const double gain = optimize_general(p, {}, WindowSpec::symmetric(10.0), cfg).fidelity -
                                optimize_general(p, {}, {}, cfg).fidelity;
            CHECK(gain > prev);
            prev = gain;
        }
    }
}

TEST_CASE("iteration budget exhaustion keeps the last iterate") {
    OptimizerConfig cfg;
    cfg.max_iter = 3;
    try {
        optimize_fixed_point(OpoParams(0.3), {}, cfg);
        FAIL("expected non-convergence");
    } catch (const OptimizerNotConverged& e) {
        CHECK(e.iterations() == 3);
        CHECK(e.last().trace.size() == 4);
        CHECK(e.residual() > 0.0);
        CHECK(e.last().fidelity > conditioned_fidelity(OpoParams(0.3), exp_mode(0.0, 10.0, 801), {}));
    }
}

TEST_CASE("dispatch") {
    OptimizerConfig cfg;
    CHECK_THROWS_AS(optimize(OpoParams(0.2), {}, WindowSpec::symmetric(1.0), cfg), std::invalid_argument);
}

TEST_CASE("phase") {
    OpoParams p(0.2);
    const auto e = exp_mode(0.0, 10.0, 401);
    SUBCASE("real modes are stationary") {
        CHECK(phase_stationarity_check(p, e, {}) < 1e-6);
        CHECK(phase_stationarity_check(OpoParams(0.05), e, {}, 1.1) < 1e-6);
        auto r = optimize_fixed_point(p, {}, coarse(ObjectiveMode::fixed_point));
        CHECK(phase_stationarity_check(p, r.mode, {}) < 1e-6);
    }
    SUBCASE("global phase leaves the fidelity unchanged") {
        const double F = conditioned_fidelity(p, e, {});
        for (double th : {0.3, 1.7, 3.0}) {
            ComplexMode z{e.scaled(std::cos(th)), e.scaled(std::sin(th))};
            CHECK(fidelity_complex(p, z, {}) == doctest::Approx(F).epsilon(1e-10));
        }
    }
    SUBCASE("rapid phase alternation costs fidelity") {
        OpoParams p(0.02);
        std::vector<double> re(e.size()), im(e.size());
        for (std::size_t i = 0; i < e.size(); ++i) {
            const double th = (i % 2) ? 0.5 * M_PI : 0.0;
            re[i] = e[i] * std::cos(th);
            im[i] = e[i] * std::sin(th);
        }
        ModeGrid a(e.t_start(), e.dt(), re), b(e.t_start(), e.dt(), im);
        const double n = std::sqrt(norm_squared(a) + norm_squared(b));
        const double F = fidelity_complex(p, {a.scaled(1 / n), b.scaled(1 / n)}, {});
        CHECK(F < conditioned_fidelity(p, e, {}));
        CHECK(F >= 0.0);
    }
}

}
