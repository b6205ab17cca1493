#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <doctest.h>

#include "cwopo/errors.hpp"
#include "cwopo/opo_model.hpp"
#include "cwopo/oracles.hpp"
#include "support.hpp"

using namespace cwopo;

TEST_SUITE("opo_model") {

TEST_CASE("decay rates") {
    auto r = lambda_mu(OpoParams(0.0));
    CHECK(r.lambda == doctest::Approx(0.5));
    CHECK(r.mu == doctest::Approx(0.5));
    r = lambda_mu(OpoParams(0.2));
    CHECK(r.lambda == doctest::Approx(0.7));
    CHECK(r.mu == doctest::Approx(0.3));
    r = lambda_mu(OpoParams(0.45));
    CHECK(r.lambda == doctest::Approx(0.95));
    CHECK(r.mu == doctest::Approx(0.05));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(OpoParams(-0.01), std::invalid_argument);
    CHECK_THROWS_AS(OpoParams(0.5), std::invalid_argument);
    CHECK_THROWS_AS(OpoParams(0.1, 1.2), std::invalid_argument);
    CHECK_THROWS_AS(OpoParams(0.1, 1.0, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(OpoParams(0.1, 1.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(OpoParams(std::nan("")), std::invalid_argument);
    CHECK_NOTHROW(OpoParams(0.5 - 1e-6));
}

TEST_CASE("long click box only warns") {
    std::vector<std::string> seen;
    set_warning_handler([&](std::string_view m) { seen.emplace_back(m); });
    OpoParams p(0.1, 1.0, 1.0, 0.5);
    set_warning_handler(nullptr);
    CHECK(p.dt_c() == 0.5);
    REQUIRE(seen.size() == 1);
    CHECK(seen[0].find("dt_c") != std::string::npos);
}

TEST_CASE("kernels vanish without gain") {
    OpoParams p(0.0);
    for (double tau : {0.0, 0.3, -2.0, 15.0}) {
        CHECK(kernel_anomalous(p, tau) == 0.0);
        CHECK(kernel_normal(p, tau) == 0.0);
    }
    CHECK(mean_intensity(p) == 0.0);
}

TEST_CASE("anomalous kernel at zero delay") {
    OpoParams p(0.2);
    const double l = 0.7, m = 0.3;
    CHECK(kernel_anomalous(p, 0.0) == doctest::Approx((l * l - m * m) * (l + m) / (8 * l * m)).epsilon(1e-14));
    // Laplace-type check: the integral over all delays of each exponential term.
    auto q = oracle::quad1d([&](double t) { return kernel_anomalous(p, t); }, -200.0, 200.0, 1e-12, {0.0});
    const double pref = 0.25 * (l * l - m * m);
    CHECK(q.value == doctest::Approx(pref * (1.0 / (m * m) + 1.0 / (l * l))).epsilon(1e-10));
    CHECK(kernel_anomalous(p, 3.0) == kernel_anomalous(p, -3.0));
}

TEST_CASE("normal kernel values") {
    CHECK(kernel_normal(OpoParams(0.2), 0.0) == doctest::Approx(0.095238095238095).epsilon(1e-12));
    OpoParams p(0.1);
    CHECK(kernel_normal(p, 0.0) / kernel_normal(p, 20.0) > 1e3);
}

TEST_CASE("mean intensity in the click box") {
    const double a = mean_intensity(OpoParams(0.2)) * 1.0 * 0.02;
    CHECK(a == doctest::Approx(2e-3).epsilon(0.05));
    const double b = mean_intensity(OpoParams(0.45)) * 1.0 * 0.02;
    CHECK(b == doctest::Approx(4e-2).epsilon(0.10));
}

TEST_CASE("kernel properties on random parameters") {
    for (int k = 0; k < 200; ++k) {
        OpoParams p(testing::uniform(0.0, 0.4999));
        CHECK(kernel_normal(p, 0.0) == doctest::Approx(mean_intensity(p)).epsilon(1e-14));
        for (int j = 0; j < 5; ++j) {
            const double tau = testing::uniform(-30.0, 30.0);
            const double ka = kernel_anomalous(p, tau), kn = kernel_normal(p, tau);
            CHECK(ka == kernel_anomalous(p, -tau));
            CHECK(kn == kernel_normal(p, -tau));
            CHECK(kn >= 0.0);
            CHECK(ka >= kn);
        }
    }
}

TEST_CASE("exponential-sum descriptors match the kernels") {
    for (double eps : {0.0, 1e-5, 0.1, 0.3, 0.49}) {
        OpoParams p(eps);
        auto ka = anomalous_kernel(p), kn = normal_kernel(p);
        for (double tau : {0.0, 0.1, -1.5, 7.0}) {
            CHECK(ka(tau) == doctest::Approx(kernel_anomalous(p, tau)).epsilon(1e-13));
            CHECK(kn(tau) == doctest::Approx(kernel_normal(p, tau)).epsilon(1e-9).scale(1e-16));
        }
    }
}

TEST_CASE("small epsilon stays accurate") {
    OpoParams p(1e-7);
    // leading order: 2 e^2
    CHECK(kernel_normal(p, 0.0) == doctest::Approx(2e-14).epsilon(1e-9));
    CHECK(kernel_normal(p, 1.0) > 0.0);
}

TEST_CASE("near threshold stays finite") {
    OpoParams p(0.5 - 1e-6);
    for (double tau : {0.0, 1.0, 1e3}) {
        CHECK(std::isfinite(kernel_anomalous(p, tau)));
        CHECK(std::isfinite(kernel_normal(p, tau)));
    }
    CHECK(kernel_normal(p, 0.0) == doctest::Approx(mean_intensity(p)).epsilon(1e-9));
}

TEST_CASE("ExpKernel rejects nonpositive rates") {
    CHECK_THROWS_AS(ExpKernel({{1.0, 0.0}}), std::invalid_argument);
    ExpKernel k({{2.0, 1.0}});
    CHECK(k.scaled(0.5)(0.0) == doctest::Approx(1.0));
}

}
