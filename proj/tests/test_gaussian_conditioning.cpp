#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "cwopo/errors.hpp"
#include "cwopo/gaussian_conditioning.hpp"
#include "cwopo/oracles.hpp"
#include "support.hpp"

using namespace cwopo;

namespace {

const ModeGrid& reference_mode() {
    static const ModeGrid f = exp_mode(0.0, 10.0, 801);
    return f;
}

OpoParams random_params() {
    return OpoParams(testing::uniform(0.01, 0.45), testing::uniform(0.05, 1.0), testing::uniform(0.05, 1.0));
}

ComplexMode random_complex_mode() {
    auto re = testing::random_mode(8.0, 81);
    auto im = testing::random_mode(8.0, 81).scaled(testing::uniform(0.0, 1.0));
    const double n = std::sqrt(norm_squared(re) + norm_squared(im));
    return {re.scaled(1.0 / n), im.scaled(1.0 / n)};
}

void check_pattern(const Cov& c) {
    const auto& v = c.matrix();
    CHECK(v(0, 1) == doctest::Approx(0.0));
    CHECK(v(2, 3) == doctest::Approx(0.0));
    CHECK(v(0, 0) == doctest::Approx(v(1, 1)).epsilon(1e-12));
    CHECK(v(2, 2) == doctest::Approx(v(3, 3)).epsilon(1e-12));
    CHECK(v(0, 2) == doctest::Approx(-v(1, 3)).epsilon(1e-12));
    CHECK(v(0, 3) == doctest::Approx(v(1, 2)).epsilon(1e-12));
}

double min_symplectic(const Eigen::MatrixXd& v) { return symplectic_eigenvalues(v).minCoeff(); }

}  // namespace

TEST_SUITE("gaussian_conditioning") {

TEST_CASE("covariance validation") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 4);
    CHECK_NOTHROW(Cov({"a", "b"}, m));
    CHECK_THROWS_AS(Cov({"a"}, m), std::invalid_argument);
    m(0, 1) = 0.1;
    CHECK_THROWS_AS(Cov({"a", "b"}, m), std::invalid_argument);
    CHECK(Cov({"a", "b"}, Eigen::MatrixXd::Identity(4, 4)).is_positive_definite());
}

TEST_CASE("zero gain gives vacuum") {
    auto c = build_click_signal_cov(OpoParams(0.0), reference_mode(), {});
    CHECK((c.matrix() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("click-signal elements at low gain") {
    auto c = build_click_signal_cov(OpoParams(0.02), reference_mode(), {});
    check_pattern(c);
    CHECK(c(0, 0) == doctest::Approx(1.0000320512820513).epsilon(1e-12));
    CHECK(c(2, 2) == doctest::Approx(1.0080112128104552).epsilon(1e-12));
    CHECK(c(0, 2) == doctest::Approx(0.0080222459285883285).epsilon(1e-10));
    CHECK(c(0, 3) == 0.0);
}

TEST_CASE("click-signal elements against live quadrature") {
    auto f = exp_mode(0.0, 8.0, 81);
    OpoParams p(0.15, 0.7, 0.9);
    auto c = build_click_signal_cov(p, f, {});
    Eigen::MatrixXd q = oracle::quad_extended_cov(p, f, {}, {});
    CHECK((c.matrix() - q).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("efficiency scaling") {
    OpoParams p(0.2, 1.0);
    auto a = build_click_signal_cov(p, reference_mode(), {});
    auto b = build_click_signal_cov(p.with_eta_t(0.25), reference_mode(), {});
    CHECK(b(0, 0) - 1.0 == doctest::Approx(0.25 * (a(0, 0) - 1.0)).epsilon(1e-12));
    CHECK(b(0, 2) == doctest::Approx(0.5 * a(0, 2)).epsilon(1e-12));
    CHECK(b(2, 2) == doctest::Approx(a(2, 2)).epsilon(1e-14));
}

TEST_CASE("window layout") {
    ClickMode click{0.0, 0.02};
    auto w = WindowSpec::symmetric(10.0);
    auto boxes = w.boxes(click);
    CHECK(boxes.size() == 500);
    CHECK(boxes[249].end == doctest::Approx(-0.01));
    CHECK(boxes[250].start == doctest::Approx(0.01));
    for (std::size_t i = 1; i < boxes.size(); ++i) CHECK(boxes[i].start >= boxes[i - 1].start);
    CHECK_THROWS_AS(WindowSpec::symmetric(0.05).boxes(click), std::invalid_argument);
    CHECK_THROWS_AS(WindowSpec::symmetric(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(WindowSpec::explicit_boxes({{-0.005, 0.015}}).boxes(click), std::invalid_argument);
    CHECK(WindowSpec::explicit_boxes({{0.01, 0.03}}).boxes(click).size() == 1);
    CHECK(WindowSpec::symmetric(1.0, 0.05).boxes(click).size() == 20);
    CHECK(WindowSpec{}.boxes(click).empty());
}

TEST_CASE("extended covariance") {
    OpoParams p(0.2);
    const auto& f = reference_mode();
    SUBCASE("empty window reproduces the click-signal block") {
        auto a = build_extended_cov(p, f, {}, {});
        auto b = build_click_signal_cov(p, f, {});
        CHECK((a.matrix() - b.matrix()).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("frozen two-box x block") {
        auto c = build_extended_cov(p, f, {}, WindowSpec::symmetric(0.04));
        REQUIRE(c.modes() == 4);
        const double ref[4][4] = {
            {1.0038095238095237, 0.10711718721952607, 0.0038093648719894858, 0.0038093648719894858},
            {0.10711718721952607, 2.0153741296681522, 0.1071130465112755, 0.10711304651127559},
            {0.0038093648719894858, 0.1071130465112755, 1.0038095238095237, 0.0038088922758378781},
            {0.0038093648719894858, 0.10711304651127559, 0.0038088922758378781, 1.0038095238095237},
        };
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) CHECK(c(2 * i, 2 * j) == doctest::Approx(ref[i][j]).epsilon(1e-10));
    }
    SUBCASE("two boxes against live quadrature") {
        auto g = exp_mode(0.0, 8.0, 61);
        WindowSpec w = WindowSpec::explicit_boxes({{-1.0, -0.98}, {0.5, 0.52}});
        auto c = build_extended_cov(p.with_eta_t(0.4), g, {}, w);
        Eigen::MatrixXd q = oracle::quad_extended_cov(p.with_eta_t(0.4), g, {}, w);
        CHECK((c.matrix() - q).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("dark trigger decouples") {
        auto c = build_extended_cov(p.with_eta_t(0.0), f, {}, WindowSpec::symmetric(1.0));
        const auto& v = c.matrix();
        const Eigen::Index n = v.rows();
        Eigen::MatrixXd trig(n - 2, n - 2);
        trig << v.topLeftCorner(2, 2), v.topRightCorner(2, n - 4), v.bottomLeftCorner(n - 4, 2),
            v.bottomRightCorner(n - 4, n - 4);
        CHECK((trig - Eigen::MatrixXd::Identity(n - 2, n - 2)).cwiseAbs().maxCoeff() == 0.0);
        CHECK(v.block(2, 4, 2, n - 4).cwiseAbs().maxCoeff() == 0.0);
        CHECK(v.block(0, 2, 2, 2).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("finite boxes converge to the short-box limit") {
        OpoParams q(0.2, 1.0, 1.0, 0.002);
        ClickMode click{0.0, 0.002};
        auto w = WindowSpec::symmetric(0.2);
        CovOptions exact{BoxIntegration::exact, std::nullopt};
        auto a = vacuum_condition(build_extended_cov(q, f, click, w));
        auto b = vacuum_condition(build_extended_cov(q, f, click, w, exact));
        CHECK(fidelity_one_photon(a) == doctest::Approx(fidelity_one_photon(b)).epsilon(1e-5));
    }
}

TEST_CASE("vacuum conditioning") {
    OpoParams p(0.2);
    const auto& f = reference_mode();
    SUBCASE("uncorrelated boxes leave the block unchanged") {
        Eigen::MatrixXd v = Eigen::MatrixXd::Identity(8, 8);
        v.topLeftCorner(4, 4) = build_click_signal_cov(p, f, {}).matrix();
        v(4, 4) = v(5, 5) = 1.7;
        auto out = vacuum_condition(Cov({"click", "signal", "a", "b"}, v));
        CHECK((out.matrix() - v.topLeftCorner(4, 4)).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("dark trigger reproduces the unwindowed state") {
        for (double T : {1.0, 5.0, 10.0}) {
            const double a = conditioned_fidelity(p.with_eta_t(0.0), f, {}, WindowSpec::symmetric(T));
            const double b = conditioned_fidelity(p.with_eta_t(0.0), f, {}, {});
            CHECK(a == doctest::Approx(b).epsilon(1e-12));
        }
    }
    SUBCASE("one box against direct projection") {
        auto c = build_extended_cov(p, f, {}, WindowSpec::explicit_boxes({{0.3, 0.32}}));
        auto a = vacuum_condition(c).matrix();
        auto b = oracle::direct_vacuum_projection(c).matrix();
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("pattern survives conditioning") { check_pattern(vacuum_condition(build_extended_cov(p, f, {}, WindowSpec::symmetric(2.0)))); }
    SUBCASE("non-positive box block is rejected") {
        Eigen::MatrixXd v = Eigen::MatrixXd::Identity(6, 6);
        v(4, 4) = v(5, 5) = -3.0;
        CHECK_THROWS_AS(vacuum_condition(Cov({"c", "s", "b"}, v)), UnphysicalCovariance);
    }
}

TEST_CASE("random physical states: projection and physicality") {
    for (int k = 0; k < 120; ++k) {
        const int modes = 3 + (k % 2);
        Cov c(std::vector<std::string>(modes, "m"), testing::random_physical_cov(modes));
        CHECK(min_symplectic(c.matrix()) >= 1.0 - 1e-9);
        auto a = vacuum_condition(c).matrix();
        auto b = oracle::direct_vacuum_projection(c).matrix();
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, b.cwiseAbs().maxCoeff()));
        CHECK(min_symplectic(a) >= 1.0 - 1e-9);
    }
}

TEST_CASE("model states: physicality before and after conditioning") {
    testing::QuietWarnings quiet;
    for (int k = 0; k < 100; ++k) {
        auto p = random_params();
        auto f = testing::random_mode(6.0, 61);
        ClickMode click{testing::uniform(-1.0, 1.0), 0.02};
        const double T = 0.04 * (1 + k % 6);
        auto c = build_extended_cov(p, f, click, WindowSpec::symmetric(T));
        CHECK(min_symplectic(c.matrix()) >= 1.0 - 1e-9);
        CHECK(min_symplectic(vacuum_condition(c).matrix()) >= 1.0 - 1e-9);
    }
}

TEST_CASE("click conditioning at low gain") {
    auto c = build_click_signal_cov(OpoParams(0.02), reference_mode(), {});
    auto w = click_condition(c);
    CHECK(wigner_eval(w, 0.0, 0.0) == doctest::Approx(-0.3133).epsilon(0.001 / 0.3133));
    CHECK(fidelity_one_photon(c) == doctest::Approx(0.9921).epsilon(0.0005 / 0.9921));
    CHECK(w.normalization() == doctest::Approx(1.0).epsilon(1e-12));

    // Trapezoid over [-6, 6]^2.
    const int n = 481;
    const double h = 12.0 / (n - 1);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double wt = (i == 0 || i == n - 1 ? 0.5 : 1.0) * (j == 0 || j == n - 1 ? 0.5 : 1.0);
            sum += wt * w(-6.0 + h * i, -6.0 + h * j);
        }
    }
    CHECK(sum * h * h == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("uncorrelated trigger leaves the thermal signal") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(4, 4);
    v(0, 0) = v(1, 1) = 1.3;
    v(2, 2) = v(3, 3) = 1.6;
    auto w = click_condition(Cov({"c", "s"}, v));
    CHECK(w.a2 == 0.0);
    CHECK(w.a1 == doctest::Approx(1.0 / (std::numbers::pi * 1.6)));
    v(0, 0) = v(1, 1) = 1.0;
    CHECK_THROWS_AS(click_condition(Cov({"c", "s"}, v)), NoClickInformation);
    CHECK_THROWS_AS(fidelity_one_photon(Cov({"c", "s"}, v)), NoClickInformation);
}

TEST_CASE("zero gain has no click information") {
    auto c = build_click_signal_cov(OpoParams(0.0), reference_mode(), {});
    CHECK_THROWS_AS(click_condition(c), NoClickInformation);
}

TEST_CASE("one-photon Wigner function") {
    CHECK(wigner_one_photon(0.0, 0.0) == doctest::Approx(-1.0 / std::numbers::pi));
    CHECK(wigner_one_photon(0.5, 0.5) == doctest::Approx(0.0));
    oracle::Domain2D d{-9.0, 9.0, -9.0, 9.0, {0.0}, {0.0}, false};
    CHECK(oracle::quad2d(wigner_one_photon, d, 1e-10).value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("random model states: Wigner invariants") {
    testing::QuietWarnings quiet;
    for (int k = 0; k < 150; ++k) {
        auto p = random_params();
        auto f = random_complex_mode();
        auto c = build_click_signal_cov(p, f, {});
        check_pattern(c);
        auto w = click_condition(c);
        CHECK(w.normalization() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(w.a3 > 0.0);
        CHECK(w.a2 >= 0.0);
        const double x = testing::uniform(-3.0, 3.0), y = testing::uniform(-3.0, 3.0);
        CHECK(w(x, y) == w(-x, -y));
        const double F = fidelity_one_photon(c);
        CHECK(F >= 0.0);
        CHECK(F <= 1.0);

        // efficiency cancels
        auto c2 = build_click_signal_cov(p.with_eta_t(p.eta_t() * testing::uniform(0.1, 1.0)), f, {});
        auto w2 = click_condition(c2);
        CHECK(w2.a1 == doctest::Approx(w.a1).epsilon(1e-10));
        CHECK(w2.a2 == doctest::Approx(w.a2).epsilon(1e-10));
        CHECK(w2.a3 == doctest::Approx(w.a3).epsilon(1e-12));
    }
}

TEST_CASE("fidelity equals the Wigner overlap") {
    testing::QuietWarnings quiet;
    for (int k = 0; k < 4; ++k) {
        auto p = random_params();
        auto c = build_click_signal_cov(p, random_complex_mode(), {});
        auto w = click_condition(c);
        const double q = oracle::fidelity_by_quadrature([&](double x, double y) { return w(x, y); });
        CHECK(fidelity_one_photon(c) == doctest::Approx(q).epsilon(1e-6).scale(1e-6));
    }
}

TEST_CASE("click Wigner equals the weighted trigger integral") {
    testing::QuietWarnings quiet;
    for (int k = 0; k < 2; ++k) {
        auto p = OpoParams(testing::uniform(0.05, 0.4), 1.0, testing::uniform(0.5, 1.0), 0.05);
        auto c = build_click_signal_cov(p, random_complex_mode(), {});
        auto w = click_condition(c);
        for (auto [x, y] : {std::pair{0.0, 0.0}, std::pair{0.7, -0.4}}) {
            CHECK(oracle::click_wigner_by_quadrature(c, x, y) == doctest::Approx(w(x, y)).epsilon(1e-6).scale(1e-3));
        }
    }
}

TEST_CASE("dark window never lowers the fidelity") {
    testing::QuietWarnings quiet;
    const auto f = exp_mode(0.0, 10.0, 201);
    for (double eps : {0.1, 0.3}) {
        for (double eta_t : {0.4, 1.0}) {
            OpoParams p(eps, eta_t);
            double prev = conditioned_fidelity(p, f, {}, {});
            for (double T : {0.4, 2.0, 6.0, 10.0}) {
                const double F = conditioned_fidelity(p, f, {}, WindowSpec::symmetric(T));
                CHECK(F >= prev - 1e-12);
                prev = F;
            }
        }
    }
}

}
