#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "motcal/fokker_planck.hpp"
#include "motcal/svm.hpp"

using namespace motcal;

TEST_CASE("heston catalog coefficients") {
    SvmSpec s = make_heston(1.0, 0.04, 0.5, -0.7, 0.001, 4.0);
    CHECK(s.sigma_tilde(0.04) == doctest::Approx(0.2));
    CHECK(s.b(1.0, 0.1) == doctest::Approx(1.0 * (0.04 - 0.1)));
    // tau2 at y = theta equals xi sqrt(1 - rho^2) sqrt(theta)
    CHECK(s.tau2(1.0, 0.04) ==
          doctest::Approx(0.5 * std::sqrt(1.0 - 0.49) * std::sqrt(0.04)));
    CHECK(s.tau1(1.0, 0.04) == doctest::Approx(-0.7 * 0.5 * 0.2));
    // truncation clamps the volatility loadings
    CHECK(s.sigma_tilde(100.0) == doctest::Approx(2.0));
    CHECK(s.sigma_tilde(-5.0) == doctest::Approx(std::sqrt(0.001)));

    CHECK_THROWS_AS(make_heston(1.0, 0.04, 0.5, 1.0, 0.001, 4.0), DomainError);
    CHECK_THROWS_AS(make_heston(1.0, 0.04, 0.5, -0.7, 0.0, 4.0), DomainError);
}

TEST_CASE("sabr catalog coefficients") {
    SvmSpec s = make_sabr(0.3, -3.0, 3.0, 1.0, 0.0);
    CHECK(s.sigma_tilde(-3.0) == doctest::Approx(std::exp(-3.0)));
    CHECK(s.sigma_tilde(3.0) == doctest::Approx(std::exp(3.0)));
    CHECK(s.sigma_tilde(10.0) == doctest::Approx(std::exp(3.0)));  // clamped
    CHECK(s.b(2.0, 1.0) == doctest::Approx(-0.045));
    CHECK(s.tau1(2.0, 1.0) == doctest::Approx(0.0));
    CHECK(s.tau2(0.5, -2.0) == doctest::Approx(0.3));
    CHECK(s.tau2_constant(0.1, 3.0, -3.0, 3.0));

    // tau2 = 0 degenerates the ratio bound: surfaced via lambda0, not an error
    SvmSpec z = make_sabr(0.0, -1.0, 1.0);
    auto rep = check_assumptions(z, Assumption::A3, 0.5, 2.0, -1.0, 1.0);
    bool degenerate_reported = !(std::isfinite(rep.lambda0) && rep.lambda0 > 0.0);
    CHECK(degenerate_reported);
}

TEST_CASE("assumption checks: truncated heston passes A3, untruncated fails") {
    SvmSpec good = make_heston(1.2, 0.04, 0.5, -0.5, 0.01, 2.0);
    auto rep = check_assumptions(good, Assumption::A3, 0.5, 2.0, 0.005, 2.5);
    CHECK(rep.pass);
    CHECK(std::isfinite(rep.lambda0));
    CHECK(rep.growth_constant < 10.0);

    // sqrt(y) down to 0: difference quotients blow up under refinement
    SvmSpec bad = make_heston(1.2, 0.04, 0.5, -0.5, 1e-12, 2.0);
    auto rep2 = check_assumptions(bad, Assumption::A3, 0.5, 2.0, 0.0, 0.5);
    CHECK_FALSE(rep2.pass);
}

TEST_CASE("assumption checks: SABR passes A4") {
    SvmSpec s = make_sabr(0.3, -2.0, 1.0);
    auto rep = check_assumptions(s, Assumption::A4, 0.3, 3.0, -2.5, 1.5);
    CHECK(rep.pass);
    CHECK(rep.sigma_tilde_bound == doctest::Approx(std::exp(1.0)));

    // constant-coefficient model: lambda0 = Lip(b) / |tau2| = 0
    auto repc = check_assumptions(s, Assumption::A3, 0.3, 3.0, -2.5, 1.5);
    CHECK(repc.pass);
    CHECK(repc.lambda0 == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("property: admissible heston draws always pass A3 on the truncation box") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 12; ++trial) {
        double kappa = 0.5 + 2.0 * u(rng);
        double theta = 0.02 + 0.1 * u(rng);
        double xi = 0.2 + 0.6 * u(rng);
        double rho = -0.9 + 1.8 * u(rng);
        SvmSpec s = make_heston(kappa, theta, xi, rho, 0.01, 3.0);
        auto rep = check_assumptions(s, Assumption::A3, 0.5, 2.0, 0.02, 2.8);
        CHECK(rep.pass);
    }
}

TEST_CASE("simulated prices stay positive from a positive start") {
    SvmSpec s = make_heston(1.0, 0.04, 0.5, -0.7, 0.001, 4.0, 1.0, 0.04);
    TimeGrid tg(0.0, 0.5, 1.0, 60, 60);
    PathEnsemble paths = simulate(s, nullptr, 3000, tg, 99);
    for (std::size_t p = 0; p < paths.n_paths; ++p)
        for (std::size_t c = 0; c < paths.checkpoint_times.size(); ++c)
            CHECK(paths.x_of(p, c) > 0.0);
}
