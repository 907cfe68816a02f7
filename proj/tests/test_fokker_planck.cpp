#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "motcal/fokker_planck.hpp"
#include "motcal/mot_dual.hpp"

using namespace motcal;

namespace {

GridMeasure grid_gaussian(const Grid1D& g, double mean, double var) {
    std::vector<double> w(g.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double z = g[i] - mean;
        w[i] = std::exp(-0.5 * z * z / var);
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return GridMeasure(g, w);
}

ControlField1D constant_b(const Grid1D& g, const TimeGrid& tg, double b) {
    ControlField1D f{g, tg, {}};
    f.values.assign(tg.total_steps(), std::vector<double>(g.size(), b));
    return f;
}

}  // namespace

TEST_CASE("frozen flow under b = 0") {
    Grid1D g = Grid1D::uniform(-2.0, 2.0, 21);
    TimeGrid tg(0.0, 0.5, 1.0, 20, 20);
    GridMeasure m0 = grid_gaussian(g, 0.0, 0.3);
    LagrangianSpec L = LagrangianSpec::quadratic();
    FlowResult1D flow = evolve_1d(constant_b(g, tg, 0.0), m0, tg, L);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(flow.masses.back()[i] == doctest::Approx(m0.weights()[i]));
    CHECK(flow.cost == doctest::Approx(0.0));  // (T - t0) L(0), L(0) = 0
}

TEST_CASE("constant diffusion grows the variance linearly") {
    Grid1D g = Grid1D::uniform(-6.0, 6.0, 121);
    TimeGrid tg(0.0, 0.5, 1.0, 200, 200);
    GridMeasure m0 = grid_gaussian(g, 0.0, 0.4);
    double b = 1.3;
    FlowResult1D flow = evolve_1d(constant_b(g, tg, b), m0, tg, LagrangianSpec::quadratic());

    double v0 = m0.variance();
    for (std::size_t k = 0; k <= tg.total_steps(); ++k) {
        double t = tg.node(k);
        double vt = flow.marginal(k).variance();
        CHECK(vt == doctest::Approx(v0 + b * t).epsilon(1e-4));
    }
}

TEST_CASE("mass and mean conserved exactly; convex order along the flow") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    Grid1D g = Grid1D::uniform(-3.0, 3.0, 41);
    TimeGrid tg(0.0, 0.5, 1.0, 50, 50);
    GridMeasure m0 = grid_gaussian(g, 0.1, 0.3);

    for (int trial = 0; trial < 20; ++trial) {
        ControlField1D field{g, tg, {}};
        field.values.assign(tg.total_steps(), std::vector<double>(g.size()));
        for (auto& row : field.values)
            for (auto& v : row) v = u(rng);
        FlowResult1D flow = evolve_1d(field, m0, tg, LagrangianSpec::quadratic());

        double mean0 = m0.mean();
        for (std::size_t k = 0; k <= tg.total_steps(); k += 10) {
            GridMeasure mk = flow.marginal(k);
            CHECK(std::abs(mk.mean() - mean0) <= 1e-8);
            // convex order against a later marginal
            for (std::size_t l = k; l <= tg.total_steps(); l += 25)
                CHECK(convex_order(mk, flow.marginal(l)).holds);
        }
    }
}

TEST_CASE("negative control and CFL violations are rejected") {
    Grid1D g = Grid1D::uniform(-1.0, 1.0, 21);
    TimeGrid tg(0.0, 0.5, 1.0, 10, 10);
    GridMeasure m0 = GridMeasure::dirac(g, 0.0);
    LagrangianSpec L = LagrangianSpec::quadratic();
    CHECK_THROWS_AS(evolve_1d(constant_b(g, tg, -0.5), m0, tg, L), DomainError);
    CHECK_THROWS_AS(evolve_1d(constant_b(g, tg, 50.0), m0, tg, L), NumericsError);
}

TEST_CASE("time refinement does not inflate the reported cost") {
    Grid1D g = Grid1D::uniform(-3.0, 3.0, 31);
    GridMeasure m0 = grid_gaussian(g, 0.0, 0.3);
    LagrangianSpec L = LagrangianSpec::quadratic();
    auto cost_at = [&](std::size_t steps) {
        TimeGrid tg(0.0, 0.5, 1.0, steps, steps);
        return evolve_1d(constant_b(g, tg, 0.8), m0, tg, L).cost;
    };
    double coarse = cost_at(40);
    double fine = cost_at(80);
    CHECK(fine <= coarse + 1e-3);
}

TEST_CASE("duality consistency: envelope identity telescopes through the flow") {
    // int u(t0) dmu0 = cost + int u1 dm_T1 + int u2 dm_T2 for the control
    // extracted from the backward solve
    Grid1D g = Grid1D::uniform(-3.0, 3.0, 41);
    Hamiltonian h = legendre(LagrangianSpec::quadratic(), linspace(-8.0, 8.0, 1601), 8.0, 4001);
    TimeGrid tg(0.0, 0.5, 1.0, 120, 120);

    std::vector<double> u1(g.size()), u2(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        u1[i] = 0.4 * std::sin(2.0 * g[i]);
        u2[i] = std::exp(-g[i] * g[i]);
    }
    HjSolution1D sol = solve_hj_mot(h, u1, u2, g, tg);
    ControlField1D b = extract_optimal_diffusion(sol, h);
    GridMeasure m0 = grid_gaussian(g, 0.0, 0.25);
    FlowResult1D flow = evolve_1d(b, m0, tg, LagrangianSpec::quadratic());

    double lhs = m0.integrate(sol.at_t0());
    double rhs = flow.cost + flow.at_T1().integrate(u1) + flow.at_T2().integrate(u2);
    // exact up to the Hamiltonian table resolution (Fenchel equality is
    // nodal, interpolation in a is piecewise linear)
    CHECK(lhs == doctest::Approx(rhs).epsilon(5e-4));
}

TEST_CASE("monte carlo: degenerate coefficients freeze the paths") {
    SvmSpec s;
    s.name = "flat";
    s.sigma_tilde = [](double) { return 0.0; };
    s.b = [](double, double) { return 0.0; };
    s.tau1 = [](double, double) { return 0.0; };
    s.tau2 = [](double, double) { return 0.0; };
    s.trunc_lo = -1.0;
    s.trunc_hi = 1.0;
    s.x0 = 1.3;
    s.y0 = 0.2;
    TimeGrid tg(0.0, 0.5, 1.0, 20, 20);
    PathEnsemble paths = simulate(s, nullptr, 500, tg, 42);
    for (std::size_t p = 0; p < paths.n_paths; ++p) {
        CHECK(paths.x_of(p, paths.cp_T2()) == doctest::Approx(1.3));
        CHECK(paths.log_weight[p] == doctest::Approx(0.0));
    }
}

TEST_CASE("monte carlo: geometric brownian motion moments") {
    SvmSpec s;
    s.name = "gbm";
    double sigma = 0.4;
    s.sigma_tilde = [sigma](double) { return sigma; };
    s.b = [](double, double) { return 0.0; };
    s.tau1 = [](double, double) { return 0.0; };
    s.tau2 = [](double, double) { return 0.0; };
    s.trunc_lo = -1.0;
    s.trunc_hi = 1.0;
    s.x0 = 2.0;
    s.y0 = 0.0;
    TimeGrid tg(0.0, 0.5, 1.0, 50, 50);
    std::size_t n = 40000;
    PathEnsemble paths = simulate(s, nullptr, n, tg, 7);

    auto mx = paths.x_moment(paths.cp_T2());
    CHECK(std::abs(mx.mean - 2.0) <= 3.0 * mx.se);

    double s_log = 0.0, s2_log = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        double lx = std::log(paths.x_of(p, paths.cp_T2()));
        s_log += lx;
        s2_log += lx * lx;
    }
    double mean_log = s_log / static_cast<double>(n);
    double se_log = std::sqrt((s2_log / static_cast<double>(n) - mean_log * mean_log) /
                              static_cast<double>(n));
    double expect = std::log(2.0) - 0.5 * sigma * sigma * 1.0;
    CHECK(std::abs(mean_log - expect) <= 3.0 * se_log);
}

TEST_CASE("monte carlo is bit-identical across worker counts") {
    SvmSpec s = make_sabr(0.3, -2.0, -0.5, 1.0, -1.0);
    TimeGrid tg(0.0, 0.5, 1.0, 30, 30);
    SimulateOptions one;
    one.workers = 1;
    SimulateOptions many;
    many.workers = 7;
    PathEnsemble a = simulate(s, nullptr, 2000, tg, 31, one);
    PathEnsemble b = simulate(s, nullptr, 2000, tg, 31, many);
    REQUIRE(a.x_at.size() == b.x_at.size());
    for (std::size_t i = 0; i < a.x_at.size(); ++i) CHECK(a.x_at[i] == b.x_at[i]);
    for (std::size_t i = 0; i < a.log_weight.size(); ++i)
        CHECK(a.log_weight[i] == b.log_weight[i]);
}

TEST_CASE("injected constant tilt: girsanov entropy closed form") {
    SvmSpec s = make_sabr(0.5, -2.0, -0.5, 1.0, -1.0);
    TimeGrid tg(0.0, 0.5, 1.0, 40, 40);
    Grid2D grid(Grid1D::uniform(0.2, 3.0, 15), Grid1D::uniform(-2.2, 0.2, 11));
    double c = 1.0;
    ControlField2D tilt = constant_tilt(grid, tg, c);
    PathEnsemble paths = simulate(s, &tilt, 20000, tg, 11);
    auto ent = paths.entropy();
    CHECK(std::abs(ent.mean - 0.5 * c * c * 1.0) <= 3.0 * ent.se);

    // P0-dynamics route: E[w] = 1 and E[w log w] matches as well
    SimulateOptions p0mode;
    p0mode.tilt_dynamics = false;
    PathEnsemble ref = simulate(s, &tilt, 20000, tg, 12, p0mode);
    auto mw = ref.mean_weight();
    CHECK(std::abs(mw.mean - 1.0) <= 3.0 * mw.se);
    auto ent2 = ref.entropy();
    CHECK(std::abs(ent2.mean - 0.5 * c * c) <= 3.0 * ent2.se);
}

TEST_CASE("2d flow: zero tilt conserves mass/mean, energy matches closed form") {
    SvmSpec s = make_sabr(0.4, -2.0, -0.5, 1.0, -1.0);
    Grid2D grid(Grid1D::uniform(0.2, 2.2, 41), Grid1D::uniform(-2.2, 0.2, 25));
    TimeGrid tg(0.0, 0.25, 0.5, 400, 400);

    std::vector<double> m0 = dirac_2d(grid, 1.0, 0.0);
    FlowResult2D still = evolve_2d(s, zero_tilt(grid, tg), m0, grid, tg);
    CHECK(still.energy == doctest::Approx(0.0));
    CHECK(still.x_at_T2().mean() == doctest::Approx(1.0).epsilon(1e-6));

    double c = 0.7;
    FlowResult2D tilted = evolve_2d(s, constant_tilt(grid, tg, c), m0, grid, tg);
    CHECK(tilted.energy == doctest::Approx(0.5 * c * c * 0.5).epsilon(1e-10));
    CHECK(tilted.x_at_T2().mean() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("2d flow marginals agree with histogrammed monte carlo") {
    SvmSpec s = make_sabr(0.4, -2.0, -0.5, 1.0, -1.0);
    Grid2D grid(Grid1D::uniform(0.2, 2.4, 45), Grid1D::uniform(-2.2, 0.2, 25));
    TimeGrid tg(0.0, 0.25, 0.5, 500, 500);
    std::vector<double> m0 = dirac_2d(grid, 1.0, 0.0);
    FlowResult2D flow = evolve_2d(s, zero_tilt(grid, tg), m0, grid, tg);

    PathEnsemble paths = simulate(s, nullptr, 30000, tg, 3);
    GridMeasure hist = histogram_x(paths, paths.cp_T2(), grid.x, false);
    double w2 = wasserstein2(hist, flow.x_at_T2());
    double se = 0.4 / std::sqrt(30000.0);
    CHECK(w2 <= 3.0 * (se + grid.hx));
}
