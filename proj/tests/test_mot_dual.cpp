#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "motcal/mot_dual.hpp"
#include "motcal/oracle.hpp"

using namespace motcal;

namespace {

// 41 nodes on [-3, 3] with -1, 0, 1 snapped onto the grid
Grid1D acceptance_grid() {
    std::vector<double> nodes = linspace(-3.0, 3.0, 41);
    for (double s : {-1.0, 0.0, 1.0}) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < nodes.size(); ++i)
            if (std::abs(nodes[i] - s) < std::abs(nodes[best] - s)) best = i;
        nodes[best] = s;
    }
    std::sort(nodes.begin(), nodes.end());
    return Grid1D(nodes);
}

std::vector<double> weights_at(const Grid1D& g, std::vector<std::pair<double, double>> atoms) {
    std::vector<double> w(g.size(), 0.0);
    for (auto [x, m] : atoms)
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g[i] == x) w[i] = m;
    return w;
}

MotInstance acceptance_instance() {
    Grid1D g = acceptance_grid();
    MotInstance inst{g,
                     weights_at(g, {{0.0, 1.0}}),
                     weights_at(g, {{-1.0, 0.5}, {1.0, 0.5}}),
                     weights_at(g, {{-1.0, 0.5}, {1.0, 0.5}}),
                     0.0,
                     1.0,
                     2.0,
                     LagrangianSpec::quadratic()};
    inst.a_max = 14.0;
    inst.b_max = 8.0;
    return inst;
}

}  // namespace

TEST_CASE("identical marginals: zero value, zero residuals") {
    Grid1D g = acceptance_grid();
    auto two = weights_at(g, {{-1.0, 0.5}, {1.0, 0.5}});
    MotInstance inst{g, two, two, two, 0.0, 1.0, 2.0, LagrangianSpec::quadratic()};
    AscendConfig cfg;
    cfg.max_iters = 50;
    DualState st = ascend(inst, cfg);
    CHECK(std::abs(st.dual_value) <= 1e-8);
    CHECK(sup_norm(st.residual1) <= 1e-6);
    CHECK(sup_norm(st.residual2) <= 1e-6);
    CHECK(st.converged);
}

TEST_CASE("reversed convex order is rejected with the violation report") {
    Grid1D g = acceptance_grid();
    MotInstance inst{g,
                     weights_at(g, {{-1.0, 0.5}, {1.0, 0.5}}),
                     weights_at(g, {{0.0, 1.0}}),
                     weights_at(g, {{0.0, 1.0}}),
                     0.0,
                     1.0,
                     2.0,
                     LagrangianSpec::quadratic()};
    CHECK_THROWS_AS(ascend(inst, AscendConfig{}), DomainError);
}

TEST_CASE("dual objective basics") {
    MotInstance inst = acceptance_instance();
    Hamiltonian h = legendre(inst.lagrangian, linspace(-inst.a_max, inst.a_max, inst.n_a),
                             inst.b_max, inst.n_b);
    TimeGrid tg = auto_time_grid(inst, h);
    std::vector<double> zero(inst.grid.size(), 0.0);
    auto obj = dual_objective(zero, zero, inst, h, tg);
    CHECK(std::abs(obj.value) <= 1e-12);

    // constant shift of u1 leaves the objective unchanged
    std::vector<double> u1(inst.grid.size(), 0.0), u2(inst.grid.size());
    for (std::size_t i = 0; i < inst.grid.size(); ++i)
        u2[i] = 0.3 * std::exp(-inst.grid[i] * inst.grid[i]);
    double base = dual_objective(u1, u2, inst, h, tg).value;
    std::vector<double> shifted = u1;
    for (auto& v : shifted) v += 0.37;
    double after = dual_objective(shifted, u2, inst, h, tg).value;
    CHECK(std::abs(after - base) <= 1e-9);
}

TEST_CASE("ascent value is monotone and residuals shrink on the acceptance instance") {
    MotInstance inst = acceptance_instance();
    AscendConfig cfg;
    cfg.max_iters = 120;
    cfg.step = 1.0;
    DualState st = ascend(inst, cfg);
    for (std::size_t k = 1; k < st.trace.size(); ++k)
        CHECK(st.trace[k].value >= st.trace[k - 1].value - 1e-12);
    CHECK(st.dual_value > 0.0);

    // improvement upper bound from the residuals along the trace
    double final_value = st.trace.back().value;
    for (const auto& rec : st.trace) {
        double allowance = 2.0 * cfg.M * (rec.res1_l1 + rec.res2_l1) + 1e-9;
        CHECK(final_value - rec.value <= allowance);
    }
}

TEST_CASE("T0 > T1 drops the intermediate marginal entirely") {
    Grid1D g = acceptance_grid();
    MotInstance inst{g,
                     weights_at(g, {{0.0, 1.0}}),
                     weights_at(g, {{-1.0, 0.5}, {1.0, 0.5}}),
                     weights_at(g, {{-1.0, 0.5}, {1.0, 0.5}}),
                     1.5,
                     1.0,
                     2.0,
                     LagrangianSpec::quadratic()};
    MotInstance other = inst;
    other.mu1 = weights_at(g, {{0.0, 1.0}});  // different mu1, same answer

    AscendConfig cfg;
    cfg.max_iters = 40;
    cfg.step = 1.0;
    DualState a = ascend(inst, cfg);
    DualState b = ascend(other, cfg);
    CHECK(a.dual_value == doctest::Approx(b.dual_value).epsilon(1e-12));
}

TEST_CASE("acceptance instance: 5% gap against the discrete oracle") {
    MotInstance inst = acceptance_instance();
    AscendConfig cfg;
    cfg.max_iters = 500;
    cfg.step = 1.0;
    DualState st = ascend(inst, cfg);

    DiscreteMotInstance oracle;
    double r2 = std::sqrt(0.5);
    oracle.grid = {-1.0, -r2, 0.0, r2, 1.0};
    oracle.mu0 = {0.0, 0.0, 1.0, 0.0, 0.0};
    oracle.mu1 = {0.5, 0.0, 0.0, 0.0, 0.5};
    oracle.mu2 = {0.5, 0.0, 0.0, 0.0, 0.5};
    oracle.steps_pre = 2;
    oracle.steps_post = 1;
    oracle.T0 = 0.0;
    oracle.T1 = 1.0;
    oracle.T2 = 2.0;
    oracle.lagrangian = inst.lagrangian;
    DiscreteMotResult prim = solve_discrete_mot(oracle);
    REQUIRE(prim.feasible);

    double rel = std::abs(prim.value - st.dual_value) / std::abs(prim.value);
    MESSAGE("dual = ", st.dual_value, ", oracle = ", prim.value, ", rel gap = ", rel);
    CHECK(st.dual_value <= prim.value + 1e-6);
    CHECK(rel <= 0.05);
}

TEST_CASE("weak duality against the oracle on randomized feasible instances") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    for (int trial = 0; trial < 50; ++trial) {
        // random 9-node grid instance: mu0 random, mu1/mu2 by
        // mean-preserving spreads (guaranteed convex increasing order)
        Grid1D g = Grid1D::uniform(-2.0, 2.0, 9);
        std::vector<double> w0(g.size(), 0.0);
        for (std::size_t i = 2; i + 2 < g.size(); ++i) w0[i] = u(rng);
        double sum = 0.0;
        for (double v : w0) sum += v;
        for (auto& v : w0) v /= sum;

        auto spread = [&](std::vector<double> w) {
            for (int rounds = 0; rounds < 3; ++rounds) {
                std::size_t i = 1 + static_cast<std::size_t>(u(rng) * (g.size() - 2));
                double frac = 0.5 * u(rng);
                double moved = w[i] * frac;
                w[i] -= moved;
                w[i - 1] += 0.5 * moved;
                w[i + 1] += 0.5 * moved;  // uniform grid: mean preserved
            }
            return w;
        };
        std::vector<double> w1 = spread(w0);
        std::vector<double> w2 = spread(w1);

        MotInstance inst{g, w0, w1, w2, 0.0, 0.5, 1.0, LagrangianSpec::quadratic()};
        inst.a_max = 30.0;
        inst.b_max = 16.0;
        AscendConfig cfg;
        cfg.max_iters = 60;
        cfg.step = 1.0;
        DualState st = ascend(inst, cfg);

        DiscreteMotInstance oracle{g.nodes(), w0,  w2,  w1, 2,
                                   2,         0.0, 0.5, 1.0, inst.lagrangian};
        DiscreteMotResult prim = solve_discrete_mot(oracle);
        REQUIRE(prim.feasible);
        CHECK(st.dual_value <= prim.value + 1e-6);
    }
}
