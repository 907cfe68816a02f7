#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "motcal/oracle.hpp"

using namespace motcal;

TEST_CASE("simplex: textbook problems") {
    // max x + y s.t. x + 2y <= 4, 3x + y <= 6 => min -x - y, optimum at
    // (8/5, 6/5), value -14/5
    LpProblem p;
    p.n = 2;
    p.cost = {-1.0, -1.0};
    p.add_row(LpProblem::LE, {1.0, 2.0}, 4.0);
    p.add_row(LpProblem::LE, {3.0, 1.0}, 6.0);
    LpResult r = solve_lp(p);
    REQUIRE(r.status == LpResult::OPTIMAL);
    CHECK(r.objective == doctest::Approx(-14.0 / 5.0));
    CHECK(r.x[0] == doctest::Approx(8.0 / 5.0));
    CHECK(r.x[1] == doctest::Approx(6.0 / 5.0));
    for (double rc : r.reduced_costs) CHECK(rc >= -1e-9);

    // degenerate equality system
    LpProblem q;
    q.n = 3;
    q.cost = {1.0, 2.0, 3.0};
    q.add_row(LpProblem::EQ, {1.0, 1.0, 1.0}, 1.0);
    q.add_row(LpProblem::EQ, {1.0, -1.0, 0.0}, 0.0);
    LpResult rq = solve_lp(q);
    REQUIRE(rq.status == LpResult::OPTIMAL);
    CHECK(rq.objective == doctest::Approx(1.5));  // x = y = 1/2

    // infeasible
    LpProblem inf;
    inf.n = 1;
    inf.cost = {0.0};
    inf.add_row(LpProblem::EQ, {1.0}, 1.0);
    inf.add_row(LpProblem::EQ, {1.0}, 2.0);
    CHECK(solve_lp(inf).status == LpResult::INFEASIBLE);

    // unbounded
    LpProblem unb;
    unb.n = 2;
    unb.cost = {-1.0, 0.0};
    unb.add_row(LpProblem::LE, {-1.0, 1.0}, 1.0);
    CHECK(solve_lp(unb).status == LpResult::UNBOUNDED);
}

namespace {

DiscreteMotInstance trivial_instance() {
    DiscreteMotInstance inst;
    inst.grid = {-1.0, 0.0, 1.0};
    inst.mu0 = {0.0, 1.0, 0.0};
    inst.mu1 = {0.0, 1.0, 0.0};
    inst.mu2 = {0.0, 1.0, 0.0};
    inst.steps_pre = 1;
    inst.steps_post = 1;
    inst.T0 = 0.0;
    inst.T1 = 1.0;
    inst.T2 = 2.0;
    inst.lagrangian = LagrangianSpec::quadratic();
    return inst;
}

}  // namespace

TEST_CASE("discrete mot: all-dirac instance costs nothing") {
    DiscreteMotResult r = solve_discrete_mot(trivial_instance());
    REQUIRE(r.feasible);
    CHECK(std::abs(r.value) <= 1e-9);
    CHECK(r.max_reduced_cost_violation <= 1e-9);
}

TEST_CASE("discrete mot: one-step split to the symmetric two-point law") {
    // value = dt L(1/dt) with all motion in step one; L = b^2, dt = 1
    DiscreteMotInstance inst = trivial_instance();
    inst.mu1 = {0.5, 0.0, 0.5};
    inst.mu2 = {0.5, 0.0, 0.5};
    DiscreteMotResult r = solve_discrete_mot(inst);
    REQUIRE(r.feasible);
    // hand-solvable: the only feasible plan moves 1/2 to each of -1, +1
    // in step 1 => w(0) = 1, b = 1/dt = 1, cost = dt b^2 = 1
    CHECK(r.value == doctest::Approx(1.0).epsilon(2e-4));
    // step 2 must be frozen
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(r.transitions[1][i * 3 + i] == doctest::Approx(inst.mu1[i]).epsilon(1e-7));
}

TEST_CASE("discrete mot: reversed order is infeasible with a certificate") {
    DiscreteMotInstance inst = trivial_instance();
    inst.mu0 = {0.5, 0.0, 0.5};
    inst.mu1 = {0.0, 1.0, 0.0};  // strictly smaller in convex order
    inst.mu2 = {0.0, 1.0, 0.0};
    DiscreteMotResult r = solve_discrete_mot(inst);
    CHECK_FALSE(r.feasible);
    CHECK_FALSE(r.infeasibility.empty());
}

TEST_CASE("discrete mot: b = 1 chain over sqrt(j/k) nodes meets the jensen bound") {
    // two steps per interval over nodes +-sqrt(j/k): the even-variance
    // chain exists, so the optimum equals dt-sum L(1) = (T2 - T0) when the
    // target is the unit two-point law and L = b^2... with T1 pin at the
    // intermediate chain law the optimal cost is (T1 - T0) * 1 for phase 1
    // plus 0 afterwards.
    DiscreteMotInstance inst;
    double r2 = std::sqrt(0.5);
    inst.grid = {-1.0, -r2, 0.0, r2, 1.0};
    inst.mu0 = {0.0, 0.0, 1.0, 0.0, 0.0};
    inst.mu1 = {0.5, 0.0, 0.0, 0.0, 0.5};
    inst.mu2 = {0.5, 0.0, 0.0, 0.0, 0.5};
    inst.steps_pre = 2;
    inst.steps_post = 1;
    inst.T0 = 0.0;
    inst.T1 = 1.0;
    inst.T2 = 2.0;
    inst.lagrangian = LagrangianSpec::quadratic();
    DiscreteMotResult r = solve_discrete_mot(inst);
    REQUIRE(r.feasible);
    // Jensen: cost >= (total variance)^2 / (T1 - T0) = 1, attained by the
    // +-sqrt(j/k) chain with b = 1 throughout
    CHECK(r.value == doctest::Approx(1.0).epsilon(2e-4));
}

TEST_CASE("path tree: trinomial construction is a martingale with product p0") {
    SvmSpec s = make_sabr(0.3, -2.0, -0.5, 1.0, -1.0);
    PathTree tree = PathTree::trinomial(s, 2, 4, 0.1);
    tree.validate();
    auto leaves = tree.leaves();
    CHECK(leaves.size() == 81);
    double total = 0.0;
    for (std::size_t l : leaves) total += tree.p0_of_leaf(l);
    CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("discrete sb: reference targets cost zero entropy") {
    SvmSpec s = make_sabr(0.3, -2.0, -0.5, 1.0, -1.0);
    PathTree tree = PathTree::trinomial(s, 1, 2, 0.1);
    auto leaves = tree.leaves();

    // targets = reference laws, accumulated by attained value
    auto law_at = [&](std::size_t depth) {
        ValueLaw law;
        std::vector<std::pair<double, double>> acc;
        for (std::size_t idx = 0; idx < leaves.size(); ++idx) {
            double x = tree.nodes[tree.ancestor_at(leaves[idx], depth)].x;
            double p = tree.p0_of_leaf(leaves[idx]);
            bool found = false;
            for (auto& [v, q] : acc)
                if (std::abs(v - x) < 1e-12) {
                    q += p;
                    found = true;
                    break;
                }
            if (!found) acc.emplace_back(x, p);
        }
        for (auto& [v, q] : acc) {
            law.values.push_back(v);
            law.probs.push_back(q);
        }
        return law;
    };

    DiscreteSbResult r = solve_discrete_sb(tree, law_at(1), law_at(2));
    REQUIRE(r.feasible);
    CHECK(std::abs(r.value) <= 1e-10);
    for (std::size_t l = 0; l < r.path_probs.size(); ++l)
        CHECK(r.path_probs[l] == doctest::Approx(tree.p0_of_leaf(leaves[l])).epsilon(1e-6));

    auto att = check_attainment(r, tree, law_at(1), law_at(2));
    CHECK(att.martingale_ok);
    CHECK(att.marginals_ok);
}

TEST_CASE("discrete sb: two-branch martingale trees pin the law; value matches by hand") {
    // up/down martingale branches force the split uniquely, so the optimum
    // is the reference itself
    PathTree sym;
    sym.depth_T1 = 0;
    sym.depth_total = 1;
    sym.dt = 1.0;
    sym.nodes.push_back(TreeNode{1.0, 0.0, SIZE_MAX, {1, 2}, {0.5, 0.5}, 0});
    sym.nodes.push_back(TreeNode{2.0, 0.0, 0, {}, {}, 1});
    sym.nodes.push_back(TreeNode{0.0, 0.0, 0, {}, {}, 1});
    sym.validate();
    ValueLaw half{{2.0, 0.0}, {0.5, 0.5}};
    DiscreteSbResult r = solve_discrete_sb(sym, ValueLaw{}, half);
    REQUIRE(r.feasible);
    CHECK(std::abs(r.value) <= 1e-9);

    // asking for a non-martingale split is rejected by the feasibility gate
    ValueLaw skewed{{2.0, 0.0}, {0.8, 0.2}};
    CHECK_FALSE(solve_discrete_sb(sym, ValueLaw{}, skewed).feasible);
}

TEST_CASE("discrete sb: one-parameter entropy closed form on the symmetric trinomial") {
    // symmetric three-branch martingale step: side masses r each, middle
    // 1 - 2r stays feasible for every r in [0, 1/2]; entropy relative to
    // the uniform reference is 2r log(3r) + (1-2r) log(3(1-2r))
    PathTree tree;
    tree.depth_T1 = 0;
    tree.depth_total = 1;
    tree.dt = 1.0;
    tree.nodes.push_back(TreeNode{1.0, 0.0, SIZE_MAX, {1, 2, 3}, {1. / 3, 1. / 3, 1. / 3}, 0});
    tree.nodes.push_back(TreeNode{1.5, 0.0, 0, {}, {}, 1});
    tree.nodes.push_back(TreeNode{1.0, 0.0, 0, {}, {}, 1});
    tree.nodes.push_back(TreeNode{0.5, 0.0, 0, {}, {}, 1});
    tree.validate();

    for (double r : {0.1, 0.25, 0.45}) {
        ValueLaw mu2{{1.5, 1.0, 0.5}, {r, 1.0 - 2.0 * r, r}};
        DiscreteSbResult res = solve_discrete_sb(tree, ValueLaw{}, mu2);
        REQUIRE(res.feasible);
        double closed =
            2.0 * r * std::log(3.0 * r) + (1.0 - 2.0 * r) * std::log(3.0 * (1.0 - 2.0 * r));
        CHECK(res.value == doctest::Approx(closed).epsilon(1e-6));
        CHECK(res.duality_gap <= 1e-6);
    }
}

TEST_CASE("oracle self-duality on random trees") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        SvmSpec s = make_sabr(0.2 + 0.3 * u(rng), -2.0, -0.5, 1.0, -1.0);
        std::size_t depth = 2 + (trial % 4);  // up to 5
        PathTree tree = PathTree::trinomial(s, depth / 2, depth, 0.05 + 0.1 * u(rng));
        auto leaves = tree.leaves();

        // perturbed-but-feasible target: exponential tilt of p0 in a
        // bounded random direction, then its own X-marginals as targets
        std::vector<double> p(leaves.size());
        double z = 0.0;
        for (std::size_t l = 0; l < leaves.size(); ++l) {
            p[l] = tree.p0_of_leaf(leaves[l]) * std::exp(0.5 * (u(rng) - 0.5));
            z += p[l];
        }
        for (auto& v : p) v /= z;
        // project back to the martingale set by solving with marginals of
        // the *reference* (guaranteed feasible) but perturbed T2 law is
        // not martingale-consistent in general; use reference laws and
        // check strong duality at the optimum instead.
        auto law_at = [&](std::size_t depth_at, const std::vector<double>& probs) {
            ValueLaw law;
            std::vector<std::pair<double, double>> acc;
            for (std::size_t idx = 0; idx < leaves.size(); ++idx) {
                double x = tree.nodes[tree.ancestor_at(leaves[idx], depth_at)].x;
                bool found = false;
                for (auto& [v, q2] : acc)
                    if (std::abs(v - x) < 1e-12) {
                        q2 += probs[idx];
                        found = true;
                        break;
                    }
                if (!found) acc.emplace_back(x, probs[idx]);
            }
            for (auto& [v, q2] : acc) {
                law.values.push_back(v);
                law.probs.push_back(q2);
            }
            return law;
        };
        std::vector<double> p0v(leaves.size());
        for (std::size_t l = 0; l < leaves.size(); ++l) p0v[l] = tree.p0_of_leaf(leaves[l]);

        DiscreteSbResult r =
            solve_discrete_sb(tree, law_at(tree.depth_T1, p0v), law_at(tree.depth_total, p0v));
        REQUIRE(r.feasible);
        CHECK(r.duality_gap <= 1e-6);
        CHECK(r.kkt_residual <= 1e-7);
    }
}
