#include <algorithm>
#include <cmath>
#include <limits>

#include "motcal/oracle.hpp"

namespace motcal {

namespace {

struct Layout {
    std::size_t n = 0, steps = 0;
    std::size_t n_pi = 0, n_z = 0;
    std::size_t pi(std::size_t t, std::size_t i, std::size_t j) const {
        return t * n * n + i * n + j;
    }
    std::size_t z(std::size_t t, std::size_t i) const { return n_pi + t * n + i; }
    std::size_t total() const { return n_pi + n_z; }
};

struct Tangent {
    double slope = 0.0;      // coefficient on w
    double intercept = 0.0;  // coefficient on dt * m
};

template <typename F>
Tangent tangent_at(const F& L, double b0) {
    double h = std::max(1e-6, 1e-6 * std::abs(b0));
    double up = L(b0 + h);
    double down = L(std::max(b0 - h, 0.0));
    double denom = b0 - h >= 0.0 ? 2.0 * h : h;
    double s = (up - down) / denom;
    return Tangent{s, L(b0) - s * b0};
}

}  // namespace

DiscreteMotResult solve_discrete_mot(const DiscreteMotInstance& inst) {
    const std::size_t n = inst.grid.size();
    if (n < 2 || n > 15) throw DomainError("solve_discrete_mot: grid must have 2..15 nodes");
    if (inst.steps_pre > 4 || inst.steps_post > 4 || inst.steps_post == 0)
        throw DomainError("solve_discrete_mot: steps per interval must be 1..4");
    const bool pin_t1 = !inst.mu1.empty();
    const std::size_t K1 = pin_t1 ? inst.steps_pre : 0;
    const std::size_t K = K1 + inst.steps_post;
    if (pin_t1 && inst.steps_pre == 0)
        throw DomainError("solve_discrete_mot: T1 pin needs steps_pre >= 1");

    std::vector<double> dts(K);
    for (std::size_t t = 0; t < K; ++t)
        dts[t] = t < K1 ? (inst.T1 - inst.T0) / static_cast<double>(K1)
                        : (inst.T2 - (pin_t1 ? inst.T1 : inst.T0)) /
                              static_cast<double>(inst.steps_post);

    Layout L{n, K, K * n * n, K * n};

    const double span = inst.grid.back() - inst.grid.front();
    // the widest jump in a single step still has to fit under the cuts
    double b_probe_hi = 1.0;
    for (std::size_t t = 0; t < K; ++t)
        b_probe_hi = std::max(b_probe_hi, span * span / dts[t]);
    // l_min shift keeps every epigraph variable nonnegative
    double l_min = 0.0;
    for (double b = 0.0; b <= b_probe_hi; b += b_probe_hi / 512.0)
        l_min = std::min(l_min, inst.lagrangian(b));
    auto L_shifted = [&](double b) { return inst.lagrangian(b) - l_min; };
    double shift_total = 0.0;
    for (std::size_t t = 0; t < K; ++t) shift_total += dts[t] * l_min;

    struct Cut {
        std::size_t t, i;
        Tangent tan;
        bool fresh = true;
    };
    std::vector<Cut> cuts;

    DiscreteMotResult out;

    auto build_lp = [&]() {
        LpProblem lp;
        lp.n = L.total();
        lp.cost.assign(lp.n, 0.0);
        for (std::size_t t = 0; t < K; ++t)
            for (std::size_t i = 0; i < n; ++i) lp.cost[L.z(t, i)] = 1.0;

        auto row_of = [&](auto&& fill) {
            std::vector<double> r(lp.n, 0.0);
            fill(r);
            return r;
        };

        // chaining: outflow at t = inflow at t-1 (mu0 at t = 0)
        for (std::size_t i = 0; i < n; ++i)
            lp.add_row(LpProblem::EQ, row_of([&](std::vector<double>& r) {
                           for (std::size_t j = 0; j < n; ++j) r[L.pi(0, i, j)] = 1.0;
                       }),
                       inst.mu0[i]);
        for (std::size_t t = 1; t < K; ++t)
            for (std::size_t i = 0; i < n; ++i)
                lp.add_row(LpProblem::EQ, row_of([&](std::vector<double>& r) {
                               for (std::size_t j = 0; j < n; ++j) {
                                   r[L.pi(t, i, j)] += 1.0;
                                   r[L.pi(t - 1, j, i)] -= 1.0;
                               }
                           }),
                           0.0);
        for (std::size_t i = 0; i < n; ++i)
            lp.add_row(LpProblem::EQ, row_of([&](std::vector<double>& r) {
                           for (std::size_t j = 0; j < n; ++j) r[L.pi(K - 1, j, i)] = 1.0;
                       }),
                       inst.mu2[i]);
        if (pin_t1)
            for (std::size_t i = 0; i < n; ++i)
                lp.add_row(LpProblem::EQ, row_of([&](std::vector<double>& r) {
                               for (std::size_t j = 0; j < n; ++j) r[L.pi(K1 - 1, j, i)] = 1.0;
                           }),
                           inst.mu1[i]);
        for (std::size_t t = 0; t < K; ++t)
            for (std::size_t i = 0; i < n; ++i)
                lp.add_row(LpProblem::EQ, row_of([&](std::vector<double>& r) {
                               for (std::size_t j = 0; j < n; ++j)
                                   r[L.pi(t, i, j)] = inst.grid[j] - inst.grid[i];
                           }),
                           0.0);
        // epigraph cuts: z_{t,i} >= slope w + intercept dt m
        for (const Cut& c : cuts)
            lp.add_row(LpProblem::LE, row_of([&](std::vector<double>& r) {
                           for (std::size_t j = 0; j < n; ++j) {
                               double dxx = (inst.grid[j] - inst.grid[c.i]) *
                                            (inst.grid[j] - inst.grid[c.i]);
                               r[L.pi(c.t, c.i, j)] = c.tan.slope * dxx +
                                                      c.tan.intercept * dts[c.t];
                           }
                           r[L.z(c.t, c.i)] = -1.0;
                       }),
                       0.0);
        return lp;
    };

    // Kelley loop with cut management: violated tangents arrive in a
    // bracket around the observed control, slack cuts are retired, and
    // the density doubles until the value settles below 1e-7.
    std::size_t segments = 64;
    {
        Tangent tan = tangent_at(L_shifted, 0.25 * span * span /
                                                std::max(inst.T2 - inst.T0, 1e-9));
        if (std::abs(tan.slope) > 1e-9 || std::abs(tan.intercept) > 1e-9)
            for (std::size_t t = 0; t < K; ++t)
                for (std::size_t i = 0; i < n; ++i) cuts.push_back(Cut{t, i, tan});
    }

    double prev_value = std::numeric_limits<double>::infinity();
    LpResult sol;
    for (std::size_t round = 0; round < 60; ++round) {
        LpProblem lp = build_lp();
        sol = solve_lp(lp);
        out.lp_iterations += sol.iterations;
        ++out.cut_rounds;
        if (sol.status == LpResult::INFEASIBLE) {
            out.feasible = false;
            for (std::size_t r : sol.infeasible_rows)
                out.infeasibility.push_back("constraint row " + std::to_string(r) +
                                            " unsatisfied");
            if (out.infeasibility.empty())
                out.infeasibility.push_back("phase-1 optimum positive");
            return out;
        }
        if (sol.status != LpResult::OPTIMAL)
            throw NumericsError("solve_discrete_mot: LP did not converge (status " +
                                std::to_string(static_cast<int>(sol.status)) + ", " +
                                std::to_string(sol.iterations) + " iterations)");

        // retire cuts that came loose, keep the tight ones
        std::vector<Cut> kept;
        for (const Cut& c : cuts) {
            double m_ti = 0.0, w_ti = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                double p = sol.x[L.pi(c.t, c.i, j)];
                m_ti += p;
                w_ti += p * (inst.grid[j] - inst.grid[c.i]) * (inst.grid[j] - inst.grid[c.i]);
            }
            double lhs = c.tan.slope * w_ti + c.tan.intercept * dts[c.t] * m_ti;
            if (lhs >= sol.x[L.z(c.t, c.i)] - 1e-6)
                kept.push_back(c);
        }
        cuts = std::move(kept);

        double worst = 0.0;
        std::size_t added = 0;
        double b_seen = 0.0;
        for (std::size_t t = 0; t < K; ++t)
            for (std::size_t i = 0; i < n; ++i) {
                double m = 0.0, w = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    double p = sol.x[L.pi(t, i, j)];
                    m += p;
                    w += p * (inst.grid[j] - inst.grid[i]) * (inst.grid[j] - inst.grid[i]);
                }
                if (m < 1e-12) continue;
                double b = w / (m * dts[t]);
                b_seen = std::max(b_seen, b);
                double true_cost = dts[t] * m * L_shifted(b);
                double gap = true_cost - sol.x[L.z(t, i)];
                if (gap > 2e-8 * (1.0 + std::abs(sol.objective))) {
                    cuts.push_back(Cut{t, i, tangent_at(L_shifted, b)});
                    cuts.push_back(Cut{t, i, tangent_at(L_shifted, 0.7 * b)});
                    cuts.push_back(Cut{t, i, tangent_at(L_shifted, 1.5 * b + 1e-6)});
                    added += 3;
                    worst = std::max(worst, gap);
                }
            }

        bool value_settled = std::abs(sol.objective - prev_value) < 1e-7;
        prev_value = sol.objective;
        if (added == 0 && value_settled) break;
        if (added == 0) {
            segments *= 2;
            double hi = std::max(b_seen * 1.25, 1e-6);
            for (std::size_t s = 0; s < 16; ++s) {
                Tangent tan = tangent_at(L_shifted, hi * (s + 0.5) / 16.0);
                for (std::size_t t = 0; t < K; ++t)
                    for (std::size_t i = 0; i < n; ++i) cuts.push_back(Cut{t, i, tan});
            }
        }
    }

    out.feasible = true;
    out.value = sol.objective + shift_total;
    out.segments = segments;
    out.max_reduced_cost_violation = 0.0;
    for (double rc : sol.reduced_costs)
        out.max_reduced_cost_violation = std::max(out.max_reduced_cost_violation, -rc);
    out.lp_basis = sol.basis;

    out.transitions.assign(K, std::vector<double>(n * n, 0.0));
    out.marginals.assign(K + 1, std::vector<double>(n, 0.0));
    out.marginals[0] = inst.mu0;
    for (std::size_t t = 0; t < K; ++t) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double p = sol.x[L.pi(t, i, j)];
                out.transitions[t][i * n + j] = p;
                out.marginals[t + 1][j] += p;
            }
    }
    return out;
}

}  // namespace motcal
