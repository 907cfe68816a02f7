#include "motcal/mot_dual.hpp"

#include <algorithm>
#include <cmath>

namespace motcal {

TimeGrid auto_time_grid(const MotInstance& inst, const Hamiltonian& h, double safety) {
    double cell = std::numeric_limits<double>::infinity();
    const Grid1D& g = inst.grid;
    for (std::size_t i = 1; i + 1 < g.size(); ++i)
        cell = std::min(cell, (g[i] - g[i - 1]) * (g[i + 1] - g[i]));
    double dt_max = safety * cell / std::max(h.b_max(), 1e-12);

    auto steps_for = [&](double span) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / dt_max)));
    };
    if (inst.has_intermediate() && inst.T0 < inst.T1)
        return TimeGrid(inst.T0, inst.T1, inst.T2, steps_for(inst.T1 - inst.T0),
                        steps_for(inst.T2 - inst.T1));
    return TimeGrid(inst.T0, inst.T1, inst.T2, 0, steps_for(inst.T2 - std::max(inst.T0, inst.T1)));
}

void smooth_direction(std::vector<double>& g, std::size_t passes) {
    if (g.size() < 3) return;
    std::vector<double> tmp(g.size());
    for (std::size_t p = 0; p < passes; ++p) {
        tmp[0] = 0.75 * g[0] + 0.25 * g[1];
        for (std::size_t i = 1; i + 1 < g.size(); ++i)
            tmp[i] = 0.25 * g[i - 1] + 0.5 * g[i] + 0.25 * g[i + 1];
        tmp[g.size() - 1] = 0.75 * g[g.size() - 1] + 0.25 * g[g.size() - 2];
        std::swap(g, tmp);
    }
}

void project_potential(const Grid1D& grid, std::vector<double>& u, double M, double Lambda,
                       double a_cap) {
    const std::size_t n = u.size();
    // largest Lambda-Lipschitz minorant (Pasch-Hausdorff), two sweeps
    for (std::size_t i = 1; i < n; ++i)
        u[i] = std::min(u[i], u[i - 1] + Lambda * (grid[i] - grid[i - 1]));
    for (std::size_t i = n - 1; i-- > 0;)
        u[i] = std::min(u[i], u[i + 1] + Lambda * (grid[i + 1] - grid[i]));
    for (double& v : u) v = std::clamp(v, -M, M);

    if (!std::isfinite(a_cap)) return;
    // pull concave kinks up to D^2 u >= -2 a_cap (a few Jacobi sweeps;
    // peaks only move toward the neighbor average, so the Lipschitz and
    // sup bounds survive)
    for (int sweep = 0; sweep < 8; ++sweep) {
        bool touched = false;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            double hm = grid[i] - grid[i - 1];
            double hp = grid[i + 1] - grid[i];
            double d2 = 2.0 * ((u[i + 1] - u[i]) / hp - (u[i] - u[i - 1]) / hm) / (hm + hp);
            if (d2 < -2.0 * a_cap) {
                double target = -2.0 * a_cap;
                u[i] = ((u[i + 1] / hp + u[i - 1] / hm) - 0.5 * target * (hm + hp)) /
                       (1.0 / hp + 1.0 / hm);
                touched = true;
            }
        }
        if (!touched) break;
    }
}

DualObjective dual_objective(const std::vector<double>& u1, const std::vector<double>& u2,
                             const MotInstance& inst, const Hamiltonian& h,
                             const TimeGrid& tg) {
    DualObjective out{0.0, solve_hj_mot(h, tg.has_pre() ? u1 : std::vector<double>{}, u2,
                                        inst.grid, tg)};
    GridMeasure m0 = inst.measure0();
    double value = m0.integrate(out.solution.at_t0());
    value -= inst.measure2().integrate(u2);
    if (inst.has_intermediate()) value -= inst.measure1().integrate(u1);
    out.value = value;
    return out;
}

DualState ascend(const MotInstance& inst, const AscendConfig& cfg) {
    GridMeasure m0 = inst.measure0(), m1 = inst.measure1(), m2 = inst.measure2();
    if (inst.has_intermediate()) {
        auto r01 = convex_order(m0, m1);
        if (!r01.holds)
            throw DomainError("ascend: mu0 <=_c mu1 fails (violation " +
                              std::to_string(r01.worst_violation) + " at " +
                              std::to_string(r01.where) + ")");
        auto r12 = convex_order(m1, m2);
        if (!r12.holds)
            throw DomainError("ascend: mu1 <=_c mu2 fails (violation " +
                              std::to_string(r12.worst_violation) + " at " +
                              std::to_string(r12.where) + ")");
    } else {
        auto r02 = convex_order(m0, m2);
        if (!r02.holds)
            throw DomainError("ascend: mu0 <=_c mu2 fails (violation " +
                              std::to_string(r02.worst_violation) + " at " +
                              std::to_string(r02.where) + ")");
    }

    Hamiltonian h = legendre(inst.lagrangian, linspace(-inst.a_max, inst.a_max, inst.n_a),
                             inst.b_max, inst.n_b);
    TimeGrid tg = auto_time_grid(inst, h);

    DualState st;
    st.u1.assign(inst.grid.size(), 0.0);
    st.u2.assign(inst.grid.size(), 0.0);

    auto evaluate = [&](const std::vector<double>& u1, const std::vector<double>& u2) {
        return dual_objective(u1, u2, inst, h, tg);
    };

    DualObjective cur = evaluate(st.u1, st.u2);
    st.dual_value = cur.value;

    const std::size_t n = inst.grid.size();
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        ControlField1D b = extract_optimal_diffusion(cur.solution, h);
        FlowResult1D flow = evolve_1d(b, m0, tg, inst.lagrangian);

        st.residual1.assign(n, 0.0);
        if (inst.has_intermediate()) {
            GridMeasure mt1 = flow.at_T1();
            for (std::size_t i = 0; i < n; ++i) st.residual1[i] = mt1.weights()[i] - inst.mu1[i];
        }
        GridMeasure mt2 = flow.at_T2();
        st.residual2.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) st.residual2[i] = mt2.weights()[i] - inst.mu2[i];

        IterRecord rec;
        rec.value = st.dual_value;
        rec.res1_sup = sup_norm(st.residual1);
        rec.res2_sup = sup_norm(st.residual2);
        rec.res1_l1 = l1_norm(st.residual1);
        rec.res2_l1 = l1_norm(st.residual2);
        st.trace.push_back(rec);
        st.iterations = it;

        if (std::max(rec.res1_sup, rec.res2_sup) <= cfg.tol) {
            st.converged = true;
            break;
        }

        // fixed step, halving backtracking: accepted values never decrease
        std::vector<double> dir1 = st.residual1, dir2 = st.residual2;
        smooth_direction(dir1, cfg.smoothing_passes);
        smooth_direction(dir2, cfg.smoothing_passes);
        double s = cfg.step;
        bool moved = false;
        while (s >= cfg.min_step) {
            std::vector<double> u1 = st.u1, u2 = st.u2;
            double a_cap = 0.9 * inst.a_max;
            if (inst.has_intermediate())
                for (std::size_t i = 0; i < n; ++i) u1[i] += s * dir1[i];
            for (std::size_t i = 0; i < n; ++i) u2[i] += s * dir2[i];
            project_potential(inst.grid, u1, cfg.M, cfg.Lambda, a_cap);
            project_potential(inst.grid, u2, cfg.M, cfg.Lambda, a_cap);

            DualObjective cand = evaluate(u1, u2);
            if (cand.value >= st.dual_value - 1e-14) {
                st.u1 = std::move(u1);
                st.u2 = std::move(u2);
                st.dual_value = cand.value;
                cur = std::move(cand);
                st.trace.back().step = s;
                moved = true;
                break;
            }
            s *= 0.5;
        }
        if (!moved) {
            st.plateau = true;
            break;
        }
    }
    return st;
}

}  // namespace motcal
