#include "motcal/sb_dual.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "motcal/mot_dual.hpp"  // project_potential

namespace motcal {

namespace {

// Conservative CFL estimate for the backward/forward pair on this grid.
std::size_t cfl_steps(const SvmSpec& svm, const Grid2D& g, double span, double grad_margin) {
    Coeffs2D c = svm_coeffs_xy(svm, g);
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        double outflow = 2.0 * c.a11[k] / (g.hx * g.hx) + 2.0 * c.a22[k] / (g.hy * g.hy) +
                         std::abs(c.drift_y[k]) / g.hy +
                         c.tau2[k] * c.tau2[k] * grad_margin / g.hy;
        worst = std::max(worst, outflow);
    }
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span * worst / 0.8)));
}

}  // namespace

TimeGrid SbInstance::time_grid() const {
    std::size_t pre = steps_pre, post = steps_post;
    // the gradient margin covers potentials up to moderate Lipschitz bounds
    const double grad_margin = 25.0;
    if (post == 0) post = cfl_steps(model, grid, T2 - std::max(t0, T1), grad_margin);
    if (t0 < T1 && pre == 0) pre = cfl_steps(model, grid, T1 - t0, grad_margin);
    if (t0 >= T1) pre = 0;
    return TimeGrid(t0, T1, T2, pre, post);
}

SbObjective sb_dual_objective(const std::vector<double>& u1, const std::vector<double>& u2,
                              const SbInstance& inst) {
    TimeGrid tg = inst.time_grid();
    SbObjective out{0.0, solve_hj_sb(inst.model, tg.has_pre() ? u1 : std::vector<double>{},
                                     u2, inst.grid, tg)};
    double value = HjSolution2D::interp(inst.grid, out.solution.at_t0(), inst.model.x0,
                                        inst.model.y0);
    value -= inst.target2().integrate(u2);
    if (inst.has_intermediate()) value -= inst.target1().integrate(u1);
    out.value = value;
    return out;
}

SbDualState sb_ascend(const SbInstance& inst, const SbAscendConfig& cfg) {
    GridMeasure t1 = inst.target1(), t2 = inst.target2();
    if (inst.has_intermediate()) {
        auto r = convex_order(t1, t2);
        if (!r.holds)
            throw DomainError("sb_ascend: mu1 <=_c mu2 fails (violation " +
                              std::to_string(r.worst_violation) + ")");
        if (std::abs(t1.mean() - inst.model.x0) > cfg.mean_gate_tol ||
            std::abs(t2.mean() - inst.model.x0) > cfg.mean_gate_tol)
            throw DomainError("sb_ascend: marginal means must equal X0 (martingale "
                              "feasibility)");
    } else if (std::abs(t2.mean() - inst.model.x0) > cfg.mean_gate_tol) {
        throw DomainError("sb_ascend: mu2 mean must equal X0");
    }

    TimeGrid tg = inst.time_grid();
    Coeffs2D coeffs = svm_coeffs_xy(inst.model, inst.grid);
    std::vector<double> m0 = dirac_2d(inst.grid, inst.model.x0, inst.model.y0);

    SbDualState st;
    const std::size_t n = inst.grid.nx();
    st.u1.assign(n, 0.0);
    st.u2.assign(n, 0.0);

    SbObjective cur = sb_dual_objective(st.u1, st.u2, inst);
    st.dual_value = cur.value;

    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        ControlField2D alpha = extract_tilt(cur.solution, coeffs);
        FlowResult2D flow = evolve_2d(inst.model, alpha, m0, inst.grid, tg);
        st.entropy = flow.energy;

        st.residual1.assign(n, 0.0);
        if (inst.has_intermediate()) {
            GridMeasure w1 = flow.x_at_T1();
            for (std::size_t i = 0; i < n; ++i) st.residual1[i] = w1.weights()[i] - inst.mu1[i];
        }
        GridMeasure w2 = flow.x_at_T2();
        st.residual2.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) st.residual2[i] = w2.weights()[i] - inst.mu2[i];

        SbIterRecord rec;
        rec.value = st.dual_value;
        rec.res1_sup = sup_norm(st.residual1);
        rec.res2_sup = sup_norm(st.residual2);
        rec.res1_l1 = l1_norm(st.residual1);
        rec.res2_l1 = l1_norm(st.residual2);
        rec.entropy = st.entropy;
        st.trace.push_back(rec);
        st.iterations = it;

        if (std::max(rec.res1_sup, rec.res2_sup) <= cfg.tol) {
            st.converged = true;
            break;
        }

        double s = cfg.step;
        bool moved = false;
        while (s >= cfg.min_step) {
            std::vector<double> u1 = st.u1, u2 = st.u2;
            if (inst.has_intermediate())
                for (std::size_t i = 0; i < n; ++i) u1[i] += s * st.residual1[i];
            for (std::size_t i = 0; i < n; ++i) u2[i] += s * st.residual2[i];
            project_potential(inst.grid.x, u1, cfg.M, cfg.Lambda);
            project_potential(inst.grid.x, u2, cfg.M, cfg.Lambda);

            SbObjective cand = sb_dual_objective(u1, u2, inst);
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

// ---------------------------------------------------------------------------
// Monte Carlo density certificate
// ---------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

struct LayerGradients {
    double du_dx = 0.0, du_dy = 0.0;
};

LayerGradients grads_at(const Grid2D& g, const std::vector<double>& layer, double x, double y) {
    double cx = std::clamp(x, g.x.front() + 1e-12, g.x.back() - 1e-12);
    double cy = std::clamp(y, g.y.front() + 1e-12, g.y.back() - 1e-12);
    auto at = [&](double px, double py) {
        return HjSolution2D::interp(g, layer,
                                    std::clamp(px, g.x.front(), g.x.back()),
                                    std::clamp(py, g.y.front(), g.y.back()));
    };
    LayerGradients out;
    out.du_dx = (at(cx + g.hx, cy) - at(cx - g.hx, cy)) / (2.0 * g.hx);
    out.du_dy = (at(cx, cy + g.hy) - at(cx, cy - g.hy)) / (2.0 * g.hy);
    return out;
}

double interp_axis(const Grid1D& g, const std::vector<double>& f, double x) {
    double cx = std::clamp(x, g.front(), g.back());
    std::size_t i = g.cell_of(cx);
    double t = (cx - g[i]) / (g[i + 1] - g[i]);
    return (1.0 - t) * f[i] + t * f[i + 1];
}

}  // namespace

DensityReport optimal_density_report(const HjSolution2D& sol, const std::vector<double>& u1,
                                     const std::vector<double>& u2, const SbInstance& inst,
                                     std::size_t n_paths, std::uint64_t seed) {
    const Grid2D& g = inst.grid;
    TimeGrid tg = sol.tg;
    auto steps = tg.step_sizes();
    const std::size_t n_steps = tg.total_steps();
    const SvmSpec& svm = inst.model;

    double u_t0 = HjSolution2D::interp(g, sol.at_t0(), svm.x0, svm.y0);

    std::vector<double> logw(n_paths), residual(n_paths);
    std::vector<bool> finite(n_paths, true);

    parallel_for(n_paths, [&](std::size_t p) {
        std::mt19937_64 rng(splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * (p + 1))));
        std::normal_distribution<double> normal(0.0, 1.0);

        double logx = std::log(svm.x0);
        double y = svm.y0;
        double lw = 0.0;
        double hedge = 0.0;  // int Delta dW
        double x_T1 = svm.x0;

        for (std::size_t k = 0; k < n_steps; ++k) {
            double dt = steps[k], sdt = std::sqrt(dt);
            double z1 = normal(rng), z2 = normal(rng);
            double x = std::exp(logx);
            double st = svm.sigma_tilde(y);
            double t1c = svm.tau1(x, y), t2c = svm.tau2(x, y);

            // The layer the backward sweep stepped from governs step k.
            const auto& layer = sol.forward_layer(k + 1);
            LayerGradients dg = grads_at(g, layer, x, y);
            double a = -t2c * dg.du_dy;
            double delta = -svm.sigma(x, y) * dg.du_dx - t1c * dg.du_dy;

            lw += a * sdt * z2 - 0.5 * a * a * dt;    // P0 paths: log dP*/dP0
            hedge += delta * sdt * z1;

            logx += -0.5 * st * st * dt + st * sdt * z1;
            y += svm.b(x, y) * dt + t1c * sdt * z1 + t2c * sdt * z2;

            if (k + 1 == (tg.has_pre() ? tg.steps_pre() : 0)) x_T1 = std::exp(logx);
        }
        double x_T2 = std::exp(logx);
        if (!tg.has_pre()) x_T1 = svm.x0;

        double rhs = u_t0 - hedge;
        if (tg.has_pre()) rhs -= interp_axis(g.x, u1, x_T1);
        rhs -= interp_axis(g.x, u2, x_T2);

        logw[p] = lw;
        residual[p] = lw - rhs;
        if (!std::isfinite(lw)) finite[p] = false;
    });

    DensityReport rep;
    rep.n_paths = n_paths;
    double sw = 0.0, sw2 = 0.0, se_ = 0.0, se2 = 0.0, sr = 0.0, sr2 = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        if (!finite[p]) rep.weights_finite = false;
        double w = std::exp(logw[p]);
        double wlw = w * logw[p];
        sw += w;
        sw2 += w * w;
        se_ += wlw;
        se2 += wlw * wlw;
        sr += residual[p];
        sr2 += residual[p] * residual[p];
    }
    double n = static_cast<double>(n_paths);
    rep.mean_weight = sw / n;
    rep.mean_weight_se = std::sqrt(std::max(sw2 / n - rep.mean_weight * rep.mean_weight, 0.0) / n);
    rep.mc_entropy = se_ / n;
    rep.mc_entropy_se = std::sqrt(std::max(se2 / n - rep.mc_entropy * rep.mc_entropy, 0.0) / n);
    rep.portfolio_mean = sr / n;
    rep.portfolio_rms = std::sqrt(std::max(sr2 / n, 0.0));
    return rep;
}

}  // namespace motcal
