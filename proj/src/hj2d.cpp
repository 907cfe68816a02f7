#include "motcal/hj2d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace motcal {

Grid2D::Grid2D(Grid1D gx, Grid1D gy) : x(std::move(gx)), y(std::move(gy)) {
    auto uniform_spacing = [](const Grid1D& g, const char* axis) {
        double h = g[1] - g[0];
        for (std::size_t i = 1; i + 1 < g.size(); ++i)
            if (std::abs((g[i + 1] - g[i]) - h) > 1e-10 * std::max(1.0, std::abs(h)))
                throw DomainError(std::string("Grid2D: ") + axis + " axis must be uniform");
        return h;
    };
    hx = uniform_spacing(x, "x");
    hy = uniform_spacing(y, "y");
}

// ---------------------------------------------------------------------------
// Coefficient fields
// ---------------------------------------------------------------------------

Coeffs2D svm_coeffs_xy(const SvmSpec& svm, const Grid2D& g) {
    Coeffs2D c;
    const std::size_t n = g.size();
    c.a11.resize(n); c.a22.resize(n); c.a12.resize(n);
    c.drift_x.assign(n, 0.0); c.drift_y.resize(n); c.tau2.resize(n);
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j) {
            double x = g.x[i], y = g.y[j];
            double sig = svm.sigma(x, y);
            double t1 = svm.tau1(x, y), t2 = svm.tau2(x, y);
            std::size_t k = g.idx(i, j);
            c.a11[k] = 0.5 * sig * sig;
            c.a22[k] = 0.5 * (t1 * t1 + t2 * t2);
            c.a12[k] = sig * t1;
            c.drift_y[k] = svm.b(x, y);
            c.tau2[k] = t2;
        }
    return c;
}

Coeffs2D svm_coeffs_wy(const SvmSpec& svm, const Grid2D& g) {
    Coeffs2D c;
    const std::size_t n = g.size();
    c.a11.resize(n); c.a22.resize(n); c.a12.resize(n);
    c.drift_x.resize(n); c.drift_y.resize(n); c.tau2.resize(n);
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j) {
            double ex = std::exp(g.x[i]), y = g.y[j];
            double st = svm.sigma_tilde(y);
            double t1 = svm.tau1(ex, y), t2 = svm.tau2(ex, y);
            std::size_t k = g.idx(i, j);
            c.a11[k] = 0.5 * st * st;
            c.a22[k] = 0.5 * (t1 * t1 + t2 * t2);
            c.a12[k] = st * t1;
            c.drift_x[k] = -0.5 * st * st;
            c.drift_y[k] = svm.b(ex, y);
            c.tau2[k] = t2;
        }
    return c;
}

// ---------------------------------------------------------------------------
// Layer access helpers
// ---------------------------------------------------------------------------

const std::vector<double>& HjSolution2D::forward_layer(std::size_t k) const {
    if (!pre.empty()) {
        if (k < pre.size()) return pre[k];
        return post[k - (pre.size() - 1)];
    }
    return post[k];
}

double HjSolution2D::max_jump_residual(const std::vector<double>& u1_field) const {
    if (pre.empty()) return 0.0;
    double worst = 0.0;
    for (std::size_t k = 0; k < u1_field.size(); ++k)
        worst = std::max(worst, std::abs(pre.back()[k] - u1_field[k] - post.front()[k]));
    return worst;
}

double HjSolution2D::interp(const Grid2D& g, const std::vector<double>& layer, double x,
                            double y) {
    if (x < g.x.front() - 1e-12 || x > g.x.back() + 1e-12 || y < g.y.front() - 1e-12 ||
        y > g.y.back() + 1e-12)
        throw NumericsError("HjSolution2D::interp: point outside the grid");
    std::size_t i = g.x.cell_of(x), j = g.y.cell_of(y);
    double tx = (x - g.x[i]) / g.hx, ty = (y - g.y[j]) / g.hy;
    tx = std::clamp(tx, 0.0, 1.0);
    ty = std::clamp(ty, 0.0, 1.0);
    double v00 = layer[g.idx(i, j)], v10 = layer[g.idx(i + 1, j)];
    double v01 = layer[g.idx(i, j + 1)], v11 = layer[g.idx(i + 1, j + 1)];
    return (1 - tx) * ((1 - ty) * v00 + ty * v01) + tx * ((1 - ty) * v10 + ty * v11);
}

// ---------------------------------------------------------------------------
// The explicit monotone step
// ---------------------------------------------------------------------------

namespace {

// Linear-extrapolation ghost access: zero second difference at the walls.
inline double ghost(const std::vector<double>& u, const Grid2D& g, long i, long j) {
    long nx = static_cast<long>(g.nx()), ny = static_cast<long>(g.ny());
    if (i < 0) return 2.0 * ghost(u, g, 0, j) - ghost(u, g, 1, j);
    if (i >= nx) return 2.0 * ghost(u, g, nx - 1, j) - ghost(u, g, nx - 2, j);
    if (j < 0) return 2.0 * ghost(u, g, i, 0) - ghost(u, g, i, 1);
    if (j >= ny) return 2.0 * ghost(u, g, i, ny - 1) - ghost(u, g, i, ny - 2);
    return u[g.idx(static_cast<std::size_t>(i), static_cast<std::size_t>(j))];
}

double max_abs_dy(const std::vector<double>& u, const Grid2D& g) {
    double worst = 0.0;
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j + 1 < g.ny(); ++j)
            worst = std::max(worst,
                             std::abs(u[g.idx(i, j + 1)] - u[g.idx(i, j)]) / g.hy);
    return worst;
}

struct StepContext {
    const Coeffs2D* c;
    const Grid2D* g;
    double static_outflow = 0.0;    // diffusion + drift part of the diagonal budget
    double max_tau2_sq = 0.0;
};

StepContext make_context(const Coeffs2D& c, const Grid2D& g) {
    StepContext ctx{&c, &g, 0.0, 0.0};
    for (std::size_t k = 0; k < g.size(); ++k) {
        double cross = std::abs(c.a12[k]);
        // monotone cross stencil needs diagonal dominance node-wise
        if (c.a11[k] / (g.hx * g.hx) + 1e-15 < cross / (2.0 * g.hx * g.hy) ||
            c.a22[k] / (g.hy * g.hy) + 1e-15 < cross / (2.0 * g.hx * g.hy))
            throw NumericsError("hj2d: cross term breaks monotonicity; adjust the hx/hy "
                                "aspect ratio");
        double outflow = 2.0 * c.a11[k] / (g.hx * g.hx) + 2.0 * c.a22[k] / (g.hy * g.hy) -
                         cross / (g.hx * g.hy) + std::abs(c.drift_x[k]) / g.hx +
                         std::abs(c.drift_y[k]) / g.hy;
        ctx.static_outflow = std::max(ctx.static_outflow, outflow);
        ctx.max_tau2_sq = std::max(ctx.max_tau2_sq, c.tau2[k] * c.tau2[k]);
    }
    return ctx;
}

void check_step(const StepContext& ctx, double dt, double grad_bound, double safety) {
    double budget = dt * (ctx.static_outflow + ctx.max_tau2_sq * grad_bound / ctx.g->hy);
    if (budget > safety)
        throw NumericsError("hj2d: CFL violated; need dt <= " +
                            std::to_string(safety * dt / budget) + " (got " +
                            std::to_string(dt) + ")");
}

std::vector<double> backward_step_2d(const Coeffs2D& c, const Grid2D& g,
                                     const std::vector<double>& u, double dt) {
    const std::size_t nx = g.nx(), ny = g.ny();
    const double hx = g.hx, hy = g.hy;
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < nx; ++i) {
        long li = static_cast<long>(i);
        for (std::size_t j = 0; j < ny; ++j) {
            long lj = static_cast<long>(j);
            std::size_t k = g.idx(i, j);
            double uc = u[k];
            double uxp = ghost(u, g, li + 1, lj), uxm = ghost(u, g, li - 1, lj);
            double uyp = ghost(u, g, li, lj + 1), uym = ghost(u, g, li, lj - 1);

            double uxx = (uxp - 2.0 * uc + uxm) / (hx * hx);
            double uyy = (uyp - 2.0 * uc + uym) / (hy * hy);

            double cross;
            if (c.a12[k] >= 0.0) {
                double upp = ghost(u, g, li + 1, lj + 1), umm = ghost(u, g, li - 1, lj - 1);
                cross = (2.0 * uc + upp + umm - uxp - uxm - uyp - uym) / (2.0 * hx * hy);
            } else {
                double upm = ghost(u, g, li + 1, lj - 1), ump = ghost(u, g, li - 1, lj + 1);
                cross = -(2.0 * uc + upm + ump - uxp - uxm - uyp - uym) / (2.0 * hx * hy);
            }

            double dxm = (uc - uxm) / hx, dxp = (uxp - uc) / hx;
            double dym = (uc - uym) / hy, dyp = (uyp - uc) / hy;
            double drift = c.drift_x[k] * (c.drift_x[k] >= 0.0 ? dxp : dxm) +
                           c.drift_y[k] * (c.drift_y[k] >= 0.0 ? dyp : dym);

            // Godunov flux of the convex (u_y)^2 term; ties at zero gradient
            // take value 0.
            double q = std::max(std::max(dym, 0.0), std::max(-dyp, 0.0));

            double Lu = c.a11[k] * uxx + c.a22[k] * uyy + c.a12[k] * cross + drift;
            out[k] = uc + dt * Lu - 0.5 * dt * c.tau2[k] * c.tau2[k] * q * q;
        }
    }
    return out;
}

void check_storage(const Grid2D& g, const TimeGrid& tg, const Hj2DOptions& opt) {
    std::size_t layers = tg.total_steps() + 2;
    if (layers * g.size() > opt.storage_cap)
        throw NumericsError("hj2d: layer storage would exceed the cap; coarsen the grid "
                            "or raise Hj2DOptions::storage_cap");
}

}  // namespace

HjSolution2D solve_hj_generic(const Coeffs2D& coeffs, const std::vector<double>& u1_field,
                              const std::vector<double>& u2_field, const Grid2D& grid,
                              const TimeGrid& tg, const Hj2DOptions& opt) {
    if (u2_field.size() != grid.size()) throw DomainError("hj2d: terminal field size mismatch");
    if (tg.has_pre() && u1_field.size() != grid.size())
        throw DomainError("hj2d: jump field size mismatch");
    check_storage(grid, tg, opt);

    StepContext ctx = make_context(coeffs, grid);

    HjSolution2D sol{grid, tg, {}, {}};
    sol.post.resize(tg.steps_post() + 1);
    sol.post.back() = u2_field;
    for (std::size_t k = tg.steps_post(); k-- > 0;) {
        check_step(ctx, tg.dt_post(), max_abs_dy(sol.post[k + 1], grid), opt.cfl_safety);
        sol.post[k] = backward_step_2d(coeffs, grid, sol.post[k + 1], tg.dt_post());
    }

    if (tg.has_pre()) {
        sol.pre.resize(tg.steps_pre() + 1);
        auto& glue = sol.pre.back();
        glue.resize(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k)
            glue[k] = u1_field[k] + sol.post.front()[k];
        for (std::size_t k = tg.steps_pre(); k-- > 0;) {
            check_step(ctx, tg.dt_pre(), max_abs_dy(sol.pre[k + 1], grid), opt.cfl_safety);
            sol.pre[k] = backward_step_2d(coeffs, grid, sol.pre[k + 1], tg.dt_pre());
        }
    }
    return sol;
}

HjSolution2D solve_hj_sb(const SvmSpec& svm, const std::vector<double>& u1_x,
                         const std::vector<double>& u2_x, const Grid2D& grid,
                         const TimeGrid& tg, const Hj2DOptions& opt) {
    if (u2_x.size() != grid.nx()) throw DomainError("solve_hj_sb: u2 must live on the x-axis");
    auto lift = [&](const std::vector<double>& f) {
        std::vector<double> field(grid.size());
        for (std::size_t i = 0; i < grid.nx(); ++i)
            for (std::size_t j = 0; j < grid.ny(); ++j) field[grid.idx(i, j)] = f[i];
        return field;
    };
    std::vector<double> u1_field;
    if (tg.has_pre()) {
        if (u1_x.size() != grid.nx())
            throw DomainError("solve_hj_sb: u1 must live on the x-axis");
        u1_field = lift(u1_x);
    }
    return solve_hj_generic(svm_coeffs_xy(svm, grid), u1_field, lift(u2_x), grid, tg, opt);
}

VixPostSolution solve_hj_vix_post(const SvmSpec& svm, const std::vector<double>& u2_x_of_ew,
                                  double delta, const Grid2D& wy_grid, const TimeGrid& tg_post,
                                  const Hj2DOptions& opt) {
    if (tg_post.has_pre())
        throw DomainError("solve_hj_vix_post: time grid must cover [T1, T2] only");
    if (u2_x_of_ew.size() != wy_grid.nx())
        throw DomainError("solve_hj_vix_post: u2 must live on the w-axis");

    std::vector<double> terminal(wy_grid.size());
    double u2_sup = 0.0;
    for (std::size_t i = 0; i < wy_grid.nx(); ++i) {
        u2_sup = std::max(u2_sup, std::abs(u2_x_of_ew[i]));
        for (std::size_t j = 0; j < wy_grid.ny(); ++j)
            terminal[wy_grid.idx(i, j)] = u2_x_of_ew[i] - delta * wy_grid.x[i];
    }

    VixPostSolution out{solve_hj_generic(svm_coeffs_wy(svm, wy_grid), {}, terminal, wy_grid,
                                         tg_post, opt),
                        delta, 0.0};

    // Logarithmic growth certificate: |v(t,w,y)| <= C0 + |delta| |w| with
    // C0 = ||u2|| + |delta| (T2-T1) sup sigma_tilde^2 / 2.
    double sup_sig2 = 0.0;
    for (std::size_t j = 0; j < wy_grid.ny(); ++j) {
        double st = svm.sigma_tilde(wy_grid.y[j]);
        sup_sig2 = std::max(sup_sig2, st * st);
    }
    double span = tg_post.T2() - tg_post.start_post();
    double c0 = u2_sup + 0.5 * std::abs(delta) * span * sup_sig2;
    out.growth_constant = c0;
    double slack = 1e-9 + 1e-6 * (c0 + std::abs(delta));
    for (const auto& layer : out.sol.post)
        for (std::size_t i = 0; i < wy_grid.nx(); ++i)
            for (std::size_t j = 0; j < wy_grid.ny(); ++j) {
                double bound = c0 + std::abs(delta) * std::abs(wy_grid.x[i]) + slack;
                if (std::abs(layer[wy_grid.idx(i, j)]) > bound)
                    throw NumericsError(
                        "solve_hj_vix_post: logarithmic growth bound violated; enlarge "
                        "the w-domain");
            }
    return out;
}

double godunov_dy(const Grid2D& g, const std::vector<double>& u, std::size_t i,
                  std::size_t j) {
    long li = static_cast<long>(i), lj = static_cast<long>(j);
    double uc = ghost(u, g, li, lj);
    double dym = (uc - ghost(u, g, li, lj - 1)) / g.hy;
    double dyp = (ghost(u, g, li, lj + 1) - uc) / g.hy;
    double qm = std::max(dym, 0.0), qp = std::max(-dyp, 0.0);
    if (qm <= 0.0 && qp <= 0.0) return 0.0;
    return qm >= qp ? dym : dyp;
}

ControlField2D extract_tilt(const HjSolution2D& sol, const Coeffs2D& coeffs) {
    const Grid2D& g = sol.grid;
    ControlField2D field{g, sol.tg, {}};
    field.values.reserve(sol.tg.total_steps());
    auto tilt_from = [&](const std::vector<double>& u_next) {
        std::vector<double> a(g.size());
        for (std::size_t i = 0; i < g.nx(); ++i)
            for (std::size_t j = 0; j < g.ny(); ++j) {
                std::size_t k = g.idx(i, j);
                a[k] = -coeffs.tau2[k] * godunov_dy(g, u_next, i, j);
            }
        return a;
    };
    for (std::size_t k = 1; k < sol.pre.size(); ++k) field.values.push_back(tilt_from(sol.pre[k]));
    for (std::size_t k = 1; k < sol.post.size(); ++k) field.values.push_back(tilt_from(sol.post[k]));
    return field;
}

}  // namespace motcal
