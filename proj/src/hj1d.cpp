#include "motcal/hj1d.hpp"

#include <algorithm>
#include <cmath>

namespace motcal {

// ---------------------------------------------------------------------------
// TimeGrid
// ---------------------------------------------------------------------------

TimeGrid::TimeGrid(double t0, double T1, double T2, std::size_t steps_pre,
                   std::size_t steps_post)
    : t0_(t0), T1_(T1), T2_(T2), steps_pre_(steps_pre), steps_post_(steps_post) {
    if (!(T1 < T2)) throw DomainError("TimeGrid: need T1 < T2");
    if (t0 > T2) throw DomainError("TimeGrid: t0 beyond T2");
    if (t0 < T1 && steps_pre_ == 0)
        throw DomainError("TimeGrid: t0 < T1 requires steps on [t0, T1]");
    if (t0 >= T1) steps_pre_ = 0;
    if (steps_post_ == 0) throw DomainError("TimeGrid: need steps on the post segment");
}

std::vector<double> TimeGrid::step_sizes() const {
    std::vector<double> out;
    out.reserve(total_steps());
    for (std::size_t k = 0; k < steps_pre_; ++k) out.push_back(dt_pre());
    for (std::size_t k = 0; k < steps_post_; ++k) out.push_back(dt_post());
    return out;
}

double TimeGrid::node(std::size_t k) const {
    if (k <= steps_pre_ && steps_pre_ > 0)
        return t0_ + dt_pre() * static_cast<double>(k);
    return start_post() + dt_post() * static_cast<double>(k - steps_pre_);
}

// ---------------------------------------------------------------------------
// HjSolution1D
// ---------------------------------------------------------------------------

const std::vector<double>& HjSolution1D::forward_layer(std::size_t k) const {
    if (!pre.empty()) {
        if (k < pre.size()) return pre[k];  // k == steps_pre gives u(T1^-)
        return post[k - (pre.size() - 1)];
    }
    return post[k];
}

double HjSolution1D::max_jump_residual(const std::vector<double>& u1) const {
    if (pre.empty()) return 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < u1.size(); ++i)
        worst = std::max(worst, std::abs(pre.back()[i] - u1[i] - post.front()[i]));
    return worst;
}

double second_diff(const Grid1D& g, const std::vector<double>& u, std::size_t i) {
    if (i == 0 || i + 1 >= g.size()) return 0.0;
    double hm = g[i] - g[i - 1];
    double hp = g[i + 1] - g[i];
    return 2.0 * ((u[i + 1] - u[i]) / hp - (u[i] - u[i - 1]) / hm) / (hm + hp);
}

// ---------------------------------------------------------------------------
// Backward solver
// ---------------------------------------------------------------------------

namespace {

double min_cell_product(const Grid1D& g) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < g.size(); ++i)
        m = std::min(m, (g[i] - g[i - 1]) * (g[i + 1] - g[i]));
    return m;
}

void check_cfl(const Hamiltonian& h, const Grid1D& grid, double dt, const char* where) {
    double bmax = h.b_max();
    if (bmax <= 0.0) return;
    double limit = min_cell_product(grid) / bmax;
    if (dt > limit * (1.0 + 1e-12))
        throw NumericsError(std::string("solve_hj_mot: CFL violated on ") + where +
                            " segment; need dt <= " + std::to_string(limit) + ", got " +
                            std::to_string(dt));
}

std::vector<double> backward_step(const Hamiltonian& h, const Grid1D& grid,
                                  const std::vector<double>& u, double dt,
                                  double& overshoot) {
    const std::size_t n = grid.size();
    const double slack = 0.05 * (h.a_max() - h.a_min());
    std::vector<double> out(n);
    double h0 = h.value(0.0);
    out[0] = u[0] - dt * h0;
    out[n - 1] = u[n - 1] - dt * h0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double a = 0.5 * second_diff(grid, u, i);
        if (a < h.a_min()) {
            if (a < h.a_min() - slack)
                throw NumericsError("solve_hj_mot: D^2 u / 2 = " + std::to_string(a) +
                                    " fell past the Hamiltonian table; enlarge a_max");
            overshoot = std::max(overshoot, h.a_min() - a);
            a = h.a_min();
        }
        out[i] = u[i] - dt * h.value(a);
    }
    return out;
}

}  // namespace

HjSolution1D solve_hj_mot(const Hamiltonian& h, const std::vector<double>& u1,
                          const std::vector<double>& u2, const Grid1D& grid,
                          const TimeGrid& tg) {
    if (u2.size() != grid.size()) throw DomainError("solve_hj_mot: u2 size mismatch");
    if (tg.has_pre() && u1.size() != grid.size())
        throw DomainError("solve_hj_mot: u1 size mismatch");

    check_cfl(h, grid, tg.dt_post(), "post");
    if (tg.has_pre()) check_cfl(h, grid, tg.dt_pre(), "pre");

    HjSolution1D sol{grid, tg, {}, {}};
    sol.post.resize(tg.steps_post() + 1);
    sol.post.back() = u2;
    for (std::size_t k = tg.steps_post(); k-- > 0;)
        sol.post[k] = backward_step(h, grid, sol.post[k + 1], tg.dt_post(), sol.table_overshoot);

    if (tg.has_pre()) {
        sol.pre.resize(tg.steps_pre() + 1);
        auto& glue = sol.pre.back();
        glue.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) glue[i] = u1[i] + sol.post.front()[i];
        for (std::size_t k = tg.steps_pre(); k-- > 0;)
            sol.pre[k] = backward_step(h, grid, sol.pre[k + 1], tg.dt_pre(), sol.table_overshoot);
    }
    return sol;
}

ControlField1D extract_optimal_diffusion(const HjSolution1D& sol, const Hamiltonian& h) {
    const Grid1D& grid = sol.grid;
    ControlField1D field{grid, sol.tg, {}};
    field.values.reserve(sol.tg.total_steps());

    auto control_from = [&](const std::vector<double>& u_next) {
        std::vector<double> b(grid.size(), 0.0);
        double b0 = h.optimal_b(0.0);
        b[0] = b0;
        b[grid.size() - 1] = b0;
        for (std::size_t i = 1; i + 1 < grid.size(); ++i)
            b[i] = h.optimal_b(std::max(0.5 * second_diff(grid, u_next, i), h.a_min()));
        return b;
    };

    // Forward step k runs toward the layer the backward sweep stepped from.
    for (std::size_t k = 1; k < sol.pre.size(); ++k)
        field.values.push_back(control_from(sol.pre[k]));
    for (std::size_t k = 1; k < sol.post.size(); ++k)
        field.values.push_back(control_from(sol.post[k]));
    return field;
}

SupersolutionReport certify_supersolution(const HjSolution1D& sol, const Hamiltonian& h,
                                          double tol) {
    SupersolutionReport rep;
    rep.holds = true;

    auto scan_block = [&](const std::vector<std::vector<double>>& block, double dt,
                          std::size_t step_offset) {
        for (std::size_t k = 0; k + 1 < block.size(); ++k) {
            const auto& lo = block[k];
            const auto& hi = block[k + 1];
            for (std::size_t i = 1; i + 1 < sol.grid.size(); ++i) {
                double a = std::max(0.5 * second_diff(sol.grid, hi, i), h.a_min());
                double residual = -(hi[i] - lo[i]) / dt + h.value(a);
                if (residual > rep.max_violation) {
                    rep.max_violation = residual;
                    rep.step = step_offset + k;
                    rep.node = i;
                }
            }
        }
    };

    if (!sol.pre.empty()) scan_block(sol.pre, sol.tg.dt_pre(), 0);
    scan_block(sol.post, sol.tg.dt_post(), sol.pre.empty() ? 0 : sol.pre.size() - 1);
    rep.holds = rep.max_violation <= tol;
    return rep;
}

}  // namespace motcal
