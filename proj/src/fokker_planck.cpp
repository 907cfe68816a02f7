#include "motcal/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace motcal {

namespace {

constexpr double kNegativityFloor = -1e-14;

void clip_and_renormalize(std::vector<double>& m, const char* who) {
    double sum = 0.0;
    for (double& v : m) {
        if (v < kNegativityFloor)
            throw NumericsError(std::string(who) +
                                ": mass went negative beyond the monotone-scheme floor; "
                                "check CFL and control signs");
        if (v < 0.0) v = 0.0;
        sum += v;
    }
    if (sum <= 0.0) throw NumericsError(std::string(who) + ": total mass vanished");
    for (double& v : m) v /= sum;
}

}  // namespace

GridMeasure FlowResult1D::at_T1() const {
    std::size_t k = tg.has_pre() ? tg.steps_pre() : 0;
    return GridMeasure(grid, masses[k]);
}

GridMeasure FlowResult2D::x_at_T1() const {
    std::size_t k = tg.has_pre() ? tg.steps_pre() : 0;
    return GridMeasure(grid.x, x_marginals[k]);
}

// ---------------------------------------------------------------------------
// 1D conservative flow
// ---------------------------------------------------------------------------

FlowResult1D evolve_1d(const ControlField1D& b, const GridMeasure& m0, const TimeGrid& tg,
                       const LagrangianSpec& spec) {
    const Grid1D& g = b.grid;
    if (!(g == m0.grid())) throw DomainError("evolve_1d: control and measure grids differ");
    if (b.values.size() != tg.total_steps())
        throw DomainError("evolve_1d: control field does not match the time grid");

    auto steps = tg.step_sizes();
    for (std::size_t k = 0; k < steps.size(); ++k)
        for (std::size_t i = 0; i < g.size(); ++i) {
            double bi = b.values[k][i];
            if (bi < 0.0) throw DomainError("evolve_1d: negative diffusion control");
            if (i > 0 && i + 1 < g.size()) {
                double cell = (g[i] - g[i - 1]) * (g[i + 1] - g[i]);
                if (steps[k] * bi > cell * (1.0 + 1e-12))
                    throw NumericsError("evolve_1d: CFL violated; need dt <= " +
                                        std::to_string(cell / bi));
            }
        }

    FlowResult1D out{g, tg, {}, {}, 0.0};
    out.masses.reserve(tg.total_steps() + 1);
    out.flux.reserve(tg.total_steps());
    out.masses.push_back(m0.weights());

    std::vector<double> m = m0.weights();
    for (std::size_t k = 0; k < tg.total_steps(); ++k) {
        double dt = steps[k];
        const auto& bk = b.values[k];

        // cost and flux from the left endpoint of the step: this is the
        // pairing under which the discrete envelope identity telescopes
        // exactly against the backward HJ sweep
        std::vector<double> w(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            w[i] = bk[i] * m[i];
            out.cost += dt * spec(bk[i]) * m[i];
        }
        out.flux.push_back(w);

        // m_{k+1} = m_k + dt * A^T (b m), A the halved second-difference
        // operator with zero boundary rows
        std::vector<double> next = m;
        for (std::size_t j = 1; j + 1 < g.size(); ++j) {
            double hm = g[j] - g[j - 1];
            double hp = g[j + 1] - g[j];
            double v = dt * w[j];
            next[j - 1] += v / (hm * (hm + hp));
            next[j] -= v / (hm * hp);
            next[j + 1] += v / (hp * (hm + hp));
        }
        clip_and_renormalize(next, "evolve_1d");
        m = std::move(next);
        out.masses.push_back(m);
    }

    // structural guards: mass handled above, mean drift indicates misuse
    double mean0 = m0.mean();
    double meanT = GridMeasure(g, out.masses.back()).mean();
    if (std::abs(meanT - mean0) > 1e-8 * std::max(1.0, std::abs(mean0)))
        throw NumericsError("evolve_1d: martingale mean drifted (conservative form broken)");
    return out;
}

// ---------------------------------------------------------------------------
// 2D controlled flow
// ---------------------------------------------------------------------------

ControlField2D zero_tilt(const Grid2D& grid, const TimeGrid& tg) {
    return constant_tilt(grid, tg, 0.0);
}

ControlField2D constant_tilt(const Grid2D& grid, const TimeGrid& tg, double c) {
    ControlField2D f{grid, tg, {}};
    f.values.assign(tg.total_steps(), std::vector<double>(grid.size(), c));
    return f;
}

std::vector<double> dirac_2d(const Grid2D& grid, double x, double y) {
    std::vector<double> m(grid.size(), 0.0);
    double cx = std::clamp(x, grid.x.front(), grid.x.back());
    double cy = std::clamp(y, grid.y.front(), grid.y.back());
    std::size_t i = grid.x.cell_of(cx), j = grid.y.cell_of(cy);
    double tx = std::clamp((cx - grid.x[i]) / grid.hx, 0.0, 1.0);
    double ty = std::clamp((cy - grid.y[j]) / grid.hy, 0.0, 1.0);
    m[grid.idx(i, j)] = (1 - tx) * (1 - ty);
    m[grid.idx(i + 1, j)] = tx * (1 - ty);
    m[grid.idx(i, j + 1)] = (1 - tx) * ty;
    m[grid.idx(i + 1, j + 1)] = tx * ty;
    return m;
}

FlowResult2D evolve_2d(const SvmSpec& svm, const ControlField2D& alpha,
                       const std::vector<double>& m0, const Grid2D& grid, const TimeGrid& tg) {
    if (alpha.values.size() != tg.total_steps())
        throw DomainError("evolve_2d: tilt field does not match the time grid");
    if (m0.size() != grid.size()) throw DomainError("evolve_2d: m0 size mismatch");

    Coeffs2D c = svm_coeffs_xy(svm, grid);
    const double hx = grid.hx, hy = grid.hy;
    const std::size_t nx = grid.nx(), ny = grid.ny();

    FlowResult2D out{grid, tg, {}, {}, {}, 0.0};
    out.x_marginals.reserve(tg.total_steps() + 1);

    auto x_marginal_of = [&](const std::vector<double>& m) {
        std::vector<double> w(nx, 0.0);
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t j = 0; j < ny; ++j) w[i] += m[grid.idx(i, j)];
        double s = std::accumulate(w.begin(), w.end(), 0.0);
        for (double& v : w) v /= s;
        return w;
    };

    std::vector<double> m = m0;
    clip_and_renormalize(m, "evolve_2d");
    out.x_marginals.push_back(x_marginal_of(m));
    if (!tg.has_pre()) out.m_T1 = m;

    auto steps = tg.step_sizes();
    std::vector<double> next(grid.size());
    for (std::size_t k = 0; k < tg.total_steps(); ++k) {
        double dt = steps[k];
        const auto& ak = alpha.values[k];

        for (std::size_t idx = 0; idx < m.size(); ++idx)
            out.energy += 0.5 * dt * ak[idx] * ak[idx] * m[idx];

        next = m;
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            for (std::size_t j = 1; j + 1 < ny; ++j) {
                std::size_t q = grid.idx(i, j);
                double mass = m[q];
                if (mass == 0.0) continue;
                double drift = c.drift_y[q] + c.tau2[q] * ak[q];

                double out_d = 2.0 * c.a11[q] / (hx * hx) + 2.0 * c.a22[q] / (hy * hy) -
                               std::abs(c.a12[q]) / (hx * hy) + std::abs(drift) / hy;
                if (dt * out_d > 1.0 + 1e-12)
                    throw NumericsError("evolve_2d: CFL violated; need dt <= " +
                                        std::to_string(1.0 / out_d));

                double vxx = dt * c.a11[q] * mass / (hx * hx);
                next[grid.idx(i - 1, j)] += vxx;
                next[grid.idx(i + 1, j)] += vxx;
                next[q] -= 2.0 * vxx;

                double vyy = dt * c.a22[q] * mass / (hy * hy);
                next[grid.idx(i, j - 1)] += vyy;
                next[grid.idx(i, j + 1)] += vyy;
                next[q] -= 2.0 * vyy;

                double cr = dt * c.a12[q] * mass / (2.0 * hx * hy);
                if (cr >= 0.0) {
                    next[q] += 2.0 * cr;
                    next[grid.idx(i + 1, j + 1)] += cr;
                    next[grid.idx(i - 1, j - 1)] += cr;
                    next[grid.idx(i + 1, j)] -= cr;
                    next[grid.idx(i - 1, j)] -= cr;
                    next[grid.idx(i, j + 1)] -= cr;
                    next[grid.idx(i, j - 1)] -= cr;
                } else {
                    next[q] += -2.0 * cr;
                    next[grid.idx(i + 1, j - 1)] += -cr;
                    next[grid.idx(i - 1, j + 1)] += -cr;
                    next[grid.idx(i + 1, j)] -= -cr;
                    next[grid.idx(i - 1, j)] -= -cr;
                    next[grid.idx(i, j + 1)] -= -cr;
                    next[grid.idx(i, j - 1)] -= -cr;
                }

                // upwind transport in y
                double vdr = dt * std::abs(drift) * mass / hy;
                next[q] -= vdr;
                if (drift >= 0.0)
                    next[grid.idx(i, j + 1)] += vdr;
                else
                    next[grid.idx(i, j - 1)] += vdr;
            }
        }
        clip_and_renormalize(next, "evolve_2d");
        std::swap(m, next);
        out.x_marginals.push_back(x_marginal_of(m));
        if (tg.has_pre() && k + 1 == tg.steps_pre()) out.m_T1 = m;
    }
    out.m_T2 = m;

    GridMeasure mx0(grid.x, out.x_marginals.front());
    GridMeasure mxT(grid.x, out.x_marginals.back());
    if (std::abs(mx0.mean() - mxT.mean()) > 1e-6 * std::max(1.0, std::abs(mx0.mean())))
        throw NumericsError("evolve_2d: X-marginal mean drifted");
    return out;
}

GridMeasure histogram_x(const PathEnsemble& paths, std::size_t cp, const Grid1D& grid,
                        bool use_weights) {
    std::vector<double> w(grid.size(), 0.0);
    const std::size_t ncp = paths.checkpoint_times.size();
    for (std::size_t p = 0; p < paths.n_paths; ++p) {
        double x = paths.x_at[p * ncp + cp];
        double weight = use_weights ? std::exp(paths.log_weight[p]) : 1.0;
        // cell edges at midpoints between nodes
        std::size_t i = 0;
        while (i + 1 < grid.size() && x > 0.5 * (grid[i] + grid[i + 1])) ++i;
        w[i] += weight;
    }
    double s = std::accumulate(w.begin(), w.end(), 0.0);
    if (s <= 0.0) throw NumericsError("histogram_x: empty histogram");
    for (double& v : w) v /= s;
    return GridMeasure(grid, std::move(w));
}

}  // namespace motcal
