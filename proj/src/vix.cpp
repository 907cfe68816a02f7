#include "motcal/vix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace motcal {

// ---------------------------------------------------------------------------
// ConvexPL
// ---------------------------------------------------------------------------

namespace {

// Pool-adjacent-violators: L2 projection onto nondecreasing sequences.
void isotonic(std::vector<double>& s) {
    std::vector<double> level(s.size()), weight(s.size());
    std::size_t m = 0;
    for (double v : s) {
        level[m] = v;
        weight[m] = 1.0;
        ++m;
        while (m > 1 && level[m - 2] > level[m - 1]) {
            double w = weight[m - 2] + weight[m - 1];
            level[m - 2] = (level[m - 2] * weight[m - 2] + level[m - 1] * weight[m - 1]) / w;
            weight[m - 2] = w;
            --m;
        }
    }
    std::size_t k = 0;
    for (std::size_t b = 0; b < m; ++b)
        for (std::size_t r = 0; r < static_cast<std::size_t>(weight[b]); ++r) s[k++] = level[b];
}

}  // namespace

ConvexPL::ConvexPL(std::vector<double> knots, double value_at_first, std::vector<double> slopes)
    : knots_(std::move(knots)), v0_(value_at_first), slopes_(std::move(slopes)) {
    if (knots_.size() < 2 || slopes_.size() != knots_.size() - 1)
        throw DomainError("ConvexPL: need n knots and n-1 slopes");
    for (std::size_t i = 1; i < knots_.size(); ++i)
        if (knots_[i] <= knots_[i - 1]) throw DomainError("ConvexPL: knots must increase");
    if (knots_.front() < 0.0) throw DomainError("ConvexPL: domain is [0, +inf)");
    isotonic(slopes_);
    if (slopes_.back() < 0.0)
        throw DomainError("ConvexPL: final slope < 0 makes u3 unbounded below on [0, inf)");
}

ConvexPL ConvexPL::zero(double v_max) {
    return ConvexPL({0.0, v_max}, 0.0, {0.0});
}

double ConvexPL::operator()(double v) const {
    if (v < knots_.front()) v = knots_.front();
    double val = v0_;
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
        double hi = std::min(v, knots_[i + 1]);
        if (hi > knots_[i]) val += slopes_[i] * (hi - knots_[i]);
        if (v <= knots_[i + 1]) return val;
    }
    return val + slopes_.back() * (v - knots_.back());
}

double ConvexPL::min_value() const {
    double best = v0_;
    double val = v0_;
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
        val += slopes_[i] * (knots_[i + 1] - knots_[i]);
        best = std::min(best, val);
    }
    return best;
}

ConvexPL ConvexPL::shifted(double c) const {
    ConvexPL out(*this);
    out.v0_ += c;
    return out;
}

// ---------------------------------------------------------------------------
// Instance defaults
// ---------------------------------------------------------------------------

std::vector<double> VixInstance::default_v_grid(const SvmSpec& model, const Grid2D& wy,
                                                double T1, double T2) {
    double sup_sig2 = 0.0;
    for (double y : wy.y.nodes()) {
        double st = model.sigma_tilde(y);
        sup_sig2 = std::max(sup_sig2, st * st);
    }
    double v_star = 0.5 * sup_sig2 * (T2 - T1);
    auto vg = linspace(0.0, 1.05 * v_star, 201);
    vg.push_back(v_star);  // the proof's blow-up edge, kept exactly on the grid
    std::sort(vg.begin(), vg.end());
    vg.erase(std::unique(vg.begin(), vg.end()), vg.end());
    return vg;
}

// ---------------------------------------------------------------------------
// Post-T1 family
// ---------------------------------------------------------------------------

namespace {

std::size_t vix_auto_steps(const SvmSpec& svm, const Grid2D& wy, double span,
                           double grad_margin) {
    Coeffs2D c = svm_coeffs_wy(svm, wy);
    double worst = 0.0;
    for (std::size_t k = 0; k < wy.size(); ++k) {
        double outflow = 2.0 * c.a11[k] / (wy.hx * wy.hx) + 2.0 * c.a22[k] / (wy.hy * wy.hy) +
                         std::abs(c.drift_x[k]) / wy.hx + std::abs(c.drift_y[k]) / wy.hy +
                         c.tau2[k] * c.tau2[k] * grad_margin / wy.hy;
        worst = std::max(worst, outflow);
    }
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span * worst / 0.8)));
}

double sup_sigma2(const SvmSpec& model, const Grid2D& wy) {
    double s = 0.0;
    for (double y : wy.y.nodes()) {
        double st = model.sigma_tilde(y);
        s = std::max(s, st * st);
    }
    return s;
}

std::vector<double> u2_on_w_axis(const VixInstance& inst, const std::vector<double>& u2) {
    std::vector<double> out(inst.wy_grid.nx());
    const Grid1D& xg = inst.x_grid;
    for (std::size_t i = 0; i < out.size(); ++i) {
        double x = std::exp(inst.wy_grid.x[i]);
        double cx = std::clamp(x, xg.front(), xg.back());
        std::size_t c = xg.cell_of(cx);
        double t = (cx - xg[c]) / (xg[c + 1] - xg[c]);
        out[i] = (1.0 - t) * u2[c] + t * u2[c + 1];
    }
    return out;
}

}  // namespace

PostFamily post_t1_family(const VixInstance& inst, const std::vector<double>& u2) {
    std::vector<double> deltas = inst.delta_grid.empty() ? VixInstance::default_delta_grid()
                                                         : inst.delta_grid;
    if (std::find(deltas.begin(), deltas.end(), 0.0) == deltas.end()) deltas.push_back(0.0);
    std::sort(deltas.begin(), deltas.end());
    deltas.erase(std::unique(deltas.begin(), deltas.end()), deltas.end());

    double dmax = std::max(std::abs(deltas.front()), std::abs(deltas.back()));
    std::size_t steps = inst.steps_post;
    if (steps == 0)
        steps = vix_auto_steps(inst.model, inst.wy_grid, inst.T2 - inst.T1,
                               25.0 + dmax * dmax);
    TimeGrid tg(inst.T1, inst.T1, inst.T2, 0, steps);
    // (TimeGrid wants T1 < T2 and an empty pre segment: t0 = T1 here)

    std::vector<double> u2w = u2.empty() ? std::vector<double>(inst.wy_grid.nx(), 0.0)
                                         : u2_on_w_axis(inst, u2);

    PostFamily fam;
    fam.u2_on_w = u2w;
    fam.deltas = deltas;
    fam.t1_slice.resize(deltas.size());
    std::vector<std::string> errors(deltas.size());
    parallel_for(deltas.size(), [&](std::size_t d) {
        try {
            VixPostSolution s = solve_hj_vix_post(inst.model, u2w, deltas[d], inst.wy_grid, tg);
            fam.t1_slice[d] = s.sol.post.front();
        } catch (const std::exception& e) {
            errors[d] = e.what();
        }
    });
    for (const auto& e : errors)
        if (!e.empty()) throw NumericsError("post_t1_family: " + e);
    fam.zero_index = static_cast<std::size_t>(
        std::lower_bound(deltas.begin(), deltas.end(), 0.0) - deltas.begin());

    // Continuity in delta: |u(d') - u(d)| <= (|w| + sig2max (T2-T1)/2)(1+eps)|d'-d|
    double sig2 = sup_sigma2(inst.model, inst.wy_grid);
    double c_time = 0.5 * sig2 * (inst.T2 - inst.T1);
    const Grid2D& g = inst.wy_grid;
    double margin = 0.0;
    for (std::size_t d = 0; d + 1 < deltas.size(); ++d) {
        double dd = deltas[d + 1] - deltas[d];
        for (std::size_t i = 0; i < g.nx(); ++i) {
            double cap = (std::abs(g.x[i]) + c_time) * 1.05 * dd + 1e-7;
            for (std::size_t j = 0; j < g.ny(); ++j) {
                double du = std::abs(fam.t1_slice[d + 1][g.idx(i, j)] -
                                     fam.t1_slice[d][g.idx(i, j)]);
                margin = std::max(margin, du / cap);
                if (du > cap)
                    throw NumericsError("post_t1_family: delta-continuity diagnostic failed; "
                                        "refine the delta grid");
            }
        }
    }
    fam.continuity_margin = margin;
    return fam;
}

// ---------------------------------------------------------------------------
// Phi
// ---------------------------------------------------------------------------

PhiTable compute_phi(const PostFamily& family, const ConvexPL& u3, const VixInstance& inst) {
    const Grid2D& g = inst.wy_grid;
    std::vector<double> vg = inst.v_grid.empty()
                                 ? VixInstance::default_v_grid(inst.model, g, inst.T1, inst.T2)
                                 : inst.v_grid;
    double v_star = 0.5 * sup_sigma2(inst.model, g) * (inst.T2 - inst.T1);
    if (vg.back() < v_star - 1e-12)
        throw NumericsError("compute_phi: v_grid must extend to sigma2_max (T2-T1)/2 = " +
                            std::to_string(v_star));

    PhiTable out{g, {}, vg, family.deltas, {}, {}, {}, {}, 0.0};
    out.values.resize(g.size());
    out.argmin_v.resize(g.size());
    out.argmax_delta.resize(g.size());
    out.lower_bound.resize(g.size());
    out.upper_bound.resize(g.size());

    std::vector<double> u3v(vg.size());
    for (std::size_t v = 0; v < vg.size(); ++v) u3v[v] = u3(vg[v]);
    double u3min = u3.min_value();

    parallel_for(g.size(), [&](std::size_t k) {
        double w = g.x[k / g.ny()];
        double best = std::numeric_limits<double>::infinity();
        double best_v = vg.front(), best_d = family.deltas.front();
        for (std::size_t v = 0; v < vg.size(); ++v) {
            double coeff = w - vg[v];  // -delta(G + v) = delta(w - v)
            double sup = -std::numeric_limits<double>::infinity();
            double sup_d = family.deltas.front();
            for (std::size_t d = 0; d < family.deltas.size(); ++d) {
                double cand = family.deltas[d] * coeff + family.t1_slice[d][k];
                if (cand > sup) {
                    sup = cand;
                    sup_d = family.deltas[d];
                }
            }
            double total = sup + u3v[v];
            if (total < best) {
                best = total;
                best_v = vg[v];
                best_d = sup_d;
            }
        }
        out.values[k] = best;
        out.argmin_v[k] = best_v;
        out.argmax_delta[k] = best_d;
        out.lower_bound[k] = family.t1_slice[family.zero_index][k] + u3min;
    });

    // Upper envelope from the alpha = 0 reference flow: two linear solves,
    // terminal u2(e^w) (the family's shared terminal) and terminal -w.
    std::size_t steps = inst.steps_post;
    if (steps == 0) steps = vix_auto_steps(inst.model, g, inst.T2 - inst.T1, 25.0);
    TimeGrid tg(inst.T1, inst.T1, inst.T2, 0, steps);
    Coeffs2D lin = svm_coeffs_wy(inst.model, g);
    std::fill(lin.tau2.begin(), lin.tau2.end(), 0.0);  // drop the quadratic term

    std::vector<double> u2_terminal(g.size());
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j)
            u2_terminal[g.idx(i, j)] = family.u2_on_w[i];
    HjSolution2D lin_u2 = solve_hj_generic(lin, {}, u2_terminal, g, tg);

    std::vector<double> neg_w(g.size());
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j) neg_w[g.idx(i, j)] = -g.x[i];
    HjSolution2D lin_logc = solve_hj_generic(lin, {}, neg_w, g, tg);

    double dv = vg.size() > 1 ? vg[1] - vg[0] : 1.0;
    double dmax = std::max(std::abs(family.deltas.front()), std::abs(family.deltas.back()));
    out.bound_slack = 0.5 * dv * (dmax + std::abs(u3.max_slope())) + 1e-7;

    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j) {
            std::size_t k = g.idx(i, j);
            double vhat = std::max(lin_logc.post.front()[k] + g.x[i], 0.0);
            out.upper_bound[k] = lin_u2.post.front()[k] + u3(vhat);
        }
    return out;
}

ConcavityScan delta_concavity_scan(const PostFamily& family, double tol) {
    ConcavityScan scan;
    const auto& d = family.deltas;
    for (std::size_t k = 0; k < family.t1_slice.front().size(); ++k)
        for (std::size_t i = 1; i + 1 < d.size(); ++i) {
            double left = (family.t1_slice[i][k] - family.t1_slice[i - 1][k]) / (d[i] - d[i - 1]);
            double right = (family.t1_slice[i + 1][k] - family.t1_slice[i][k]) / (d[i + 1] - d[i]);
            double bulge = right - left;  // concave => slopes nonincreasing
            scan.worst_bulge = std::max(scan.worst_bulge, bulge);
        }
    scan.concave = scan.worst_bulge <= tol;
    return scan;
}

// ---------------------------------------------------------------------------
// Pre-T1 value and the dual
// ---------------------------------------------------------------------------

HjSolution2D pre_t1_value(const VixInstance& inst, const PhiTable& phi,
                          const std::vector<double>& u1) {
    const Grid2D& g = inst.wy_grid;
    double x_lo = std::exp(g.x.front()), x_hi = std::exp(g.x.back());
    if (!inst.model.tau2_constant(x_lo, x_hi, g.y.front(), g.y.back()))
        throw DomainError("pre_t1_value: the PDE route requires constant tau2; use "
                          "pre_t1_value_mc");
    if (!(inst.t0 < inst.T1)) throw DomainError("pre_t1_value: need t0 < T1");

    std::vector<double> terminal(g.size());
    std::vector<double> u1w = u2_on_w_axis(inst, u1);
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j)
            terminal[g.idx(i, j)] = u1w[i] + phi.values[g.idx(i, j)];

    std::size_t steps = inst.steps_pre;
    if (steps == 0) steps = vix_auto_steps(inst.model, g, inst.T1 - inst.t0, 50.0);
    // single-segment grid on [t0, T1]: reuse the post machinery
    TimeGrid tg(inst.t0, inst.t0, inst.T1, 0, steps);
    return solve_hj_generic(svm_coeffs_wy(inst.model, g), {}, terminal, g, tg);
}

McPreValue pre_t1_value_mc(const VixInstance& inst, const PhiTable& phi,
                           const std::vector<double>& u1, std::size_t n_paths,
                           std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const SvmSpec& svm = inst.model;
    const Grid2D& g = inst.wy_grid;
    std::vector<double> u1w = u2_on_w_axis(inst, u1);

    std::size_t n_steps = 200;
    double dt = (inst.T1 - inst.t0) / static_cast<double>(n_steps);
    double s = 0.0, s2 = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        double w = std::log(svm.x0), y = svm.y0;
        for (std::size_t k = 0; k < n_steps; ++k) {
            double sdt = std::sqrt(dt);
            double z1 = normal(rng), z2 = normal(rng);
            double st = svm.sigma_tilde(y);
            double x = std::exp(w);
            double t1c = svm.tau1(x, y), t2c = svm.tau2(x, y);
            w += -0.5 * st * st * dt + st * sdt * z1;
            y += svm.b(x, y) * dt + t1c * sdt * z1 + t2c * sdt * z2;
        }
        double cw = std::clamp(w, g.x.front(), g.x.back());
        double cy = std::clamp(y, g.y.front(), g.y.back());
        double phi_v = HjSolution2D::interp(g, phi.values, cw, cy);
        std::size_t c = g.x.cell_of(cw);
        double t = (cw - g.x[c]) / g.hx;
        double u1_v = (1.0 - t) * u1w[c] + t * u1w[c + 1];
        double v = u1_v + phi_v;
        s += v;
        s2 += v * v;
    }
    McPreValue out;
    double n = static_cast<double>(n_paths);
    out.value = s / n;
    out.se = std::sqrt(std::max(s2 / n - out.value * out.value, 0.0) / n);
    return out;
}

VixDualReport vix_dual_value(const VixInstance& inst, const std::vector<double>& u1,
                             const std::vector<double>& u2, const ConvexPL& u3) {
    if (!(inst.t0 < inst.T1)) throw DomainError("vix_dual_value: need t0 < T1");

    PostFamily family = post_t1_family(inst, u2);
    PhiTable phi = compute_phi(family, u3, inst);
    ConcavityScan scan = delta_concavity_scan(family);

    bool bounds_ok = true;
    for (std::size_t k = 0; k < phi.values.size(); ++k) {
        if (phi.values[k] < phi.lower_bound[k] - 1e-9 ||
            phi.values[k] > phi.upper_bound[k] + phi.bound_slack)
            bounds_ok = false;
    }

    HjSolution2D pre = pre_t1_value(inst, phi, u1);
    double u_t0 = HjSolution2D::interp(inst.wy_grid, pre.post.front(),
                                       std::log(inst.model.x0), inst.model.y0);

    double val = u_t0;
    val -= inst.target1().integrate(u1);
    val -= inst.target2().integrate(u2);
    for (std::size_t i = 0; i < inst.mu3.size(); ++i)
        val -= inst.mu3.weights()[i] * u3(inst.mu3.grid()[i]);
    return VixDualReport{val, u_t0, std::move(family), std::move(phi), scan, bounds_ok};
}

// ---------------------------------------------------------------------------
// VIX index and the put bound
// ---------------------------------------------------------------------------

double vix_index(double V, double T1, double T2) {
    if (V < 0.0) throw DomainError("vix_index: V must be nonnegative");
    if (!(T2 > T1)) throw DomainError("vix_index: need T2 > T1");
    return 100.0 * std::sqrt(2.0 * V / (T2 - T1));
}

std::vector<PutBoundRow> vix_put_bound(const GridMeasure& mu3,
                                       const std::vector<double>& v_samples, double T1,
                                       double T2, const std::vector<double>& strikes) {
    if (mu3.grid().front() < 0.0) throw DomainError("vix_put_bound: mu3 support must be >= 0");
    for (double v : v_samples)
        if (v < 0.0) throw DomainError("vix_put_bound: V samples must be >= 0");

    std::vector<PutBoundRow> rows;
    rows.reserve(strikes.size());
    double n = static_cast<double>(v_samples.size());
    for (double K : strikes) {
        PutBoundRow row;
        row.strike = K;
        double s = 0.0, s2 = 0.0;
        for (double v : v_samples) {
            double payoff = std::max(K - vix_index(v, T1, T2), 0.0);
            s += payoff;
            s2 += payoff * payoff;
        }
        row.mc_price = s / n;
        row.mc_se = std::sqrt(std::max(s2 / n - row.mc_price * row.mc_price, 0.0) / n);

        double bound = 0.0;
        for (std::size_t i = 0; i < mu3.size(); ++i)
            bound += mu3.weights()[i] * std::max(K - vix_index(mu3.grid()[i], T1, T2), 0.0);
        row.bound = bound;
        row.pass = row.mc_price <= bound + 3.0 * row.mc_se + 1e-12;
        row.hard_violation = row.mc_price > bound + 6.0 * row.mc_se + 1e-9;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace motcal
