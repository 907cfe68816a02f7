#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "motcal/oracle.hpp"

namespace motcal {

// ---------------------------------------------------------------------------
// PathTree
// ---------------------------------------------------------------------------

std::vector<std::size_t> PathTree::leaves() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].children.empty()) out.push_back(i);
    return out;
}

double PathTree::p0_of_leaf(std::size_t leaf) const {
    double p = 1.0;
    std::size_t v = leaf;
    while (nodes[v].parent != SIZE_MAX) {
        std::size_t par = nodes[v].parent;
        const auto& ch = nodes[par].children;
        for (std::size_t c = 0; c < ch.size(); ++c)
            if (ch[c] == v) {
                p *= nodes[par].child_prob[c];
                break;
            }
        v = par;
    }
    return p;
}

std::size_t PathTree::ancestor_at(std::size_t leaf, std::size_t depth) const {
    std::size_t v = leaf;
    while (nodes[v].depth > depth) v = nodes[v].parent;
    return v;
}

void PathTree::validate() const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& nd = nodes[i];
        if (nd.children.empty()) {
            if (nd.depth != depth_total)
                throw DomainError("PathTree: leaf at wrong depth");
            continue;
        }
        double psum = 0.0, drift = 0.0;
        for (std::size_t c = 0; c < nd.children.size(); ++c) {
            double p = nd.child_prob[c];
            if (p <= 0.0) throw DomainError("PathTree: reference probabilities must be > 0");
            psum += p;
            drift += p * (nodes[nd.children[c]].x - nd.x);
        }
        if (std::abs(psum - 1.0) > 1e-12)
            throw DomainError("PathTree: child probabilities must sum to 1");
        if (std::abs(drift) > 1e-10)
            throw DomainError("PathTree: reference X-process is not a martingale");
    }
}

PathTree PathTree::trinomial(const SvmSpec& svm, std::size_t depth_T1,
                             std::size_t depth_total, double dt) {
    if (depth_total == 0 || depth_total > 6)
        throw DomainError("PathTree: depth must be 1..6");
    if (depth_T1 > depth_total) throw DomainError("PathTree: T1 beyond the horizon");

    PathTree tree;
    tree.depth_T1 = depth_T1;
    tree.depth_total = depth_total;
    tree.dt = dt;
    tree.nodes.push_back(TreeNode{svm.x0, svm.y0, SIZE_MAX, {}, {}, 0});

    std::vector<std::size_t> frontier{0};
    for (std::size_t d = 0; d < depth_total; ++d) {
        std::vector<std::size_t> next;
        for (std::size_t v : frontier) {
            double x = tree.nodes[v].x, y = tree.nodes[v].y;
            double sig = svm.sigma(x, y);
            double s = sig * std::sqrt(1.5 * dt);
            double ty = svm.tau1(x, y) * std::sqrt(1.5 * dt);
            double h = svm.tau2(x, y) * std::sqrt(0.5 * dt);
            double bdt = svm.b(x, y) * dt;
            // X-shocks {+s, 0, -s}; the second Y-shock pattern {+h, -2h, +h}
            // is mean-zero, X-orthogonal and variance-matched.
            double cx[3] = {x + s, x, x - s};
            double cy[3] = {y + bdt + ty + h, y + bdt - 2.0 * h, y + bdt - ty + h};
            for (int c = 0; c < 3; ++c) {
                tree.nodes.push_back(TreeNode{cx[c], cy[c], v, {}, {}, d + 1});
                tree.nodes[v].children.push_back(tree.nodes.size() - 1);
                tree.nodes[v].child_prob.push_back(1.0 / 3.0);
            }
            next.insert(next.end(), tree.nodes[v].children.begin(),
                        tree.nodes[v].children.end());
        }
        frontier = std::move(next);
    }
    tree.validate();
    return tree;
}

// ---------------------------------------------------------------------------
// Entropy program
// ---------------------------------------------------------------------------

namespace {

struct Features {
    // rows: equality features with targets, then inequality cuts with caps
    std::vector<std::vector<double>> eq_rows;  // per row: coefficient per leaf
    std::vector<double> eq_rhs;
    std::vector<std::vector<double>> le_rows;
    std::vector<double> le_rhs;
};

// leaves grouped by a key value within 1e-9
std::vector<std::pair<double, std::vector<std::size_t>>> group_by_value(
    const std::vector<double>& value_per_leaf) {
    std::map<long long, std::pair<double, std::vector<std::size_t>>> buckets;
    for (std::size_t l = 0; l < value_per_leaf.size(); ++l) {
        long long key = llround(value_per_leaf[l] * 1e9);
        auto& b = buckets[key];
        b.first = value_per_leaf[l];
        b.second.push_back(l);
    }
    std::vector<std::pair<double, std::vector<std::size_t>>> out;
    for (auto& [k, v] : buckets) out.push_back(std::move(v));
    return out;
}

void add_marginal_rows(Features& f, const std::vector<double>& value_per_leaf,
                       const ValueLaw& law, std::size_t n_leaves, const char* tag) {
    auto groups = group_by_value(value_per_leaf);
    std::vector<bool> used(law.values.size(), false);
    for (const auto& [val, members] : groups) {
        double target = 0.0;
        bool found = false;
        for (std::size_t t = 0; t < law.values.size(); ++t)
            if (std::abs(law.values[t] - val) < 1e-8) {
                target = law.probs[t];
                used[t] = true;
                found = true;
                break;
            }
        if (!found) target = 0.0;  // attained value absent from the law: pin to zero
        std::vector<double> row(n_leaves, 0.0);
        for (std::size_t l : members) row[l] = 1.0;
        f.eq_rows.push_back(std::move(row));
        f.eq_rhs.push_back(target);
    }
    for (std::size_t t = 0; t < law.values.size(); ++t)
        if (!used[t] && law.probs[t] > 1e-14)
            throw DomainError(std::string("solve_discrete_sb: ") + tag +
                              " target value " + std::to_string(law.values[t]) +
                              " is not attained by the tree");
}

struct DualSolve {
    std::vector<double> p;
    double primal = 0.0, dual = 0.0, kkt = 0.0;
    bool ok = false;
};

// Maximize -log Z(lambda, nu) - lambda.b - nu.d over lambda free, nu >= 0
// by damped projected Newton on the exponential family.
DualSolve entropy_dual_ascent(const Features& f, const std::vector<double>& p0) {
    const std::size_t nl = p0.size();
    const std::size_t ne = f.eq_rows.size(), ni = f.le_rows.size();
    const std::size_t m = ne + ni;
    std::vector<double> mult(m, 0.0);

    auto row = [&](std::size_t r) -> const std::vector<double>& {
        return r < ne ? f.eq_rows[r] : f.le_rows[r - ne];
    };
    auto rhs = [&](std::size_t r) { return r < ne ? f.eq_rhs[r] : f.le_rhs[r - ne]; };

    std::vector<double> p(nl);
    auto refresh = [&]() {
        double zmax = -std::numeric_limits<double>::infinity();
        std::vector<double> expnt(nl);
        for (std::size_t l = 0; l < nl; ++l) {
            double s = 0.0;
            for (std::size_t r = 0; r < m; ++r) s += mult[r] * row(r)[l];
            expnt[l] = std::log(p0[l]) - s;
            zmax = std::max(zmax, expnt[l]);
        }
        double z = 0.0;
        for (std::size_t l = 0; l < nl; ++l) z += std::exp(expnt[l] - zmax);
        double logz = zmax + std::log(z);
        for (std::size_t l = 0; l < nl; ++l) p[l] = std::exp(expnt[l] - logz);
        return logz;
    };

    auto dual_value = [&](double logz) {
        double d = -logz;
        for (std::size_t r = 0; r < m; ++r) d -= mult[r] * rhs(r);
        return d;
    };

    double logz = refresh();
    double best_dual = dual_value(logz);

    std::vector<double> grad(m), step(m);
    std::vector<double> hess;
    for (std::size_t it = 0; it < 400; ++it) {
        // gradient of the dual: E_p[feature] - rhs (with nu >= 0 held by
        // projection)
        for (std::size_t r = 0; r < m; ++r) {
            double e = 0.0;
            for (std::size_t l = 0; l < nl; ++l) e += p[l] * row(r)[l];
            grad[r] = e - rhs(r);
        }
        double kkt = 0.0;
        for (std::size_t r = 0; r < ne; ++r) kkt = std::max(kkt, std::abs(grad[r]));
        for (std::size_t r = ne; r < m; ++r) {
            // inequality: feasibility (E <= d) and complementary slackness
            kkt = std::max(kkt, std::max(grad[r], 0.0));
            kkt = std::max(kkt, std::min(mult[r], 0.0) * -1.0);
            if (mult[r] > 1e-12) kkt = std::max(kkt, std::abs(grad[r]));
        }
        if (kkt < 1e-11) break;

        // Newton direction on Cov = E[ff^T] - E[f]E[f]^T (ridge-stabilized)
        hess.assign(m * m, 0.0);
        std::vector<double> mean(m, 0.0);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t l = 0; l < nl; ++l) mean[r] += p[l] * row(r)[l];
        for (std::size_t l = 0; l < nl; ++l) {
            if (p[l] < 1e-300) continue;
            for (std::size_t r = 0; r < m; ++r) {
                double fr = row(r)[l] - mean[r];
                if (fr == 0.0) continue;
                double w = p[l] * fr;
                for (std::size_t s2 = r; s2 < m; ++s2)
                    hess[r * m + s2] += w * (row(s2)[l] - mean[s2]);
            }
        }
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t s2 = 0; s2 < r; ++s2) hess[r * m + s2] = hess[s2 * m + r];
        for (std::size_t r = 0; r < m; ++r) hess[r * m + r] += 1e-12 + 1e-9 * hess[r * m + r];

        // Cholesky solve hess * step = grad
        std::vector<double> chol = hess;
        bool spd = true;
        for (std::size_t r = 0; r < m && spd; ++r) {
            for (std::size_t c = 0; c <= r; ++c) {
                double s = chol[r * m + c];
                for (std::size_t k2 = 0; k2 < c; ++k2) s -= chol[r * m + k2] * chol[c * m + k2];
                if (r == c) {
                    if (s <= 0.0) { spd = false; break; }
                    chol[r * m + r] = std::sqrt(s);
                } else {
                    chol[r * m + c] = s / chol[c * m + c];
                }
            }
        }
        if (spd) {
            step = grad;
            for (std::size_t r = 0; r < m; ++r) {
                for (std::size_t c = 0; c < r; ++c) step[r] -= chol[r * m + c] * step[c];
                step[r] /= chol[r * m + r];
            }
            for (std::size_t r = m; r-- > 0;) {
                for (std::size_t c = r + 1; c < m; ++c) step[r] -= chol[c * m + r] * step[c];
                step[r] /= chol[r * m + r];
            }
        } else {
            step = grad;  // gradient fallback
        }

        // backtracking on the dual value, nu projected to >= 0
        double t = 1.0;
        std::vector<double> save = mult;
        bool improved = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t r = 0; r < m; ++r) {
                // ascent direction: dual is concave, grad points uphill
                mult[r] = save[r] + t * step[r];
                if (r >= ne) mult[r] = std::max(mult[r], 0.0);
            }
            double lz = refresh();
            double d = dual_value(lz);
            if (d >= best_dual - 1e-15) {
                best_dual = std::max(best_dual, d);
                logz = lz;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if (!improved) {
            mult = save;
            logz = refresh();
            break;
        }
    }

    DualSolve out;
    out.p = p;
    out.dual = best_dual;
    double primal = 0.0;
    for (std::size_t l = 0; l < nl; ++l)
        if (p[l] > 0.0) primal += p[l] * std::log(p[l] / p0[l]);
    out.primal = primal;
    double kkt = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        double e = 0.0;
        for (std::size_t l = 0; l < nl; ++l) e += p[l] * row(r)[l];
        double g = e - rhs(r);
        if (r < ne) kkt = std::max(kkt, std::abs(g));
        else kkt = std::max(kkt, mult[r] > 1e-12 ? std::abs(g) : std::max(g, 0.0));
    }
    out.kkt = kkt;
    out.ok = true;
    return out;
}

}  // namespace

DiscreteSbResult solve_discrete_sb(const PathTree& tree, const ValueLaw& mu1,
                                   const ValueLaw& mu2,
                                   const std::optional<GridMeasure>& vix_mu3) {
    tree.validate();
    auto leaves = tree.leaves();
    const std::size_t nl = leaves.size();
    std::vector<double> p0(nl);
    for (std::size_t l = 0; l < nl; ++l) p0[l] = tree.p0_of_leaf(leaves[l]);

    DiscreteSbResult out;

    Features f;
    // marginal blocks
    if (tree.depth_T1 > 0 && !mu1.values.empty()) {
        std::vector<double> x_t1(nl);
        for (std::size_t l = 0; l < nl; ++l)
            x_t1[l] = tree.nodes[tree.ancestor_at(leaves[l], tree.depth_T1)].x;
        add_marginal_rows(f, x_t1, mu1, nl, "mu1");
    }
    std::vector<double> x_t2(nl);
    for (std::size_t l = 0; l < nl; ++l) x_t2[l] = tree.nodes[leaves[l]].x;
    add_marginal_rows(f, x_t2, mu2, nl, "mu2");

    // node-wise martingale rows: E[p (X_next - X_node); path through node] = 0
    for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
        if (tree.nodes[v].children.empty()) continue;
        std::vector<double> row(nl, 0.0);
        bool nontrivial = false;
        for (std::size_t l = 0; l < nl; ++l) {
            std::size_t a = tree.ancestor_at(leaves[l], tree.nodes[v].depth);
            if (a != v) continue;
            std::size_t child = tree.ancestor_at(leaves[l], tree.nodes[v].depth + 1);
            row[l] = tree.nodes[child].x - tree.nodes[v].x;
            if (row[l] != 0.0) nontrivial = true;
        }
        if (nontrivial) {
            f.eq_rows.push_back(std::move(row));
            f.eq_rhs.push_back(0.0);
        }
    }

    // feasibility gate via LP phase 1 (plus p >= 0 is implicit)
    {
        LpProblem lp;
        lp.n = nl;
        lp.cost.assign(nl, 0.0);
        std::vector<double> ones(nl, 1.0);
        lp.add_row(LpProblem::EQ, ones, 1.0);
        for (std::size_t r = 0; r < f.eq_rows.size(); ++r)
            lp.add_row(LpProblem::EQ, f.eq_rows[r], f.eq_rhs[r]);
        LpResult feas = solve_lp(lp);
        if (feas.status == LpResult::INFEASIBLE) {
            out.feasible = false;
            for (std::size_t r : feas.infeasible_rows)
                out.infeasibility.push_back("constraint row " + std::to_string(r));
            if (out.infeasibility.empty()) out.infeasibility.push_back("marginal block");
            return out;
        }
    }

    // V per T1 node from a path measure
    std::vector<std::size_t> t1_nodes;
    for (std::size_t v = 0; v < tree.nodes.size(); ++v)
        if (tree.nodes[v].depth == tree.depth_T1 && !tree.nodes[v].children.empty())
            t1_nodes.push_back(v);
    if (tree.depth_T1 == tree.depth_total)
        for (std::size_t v = 0; v < tree.nodes.size(); ++v)
            if (tree.nodes[v].depth == tree.depth_T1) t1_nodes.push_back(v);

    auto v_of_measure = [&](const std::vector<double>& p) {
        std::vector<double> vvals(t1_nodes.size(), 0.0);
        for (std::size_t t = 0; t < t1_nodes.size(); ++t) {
            std::size_t v = t1_nodes[t];
            double mass = 0.0, acc = 0.0;
            for (std::size_t l = 0; l < nl; ++l) {
                if (tree.ancestor_at(leaves[l], tree.depth_T1) != v) continue;
                mass += p[l];
                acc += p[l] * (-std::log(tree.nodes[leaves[l]].x) + std::log(tree.nodes[v].x));
            }
            vvals[t] = mass > 1e-14 ? acc / mass : 0.0;
        }
        return vvals;
    };

    // fixed-point loop on the frozen V values (single pass when no mu3)
    std::vector<double> v_frozen(t1_nodes.size(), 0.0);
    DualSolve solve;
    std::size_t fp_iters = 0;
    bool fp_converged = true;
    const std::size_t fp_cap = vix_mu3 ? 60 : 1;
    std::vector<double> p_prev;
    for (fp_iters = 0; fp_iters < fp_cap; ++fp_iters) {
        Features fi = f;
        if (vix_mu3) {
            // convex-lower-order cuts at the strikes of mu3's grid
            for (double K : vix_mu3->grid().nodes()) {
                std::vector<double> call_row(nl, 0.0), put_row(nl, 0.0);
                for (std::size_t l = 0; l < nl; ++l) {
                    std::size_t a = tree.ancestor_at(leaves[l], tree.depth_T1);
                    std::size_t t = static_cast<std::size_t>(
                        std::find(t1_nodes.begin(), t1_nodes.end(), a) - t1_nodes.begin());
                    call_row[l] = std::max(v_frozen[t] - K, 0.0);
                    put_row[l] = std::max(K - v_frozen[t], 0.0);
                }
                fi.le_rows.push_back(std::move(call_row));
                fi.le_rhs.push_back(vix_mu3->call_price(K));
                fi.le_rows.push_back(std::move(put_row));
                fi.le_rhs.push_back(vix_mu3->put_price(K));
            }
        }
        solve = entropy_dual_ascent(fi, p0);
        auto v_new = v_of_measure(solve.p);
        double dv = 0.0;
        for (std::size_t t = 0; t < v_new.size(); ++t)
            dv = std::max(dv, std::abs(v_new[t] - v_frozen[t]));
        v_frozen = v_new;
        if (!vix_mu3) break;
        if (dv < 1e-8) break;
        if (fp_iters + 1 == fp_cap) fp_converged = false;
    }

    out.feasible = true;
    out.value = solve.primal;
    out.dual_value = solve.dual;
    out.duality_gap = std::abs(solve.primal - solve.dual);
    out.path_probs = solve.p;
    out.v_at_t1_nodes = v_frozen;
    out.vix_fixed_point_converged = fp_converged;
    out.fixed_point_iters = fp_iters + 1;
    out.kkt_residual = solve.kkt;
    return out;
}

AttainmentReport check_attainment(const DiscreteSbResult& result, const PathTree& tree,
                                  const ValueLaw& mu1, const ValueLaw& mu2,
                                  const std::optional<GridMeasure>& vix_mu3, double tol) {
    AttainmentReport rep;
    auto leaves = tree.leaves();
    const auto& p = result.path_probs;

    // martingale residuals at every non-terminal node
    double worst_mart = 0.0;
    for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
        if (tree.nodes[v].children.empty()) continue;
        double acc = 0.0;
        for (std::size_t l = 0; l < leaves.size(); ++l) {
            if (tree.ancestor_at(leaves[l], tree.nodes[v].depth) != v) continue;
            std::size_t child = tree.ancestor_at(leaves[l], tree.nodes[v].depth + 1);
            acc += p[l] * (tree.nodes[child].x - tree.nodes[v].x);
        }
        worst_mart = std::max(worst_mart, std::abs(acc));
    }
    rep.max_martingale_residual = worst_mart;
    rep.martingale_ok = worst_mart <= tol;

    auto marginal_residual = [&](const ValueLaw& law, std::size_t depth) {
        double worst = 0.0;
        for (std::size_t t = 0; t < law.values.size(); ++t) {
            double mass = 0.0;
            for (std::size_t l = 0; l < leaves.size(); ++l) {
                double x = tree.nodes[tree.ancestor_at(leaves[l], depth)].x;
                if (std::abs(x - law.values[t]) < 1e-8) mass += p[l];
            }
            worst = std::max(worst, std::abs(mass - law.probs[t]));
        }
        return worst;
    };
    double worst_marg = marginal_residual(mu2, tree.depth_total);
    if (tree.depth_T1 > 0 && !mu1.values.empty())
        worst_marg = std::max(worst_marg, marginal_residual(mu1, tree.depth_T1));
    rep.max_marginal_residual = worst_marg;
    rep.marginals_ok = worst_marg <= tol;

    if (vix_mu3) {
        // law of V under p against mu3 in convex-lower order, via the
        // solved conditional values
        double worst = 0.0;
        for (double K : vix_mu3->grid().nodes()) {
            double call = 0.0, put = 0.0, mass_at = 0.0;
            std::vector<std::size_t> t1_nodes;
            for (std::size_t v = 0; v < tree.nodes.size(); ++v)
                if (tree.nodes[v].depth == tree.depth_T1) t1_nodes.push_back(v);
            for (std::size_t t = 0; t < t1_nodes.size(); ++t) {
                double mass = 0.0;
                for (std::size_t l = 0; l < leaves.size(); ++l)
                    if (tree.ancestor_at(leaves[l], tree.depth_T1) == t1_nodes[t])
                        mass += p[l];
                double v = t < result.v_at_t1_nodes.size() ? result.v_at_t1_nodes[t] : 0.0;
                call += mass * std::max(v - K, 0.0);
                put += mass * std::max(K - v, 0.0);
                mass_at += mass;
            }
            (void)mass_at;
            worst = std::max(worst, call - vix_mu3->call_price(K));
            worst = std::max(worst, put - vix_mu3->put_price(K));
        }
        rep.max_vix_residual = worst;
        rep.vix_ok = worst <= tol;
    }
    return rep;
}

}  // namespace motcal
