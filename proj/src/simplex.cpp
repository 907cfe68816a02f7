#include "motcal/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace motcal {

void LpProblem::add_row(RowType t, std::vector<double> coeffs, double b) {
    if (coeffs.size() != n) throw DomainError("LpProblem: row width mismatch");
    row_type.push_back(t);
    rows.push_back(std::move(coeffs));
    rhs.push_back(b);
}

namespace {

constexpr double kPivotFloor = 1e-8;

// Revised simplex with an explicit basis inverse, refactorized from the
// original data every few dozen pivots (keeps certificates honest at the
// 1e-9 scale). Degeneracy is broken by the perturbation method: ratio
// tests read an rhs with distinct per-row epsilons, solutions read the
// true rhs, and the epsilons shrink to zero before the final certificate.
class RevisedSimplex {
public:
    RevisedSimplex(const LpProblem& p, double tol) : tol_(tol), m_(p.rows.size()) {
        n_struct_ = p.n;
        n_slack_ = 0;
        for (auto t : p.row_type)
            if (t == LpProblem::LE) ++n_slack_;
        n_ = n_struct_ + n_slack_ + m_;

        // column-major storage of [A | slacks | artificials]
        cols_.assign(n_, std::vector<double>(m_, 0.0));
        b_true_.resize(m_);
        std::size_t slack = 0;
        for (std::size_t r = 0; r < m_; ++r) {
            double sign = p.rhs[r] < 0.0 ? -1.0 : 1.0;
            for (std::size_t j = 0; j < n_struct_; ++j) cols_[j][r] = sign * p.rows[r][j];
            if (p.row_type[r] == LpProblem::LE) {
                cols_[n_struct_ + slack][r] = sign;
                ++slack;
            }
            cols_[n_struct_ + n_slack_ + r][r] = 1.0;
            b_true_[r] = sign * p.rhs[r];
        }
        basis_.resize(m_);
        for (std::size_t r = 0; r < m_; ++r) basis_[r] = n_struct_ + n_slack_ + r;
        set_perturbation(1, 1e-9);
        refactorize();
    }

    LpResult run(const LpProblem& p, std::size_t max_iters) {
        LpResult out;

        std::vector<double> phase1(n_, 0.0);
        for (std::size_t a = n_struct_ + n_slack_; a < n_; ++a) phase1[a] = 1.0;
        std::size_t it1 = 0;
        bool ok = optimize(phase1, n_, max_iters, it1, 5e-10);
        out.iterations = it1;
        if (!ok) {
            out.status = LpResult::ITERATION_LIMIT;
            return out;
        }
        out.phase1_objective = objective_true(phase1);
        if (out.phase1_objective > 1e-7) {
            out.status = LpResult::INFEASIBLE;
            std::vector<double> xb = solve_B(b_true_);
            for (std::size_t r = 0; r < m_; ++r)
                if (basis_[r] >= n_struct_ + n_slack_ && xb[r] > tol_)
                    out.infeasible_rows.push_back(r);
            return out;
        }

        std::vector<double> cost(n_, 0.0);
        for (std::size_t j = 0; j < n_struct_; ++j) cost[j] = p.cost[j];
        std::size_t lockout = n_struct_ + n_slack_;
        std::size_t it2 = 0;
        ok = optimize(cost, lockout, max_iters, it2);
        out.iterations += it2;
        if (!ok) {
            out.status = unbounded_ ? LpResult::UNBOUNDED : LpResult::ITERATION_LIMIT;
            return out;
        }
        // epsilon continuation: polish at shrinking perturbation
        for (double scale : {1e-12, 0.0}) {
            set_perturbation(salt_++, scale);
            std::size_t extra = 0;
            if (!optimize(cost, lockout, max_iters, extra)) {
                out.iterations += extra;
                out.status = unbounded_ ? LpResult::UNBOUNDED : LpResult::ITERATION_LIMIT;
                return out;
            }
            out.iterations += extra;
        }

        out.status = LpResult::OPTIMAL;
        refactorize();
        std::vector<double> xb = solve_B(b_true_);
        out.x.assign(n_struct_, 0.0);
        for (std::size_t r = 0; r < m_; ++r)
            if (basis_[r] < n_struct_) out.x[basis_[r]] = std::max(xb[r], 0.0);
        out.objective = 0.0;
        for (std::size_t j = 0; j < n_struct_; ++j) out.objective += p.cost[j] * out.x[j];

        std::vector<double> y = dual_prices(cost);
        out.reduced_costs.assign(n_struct_, 0.0);
        for (std::size_t j = 0; j < n_struct_; ++j)
            out.reduced_costs[j] = cost[j] - dot(y, cols_[j]);
        out.basis = basis_;
        return out;
    }

private:
    static double dot(const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    }

    void set_perturbation(std::uint64_t salt, double scale) {
        b_pert_ = b_true_;
        if (scale <= 0.0) return;
        for (std::size_t r = 0; r < m_; ++r) {
            std::uint64_t h = (salt + r + 1) * 0x9E3779B97F4A7C15ULL;
            b_pert_[r] += scale * (1.0 + static_cast<double>(h % 997) / 997.0);
        }
    }

    // dense Gauss-Jordan inverse of the basis matrix
    void refactorize() {
        std::vector<std::vector<double>> a(m_, std::vector<double>(2 * m_, 0.0));
        for (std::size_t r = 0; r < m_; ++r) {
            for (std::size_t c = 0; c < m_; ++c) a[r][c] = cols_[basis_[c]][r];
            a[r][m_ + r] = 1.0;
        }
        for (std::size_t c = 0; c < m_; ++c) {
            std::size_t piv = c;
            for (std::size_t r = c + 1; r < m_; ++r)
                if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
            if (std::abs(a[piv][c]) < 1e-12)
                throw NumericsError("simplex: singular basis during refactorization");
            std::swap(a[c], a[piv]);
            double d = a[c][c];
            for (std::size_t j = c; j < 2 * m_; ++j) a[c][j] /= d;
            for (std::size_t r = 0; r < m_; ++r) {
                if (r == c) continue;
                double f = a[r][c];
                if (f == 0.0) continue;
                for (std::size_t j = c; j < 2 * m_; ++j) a[r][j] -= f * a[c][j];
            }
        }
        binv_.assign(m_, std::vector<double>(m_));
        for (std::size_t r = 0; r < m_; ++r)
            for (std::size_t c = 0; c < m_; ++c) binv_[r][c] = a[r][m_ + c];
    }

    std::vector<double> solve_B(const std::vector<double>& rhs) const {
        std::vector<double> x(m_, 0.0);
        for (std::size_t r = 0; r < m_; ++r) x[r] = dot(binv_[r], rhs);
        return x;
    }

    std::vector<double> dual_prices(const std::vector<double>& cost) const {
        std::vector<double> y(m_, 0.0);
        for (std::size_t c = 0; c < m_; ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < m_; ++r) s += cost[basis_[r]] * binv_[r][c];
            y[c] = s;
        }
        return y;
    }

    double objective_true(const std::vector<double>& cost) {
        std::vector<double> xb = solve_B(b_true_);
        double v = 0.0;
        for (std::size_t r = 0; r < m_; ++r) v += cost[basis_[r]] * xb[r];
        return v;
    }

    // entering column by partial pricing: rotate through column blocks,
    // falling back to a full scan before declaring optimality
    std::size_t price(const std::vector<double>& cost, const std::vector<double>& y,
                      std::size_t col_limit) {
        const std::size_t block = 128;
        std::size_t scanned = 0;
        double best_rc = -tol_;
        std::size_t enter = col_limit;
        while (scanned < col_limit) {
            std::size_t hi = std::min(cursor_ + block, col_limit);
            for (std::size_t j = cursor_; j < hi; ++j) {
                double rc = cost[j] - dot(y, cols_[j]);
                if (rc < best_rc) {
                    best_rc = rc;
                    enter = j;
                }
            }
            scanned += hi - cursor_;
            cursor_ = hi < col_limit ? hi : 0;
            if (enter < col_limit) return enter;  // good enough candidate
        }
        return col_limit;
    }

    bool optimize(const std::vector<double>& cost, std::size_t col_limit,
                  std::size_t max_iters, std::size_t& iters, double stop_below = -1.0) {
        unbounded_ = false;
        std::size_t since_factor = 0;
        std::vector<double> xb = solve_B(b_pert_);
        for (iters = 0; iters < max_iters; ++iters) {
            if (++since_factor >= 64) {
                refactorize();
                xb = solve_B(b_pert_);
                since_factor = 0;
            }
            if (stop_below >= 0.0 && iters % 16 == 0 && objective_true(cost) < stop_below)
                return true;

            std::vector<double> y = dual_prices(cost);
            std::size_t enter = price(cost, y, col_limit);
            if (enter == col_limit) return true;  // optimal

            std::vector<double> d = solve_B(cols_[enter]);
            std::size_t leave = m_;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < m_; ++r) {
                if (d[r] > kPivotFloor) {
                    double ratio = std::max(xb[r], 0.0) / d[r];
                    if (leave == m_ || ratio < best ||
                        (ratio == best && basis_[r] < basis_[leave])) {
                        best = ratio;
                        leave = r;
                    }
                }
            }
            if (leave == m_) {
                bool any = false;
                for (std::size_t r = 0; r < m_; ++r) any = any || d[r] > tol_;
                if (!any) {
                    unbounded_ = true;
                    return false;
                }
                refactorize();  // noise-level pivots only: recompute and retry
                since_factor = 0;
                std::vector<double> d2 = solve_B(cols_[enter]);
                xb = solve_B(b_pert_);
                leave = m_;
                best = std::numeric_limits<double>::infinity();
                for (std::size_t r = 0; r < m_; ++r)
                    if (d2[r] > kPivotFloor) {
                        double ratio = std::max(xb[r], 0.0) / d2[r];
                        if (leave == m_ || ratio < best) {
                            best = ratio;
                            leave = r;
                        }
                    }
                if (leave == m_) {
                    unbounded_ = true;
                    return false;
                }
                d = std::move(d2);
            }

            // product-form update of the inverse and the basic solution
            double piv = d[leave];
            double step = std::max(xb[leave], 0.0) / piv;
            for (std::size_t c = 0; c < m_; ++c) binv_[leave][c] /= piv;
            for (std::size_t r = 0; r < m_; ++r) {
                if (r == leave) continue;
                double f = d[r];
                if (f == 0.0) continue;
                for (std::size_t c = 0; c < m_; ++c) binv_[r][c] -= f * binv_[leave][c];
                xb[r] -= f * step;
            }
            xb[leave] = step;
            basis_[leave] = enter;
        }
        return false;
    }

    double tol_;
    std::size_t m_, n_struct_ = 0, n_slack_ = 0, n_ = 0;
    std::vector<std::vector<double>> cols_;
    std::vector<double> b_true_, b_pert_;
    std::vector<std::vector<double>> binv_;
    std::vector<std::size_t> basis_;
    std::size_t cursor_ = 0;
    std::uint64_t salt_ = 2;
    bool unbounded_ = false;
};

}  // namespace

LpResult solve_lp(const LpProblem& p, double tol, std::size_t max_iters) {
    if (p.rows.empty()) throw DomainError("solve_lp: no constraints");
    // row equilibration: scale every constraint to unit max coefficient
    LpProblem scaled = p;
    for (std::size_t r = 0; r < scaled.rows.size(); ++r) {
        double mx = 0.0;
        for (double v : scaled.rows[r]) mx = std::max(mx, std::abs(v));
        if (mx > 0.0 && (mx > 4.0 || mx < 0.25)) {
            for (double& v : scaled.rows[r]) v /= mx;
            scaled.rhs[r] /= mx;
        }
    }
    RevisedSimplex s(scaled, tol);
    return s.run(scaled, max_iters);
}

}  // namespace motcal
