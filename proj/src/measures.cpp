#include "motcal/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace motcal {

namespace {
constexpr double kWeightSumTol = 1e-12;
}

// ---------------------------------------------------------------------------
// Grid1D
// ---------------------------------------------------------------------------

Grid1D::Grid1D(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 3) throw DomainError("Grid1D: need at least 3 nodes");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!std::isfinite(nodes_[i])) throw DomainError("Grid1D: non-finite node");
        if (i > 0 && nodes_[i] <= nodes_[i - 1])
            throw DomainError("Grid1D: nodes must be strictly increasing");
    }
}

Grid1D Grid1D::uniform(double lo, double hi, std::size_t n) {
    return Grid1D(linspace(lo, hi, n));
}

std::size_t Grid1D::cell_of(double x) const {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    if (it == nodes_.begin()) return 0;
    std::size_t i = static_cast<std::size_t>(it - nodes_.begin()) - 1;
    return std::min(i, nodes_.size() - 2);
}

// ---------------------------------------------------------------------------
// GridMeasure
// ---------------------------------------------------------------------------

GridMeasure::GridMeasure(Grid1D grid, std::vector<double> weights)
    : grid_(std::move(grid)), weights_(std::move(weights)) {
    if (weights_.size() != grid_.size())
        throw DomainError("GridMeasure: weights/nodes size mismatch");
    double sum = 0.0;
    for (double w : weights_) {
        if (!std::isfinite(w) || w < 0.0)
            throw DomainError("GridMeasure: weights must be finite and nonnegative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > kWeightSumTol)
        throw DomainError("GridMeasure: weights sum to " + std::to_string(sum) +
                          ", expected 1 within 1e-12");
}

GridMeasure GridMeasure::dirac(const Grid1D& grid, double x) {
    std::vector<double> w(grid.size(), 0.0);
    // mean-preserving split between bracketing nodes
    if (x <= grid.front()) {
        w.front() = 1.0;
    } else if (x >= grid.back()) {
        w.back() = 1.0;
    } else {
        std::size_t i = grid.cell_of(x);
        double theta = (x - grid[i]) / (grid[i + 1] - grid[i]);
        w[i] = 1.0 - theta;
        w[i + 1] = theta;
    }
    return GridMeasure(grid, std::move(w));
}

double GridMeasure::mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) s += weights_[i] * grid_[i];
    return s;
}

double GridMeasure::second_moment() const {
    double s = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) s += weights_[i] * grid_[i] * grid_[i];
    return s;
}

double GridMeasure::variance() const {
    double m = mean();
    return second_moment() - m * m;
}

double GridMeasure::call_price(double strike) const {
    double s = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i)
        s += weights_[i] * std::max(grid_[i] - strike, 0.0);
    return s;
}

double GridMeasure::put_price(double strike) const {
    double s = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i)
        s += weights_[i] * std::max(strike - grid_[i], 0.0);
    return s;
}

double GridMeasure::integrate(const std::vector<double>& nodal_values) const {
    if (nodal_values.size() != weights_.size())
        throw DomainError("GridMeasure::integrate: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) s += weights_[i] * nodal_values[i];
    return s;
}

// ---------------------------------------------------------------------------
// Order relations
// ---------------------------------------------------------------------------

namespace {

std::vector<double> merged_strikes(const GridMeasure& mu, const GridMeasure& nu) {
    std::vector<double> ks;
    ks.reserve(mu.size() + nu.size());
    ks.insert(ks.end(), mu.grid().nodes().begin(), mu.grid().nodes().end());
    ks.insert(ks.end(), nu.grid().nodes().begin(), nu.grid().nodes().end());
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    return ks;
}

}  // namespace

OrderReport convex_order(const GridMeasure& mu, const GridMeasure& nu, double tol) {
    OrderReport rep;
    rep.holds = true;

    double mean_gap = std::abs(mu.mean() - nu.mean());
    if (mean_gap > tol) {
        rep.holds = false;
        rep.worst_violation = mean_gap;
        rep.where = 0.0;
        rep.detail = "mean mismatch";
    }
    for (double k : merged_strikes(mu, nu)) {
        double v = mu.call_price(k) - nu.call_price(k);
        if (v > rep.worst_violation) {
            rep.worst_violation = v;
            rep.where = k;
            if (v > tol) {
                rep.holds = false;
                rep.detail = "call inequality violated at strike " + std::to_string(k);
            }
        }
    }
    return rep;
}

OrderReport convex_order_lower(const GridMeasure& mu, const GridMeasure& nu, double tol) {
    if (mu.grid().front() < 0.0 || nu.grid().front() < 0.0)
        throw DomainError("convex_order_lower: supports must lie in [0, +inf)");

    OrderReport rep;
    rep.holds = true;
    for (double k : merged_strikes(mu, nu)) {
        if (k < 0.0) continue;
        double vc = mu.call_price(k) - nu.call_price(k);
        double vp = mu.put_price(k) - nu.put_price(k);
        double v = std::max(vc, vp);
        if (v > rep.worst_violation) {
            rep.worst_violation = v;
            rep.where = k;
            if (v > tol) {
                rep.holds = false;
                rep.detail = std::string(vc >= vp ? "call" : "put") +
                             " inequality violated at strike " + std::to_string(k);
            }
        }
    }
    return rep;
}

double wasserstein2(const GridMeasure& mu, const GridMeasure& nu) {
    // Quantile coupling: walk both CDFs merging the jump levels.
    const auto& xa = mu.grid().nodes();
    const auto& xb = nu.grid().nodes();
    const auto& wa = mu.weights();
    const auto& wb = nu.weights();

    std::size_t ia = 0, ib = 0;
    double qa = 0.0, qb = 0.0;  // cumulative mass consumed inside current atoms
    double acc = 0.0;
    double q = 0.0;  // total quantile level processed
    while (q < 1.0 - 1e-15) {
        while (ia < wa.size() && wa[ia] <= qa + 1e-18) { ++ia; qa = 0.0; }
        while (ib < wb.size() && wb[ib] <= qb + 1e-18) { ++ib; qb = 0.0; }
        if (ia >= wa.size() || ib >= wb.size()) break;
        double step = std::min(wa[ia] - qa, wb[ib] - qb);
        step = std::min(step, 1.0 - q);
        double d = xa[ia] - xb[ib];
        acc += step * d * d;
        qa += step;
        qb += step;
        q += step;
    }
    return std::sqrt(std::max(acc, 0.0));
}

// ---------------------------------------------------------------------------
// Call curves and Breeden-Litzenberger
// ---------------------------------------------------------------------------

std::optional<double> CallCurve::arbitrage_violation(double tol) const {
    if (strikes.size() != prices.size() || strikes.size() < 2) return strikes.empty() ? 0.0 : strikes.front();
    for (std::size_t i = 0; i + 1 < strikes.size(); ++i)
        if (strikes[i + 1] <= strikes[i]) return strikes[i + 1];
    for (std::size_t i = 0; i < prices.size(); ++i)
        if (!(prices[i] >= -tol)) return strikes[i];
    // slopes within [-1, 0]
    for (std::size_t i = 0; i + 1 < prices.size(); ++i) {
        double s = (prices[i + 1] - prices[i]) / (strikes[i + 1] - strikes[i]);
        if (s > tol || s < -1.0 - tol) return strikes[i + 1];
    }
    // convexity
    for (std::size_t i = 1; i + 1 < prices.size(); ++i) {
        double sl = (prices[i] - prices[i - 1]) / (strikes[i] - strikes[i - 1]);
        double sr = (prices[i + 1] - prices[i]) / (strikes[i + 1] - strikes[i]);
        if (sr - sl < -tol) return strikes[i];
    }
    return std::nullopt;
}

GridMeasure breeden_litzenberger(const CallCurve& curve, const Grid1D& grid, double tol) {
    if (curve.strikes.size() < 3)
        throw DomainError("breeden_litzenberger: need at least 3 strikes");
    if (auto bad = curve.arbitrage_violation(tol))
        throw DomainError("breeden_litzenberger: static arbitrage at strike " +
                          std::to_string(*bad));

    const auto& K = curve.strikes;
    const auto& C = curve.prices;
    const std::size_t n = K.size();

    std::vector<double> slope(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) slope[i] = (C[i + 1] - C[i]) / (K[i + 1] - K[i]);

    // Slope jumps are the atom masses; boundary atoms absorb the tails so
    // the total is exactly 1.
    std::vector<double> mass(n, 0.0);
    mass.front() = 1.0 + slope.front();
    mass.back() = -slope.back();
    for (std::size_t i = 1; i + 1 < n; ++i) mass[i] = slope[i] - slope[i - 1];
    for (double& m : mass) m = std::max(m, 0.0);
    double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    if (total <= 0.0) throw DomainError("breeden_litzenberger: degenerate curve");
    for (double& m : mass) m /= total;

    // Deposit atoms onto the target grid, splitting between bracketing
    // nodes to preserve the mean.
    std::vector<double> w(grid.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (mass[i] == 0.0) continue;
        double x = K[i];
        if (x <= grid.front()) {
            w.front() += mass[i];
        } else if (x >= grid.back()) {
            w.back() += mass[i];
        } else {
            std::size_t c = grid.cell_of(x);
            double theta = (x - grid[c]) / (grid[c + 1] - grid[c]);
            w[c] += mass[i] * (1.0 - theta);
            w[c + 1] += mass[i] * theta;
        }
    }
    double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= sum;
    return GridMeasure(grid, std::move(w));
}

std::vector<double> synthesize_calls(const GridMeasure& m, const std::vector<double>& strikes) {
    std::vector<double> out(strikes.size());
    for (std::size_t i = 0; i < strikes.size(); ++i) out[i] = m.call_price(strikes[i]);
    return out;
}

}  // namespace motcal
