#pragma once

#include <optional>
#include <string>
#include <vector>

#include "motcal/common.hpp"

namespace motcal {

/// Strictly increasing 1D grid of state values (price or log-price).
/// Spacing may be non-uniform.
class Grid1D {
public:
    explicit Grid1D(std::vector<double> nodes);
    static Grid1D uniform(double lo, double hi, std::size_t n);

    const std::vector<double>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    double operator[](std::size_t i) const { return nodes_[i]; }
    double front() const { return nodes_.front(); }
    double back() const { return nodes_.back(); }

    /// Largest i with nodes[i] <= x (clamped to [0, size-2]).
    std::size_t cell_of(double x) const;

    bool operator==(const Grid1D& other) const { return nodes_ == other.nodes_; }

private:
    std::vector<double> nodes_;
};

/// Discrete probability measure carried by the nodes of a Grid1D.
/// Weights are nonnegative and sum to 1 within 1e-12.
class GridMeasure {
public:
    GridMeasure(Grid1D grid, std::vector<double> weights);

    static GridMeasure dirac(const Grid1D& grid, double x);

    const Grid1D& grid() const { return grid_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t size() const { return weights_.size(); }

    double mean() const;
    double second_moment() const;
    double variance() const;

    /// E[(X - K)+], the undiscounted call price induced by the measure.
    double call_price(double strike) const;
    /// E[(K - X)+].
    double put_price(double strike) const;
    /// E[f(X)] for nodal values f (same grid).
    double integrate(const std::vector<double>& nodal_values) const;

private:
    Grid1D grid_;
    std::vector<double> weights_;
};

struct OrderReport {
    bool holds = false;
    double worst_violation = 0.0;  // largest positive violation found
    double where = 0.0;            // strike (or mean tag) at the violation
    std::string detail;
};

/// Convex order mu <=_c nu: call-price inequalities at every strike in the
/// union of both grids, plus mean equality. Tolerance 1e-10 absolute.
OrderReport convex_order(const GridMeasure& mu, const GridMeasure& nu, double tol = 1e-10);

/// Convex-lower order mu <=_{c,l} nu on [0, +inf): call and put test
/// families over the union of grid strikes, no mean equality.
/// Throws DomainError if either support has a negative node.
OrderReport convex_order_lower(const GridMeasure& mu, const GridMeasure& nu, double tol = 1e-10);

/// Wasserstein-2 distance via the 1D quantile coupling (exact for atomic
/// measures).
double wasserstein2(const GridMeasure& mu, const GridMeasure& nu);

/// Call option quotes for one maturity. Strikes strictly increasing.
struct CallCurve {
    double maturity = 0.0;  // years
    std::vector<double> strikes;
    std::vector<double> prices;

    /// Static no-arbitrage checks: prices >= 0, slopes in [-1, 0], convex
    /// in strike, all within tol. Returns the offending strike on failure.
    std::optional<double> arbitrage_violation(double tol = 1e-8) const;
};

/// Second differences of call prices in strike, mass conserved by placing
/// the boundary masses at the first/last strike, each atom then deposited
/// onto the target grid by mean-preserving splitting between the two
/// bracketing nodes.
GridMeasure breeden_litzenberger(const CallCurve& curve, const Grid1D& grid, double tol = 1e-8);

/// Call prices of a measure evaluated at a strike list (test helper and
/// ingestion round-trip partner of breeden_litzenberger).
std::vector<double> synthesize_calls(const GridMeasure& m, const std::vector<double>& strikes);

}  // namespace motcal
