#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "motcal/hamiltonian.hpp"
#include "motcal/hj1d.hpp"
#include "motcal/hj2d.hpp"
#include "motcal/measures.hpp"
#include "motcal/svm.hpp"
#include "motcal/time_grid.hpp"

namespace motcal {

/// Forward flow of dm/dt = 1/2 (b m)_xx in conservative (flux) form: mass
/// and mean are conserved exactly in exact arithmetic, and m stays in
/// convex order along the flow.
struct FlowResult1D {
    Grid1D grid;
    TimeGrid tg;
    std::vector<std::vector<double>> masses;  // one row per time node
    std::vector<std::vector<double>> flux;    // b*m per step (w of the (m, w) pair)
    double cost = 0.0;                        // sum_k dt sum_i L(b) m

    GridMeasure marginal(std::size_t k) const { return GridMeasure(grid, masses[k]); }
    GridMeasure at_T1() const;
    GridMeasure at_T2() const { return GridMeasure(grid, masses.back()); }
};

FlowResult1D evolve_1d(const ControlField1D& b, const GridMeasure& m0, const TimeGrid& tg,
                       const LagrangianSpec& spec);

/// Controlled 2D flow of the volatility model under the tilt alpha:
/// drift in y becomes b + tau2 * alpha. Stores the X-marginal at every
/// time node and the full fields at T1 / T2.
struct FlowResult2D {
    Grid2D grid;
    TimeGrid tg;
    std::vector<std::vector<double>> x_marginals;  // per time node, on grid.x
    std::vector<double> m_T1, m_T2;                // full fields
    double energy = 0.0;                           // 1/2 int int alpha^2 dm dt

    GridMeasure x_marginal(std::size_t k) const { return GridMeasure(grid.x, x_marginals[k]); }
    GridMeasure x_at_T1() const;
    GridMeasure x_at_T2() const { return GridMeasure(grid.x, x_marginals.back()); }
};

FlowResult2D evolve_2d(const SvmSpec& svm, const ControlField2D& alpha,
                       const std::vector<double>& m0, const Grid2D& grid, const TimeGrid& tg);

/// Zero tilt / constant tilt helpers for injected-control tests.
ControlField2D zero_tilt(const Grid2D& grid, const TimeGrid& tg);
ControlField2D constant_tilt(const Grid2D& grid, const TimeGrid& tg, double c);

/// Project a point mass onto the 2D grid (bilinear, mean-preserving).
std::vector<double> dirac_2d(const Grid2D& grid, double x, double y);

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

struct SimulateOptions {
    /// true: dynamics carry the tilt drift and the log-weight is
    /// log dP^alpha/dP0 along the tilted path (entropy = mean log-weight).
    /// false: reference dynamics, log-weight is log dP^alpha/dP0 along the
    /// P0 path (reweighted expectations estimate P^alpha quantities).
    bool tilt_dynamics = true;
    unsigned workers = 0;           // 0 = hardware; results worker-count invariant
    std::size_t max_checkpoints = 33;
};

/// Euler-Maruyama paths of (X, Y); X is stepped in log coordinates so
/// positivity is exact and X is a discrete-time martingale under the
/// reference dynamics. Per-path RNG streams derive from (seed, path index).
struct PathEnsemble {
    std::vector<std::size_t> checkpoint_steps;  // forward node indices, incl. t0/T1/T2
    std::vector<double> checkpoint_times;
    std::size_t n_paths = 0;
    std::vector<double> x_at;       // n_paths x n_checkpoints, row-major
    std::vector<double> y_at;
    std::vector<double> log_weight;
    std::uint64_t seed = 0;
    bool tilted = false;
    std::size_t t1_checkpoint = 0;  // checkpoint index of T1 (t0 when no pre segment)

    double x_of(std::size_t path, std::size_t cp) const {
        return x_at[path * checkpoint_times.size() + cp];
    }
    std::size_t cp_T1() const { return t1_checkpoint; }
    std::size_t cp_T2() const { return checkpoint_times.size() - 1; }

    struct Moment {
        double mean = 0.0;
        double se = 0.0;
    };
    /// Plain (unweighted) moment of X at a checkpoint.
    Moment x_moment(std::size_t cp) const;
    /// Entropy estimate: mean log-weight when tilted, E[w log w] otherwise.
    Moment entropy() const;
    /// E[w] diagnostic (1 within MC error when alpha is a proper tilt).
    Moment mean_weight() const;
    double effective_sample_size() const;
};

PathEnsemble simulate(const SvmSpec& svm, const ControlField2D* alpha, std::size_t n_paths,
                      const TimeGrid& tg, std::uint64_t seed, const SimulateOptions& opt = {});

/// Weighted histogram of the X checkpoint values on the cells of a grid
/// (bin edges at midpoints between nodes), for PDE-vs-MC comparisons.
GridMeasure histogram_x(const PathEnsemble& paths, std::size_t cp, const Grid1D& grid,
                        bool use_weights);

}  // namespace motcal
