#pragma once

#include <cstdint>
#include <vector>

#include "motcal/fokker_planck.hpp"
#include "motcal/hj2d.hpp"
#include "motcal/measures.hpp"
#include "motcal/svm.hpp"

namespace motcal {

struct SbInstance {
    SvmSpec model;
    Grid2D grid;                 // price x volatility
    std::vector<double> mu1, mu2;  // X-marginal targets on grid.x
    double t0 = 0.0, T1 = 0.5, T2 = 1.0;
    std::size_t steps_pre = 0, steps_post = 0;  // 0 = auto (CFL)

    GridMeasure target1() const { return GridMeasure(grid.x, mu1); }
    GridMeasure target2() const { return GridMeasure(grid.x, mu2); }
    bool has_intermediate() const { return t0 <= T1; }

    TimeGrid time_grid() const;
};

struct SbAscendConfig {
    double step = 2.0;
    std::size_t max_iters = 200;
    double tol = 1e-6;
    double min_step = 1e-7;
    double M = 10.0;
    double Lambda = 10.0;
    double mean_gate_tol = 1e-8;
};

struct SbIterRecord {
    double value = 0.0;
    double res1_sup = 0.0, res2_sup = 0.0;
    double res1_l1 = 0.0, res2_l1 = 0.0;
    double entropy = 0.0;
    double step = 0.0;
};

struct SbDualState {
    std::vector<double> u1, u2;   // grid.x potentials
    double dual_value = 0.0;
    std::vector<double> residual1, residual2;
    double entropy = 0.0;         // 1/2 int int alpha^2 dm dt of the tilted flow
    std::vector<SbIterRecord> trace;
    std::size_t iterations = 0;
    bool converged = false;
    bool plateau = false;
};

struct SbObjective {
    double value = 0.0;
    HjSolution2D solution;
};

/// -1_{[0,T1]}(t0) int u1 dmu1 - int u2 dmu2 + u(t0, X0, Y0), the value
/// read off the solver grid by bilinear interpolation.
SbObjective sb_dual_objective(const std::vector<double>& u1, const std::vector<double>& u2,
                              const SbInstance& inst);

/// Supergradient ascent on (u1, u2); gradients are the X-marginal
/// residuals of the flow tilted by alpha = -tau2 d_y u. A plateau with
/// nonzero residuals is reported (admissibility may fail), not an error.
SbDualState sb_ascend(const SbInstance& inst, const SbAscendConfig& cfg);

struct DensityReport {
    double mean_weight = 0.0, mean_weight_se = 0.0;     // E[dP*/dP0] under P0
    double mc_entropy = 0.0, mc_entropy_se = 0.0;       // E[w log w]
    double pde_entropy = 0.0;
    double portfolio_mean = 0.0;                        // identity residual
    double portfolio_rms = 0.0;
    bool weights_finite = true;
    std::size_t n_paths = 0;
};

/// Monte Carlo certificate of the optimizer density: paths under the
/// reference dynamics, weights exp(int alpha dW_perp - 1/2 int alpha^2 dt)
/// along them, and the hedging decomposition
/// log w = u(t0) - u1(X_T1) - u2(X_T2) - int Delta dW.
DensityReport optimal_density_report(const HjSolution2D& sol, const std::vector<double>& u1,
                                     const std::vector<double>& u2, const SbInstance& inst,
                                     std::size_t n_paths, std::uint64_t seed);

}  // namespace motcal
