#pragma once

#include <vector>

#include "motcal/fokker_planck.hpp"
#include "motcal/hamiltonian.hpp"
#include "motcal/hj1d.hpp"
#include "motcal/measures.hpp"

namespace motcal {

/// A fully specified MOT calibration instance: three marginals on one
/// grid, the cost, and the discretization knobs.
struct MotInstance {
    Grid1D grid;
    std::vector<double> mu0, mu1, mu2;  // weights on grid
    double T0 = 0.0, T1 = 1.0, T2 = 2.0;
    LagrangianSpec lagrangian;
    std::string lagrangian_key = "quadratic";
    double lagrangian_param = 1.0;

    double a_max = 12.0;      // Hamiltonian table on [-a_max, a_max]
    std::size_t n_a = 2001;
    double b_max = 8.0;       // Legendre search box
    std::size_t n_b = 4001;

    GridMeasure measure0() const { return GridMeasure(grid, mu0); }
    GridMeasure measure1() const { return GridMeasure(grid, mu1); }
    GridMeasure measure2() const { return GridMeasure(grid, mu2); }
    bool has_intermediate() const { return T0 <= T1; }
};

/// CFL-respecting time grid for an instance given the tabulated
/// Hamiltonian (largest argmax drives the admissible step).
TimeGrid auto_time_grid(const MotInstance& inst, const Hamiltonian& h, double safety = 0.9);

struct AscendConfig {
    double step = 0.5;
    std::size_t max_iters = 500;
    double tol = 1e-6;          // residual sup-norm target
    double min_step = 1e-7;
    double M = 10.0;            // potential sup-norm bound
    double Lambda = 10.0;       // potential Lipschitz bound
    /// [1/4, 1/2, 1/4] passes applied to the step direction: an SPD
    /// preconditioner that keeps iterate curvature inside the Hamiltonian
    /// table. Raw residuals are still what convergence is measured on.
    std::size_t smoothing_passes = 4;
};

/// The smoothing preconditioner (exposed for the sb module and tests).
void smooth_direction(std::vector<double>& g, std::size_t passes);

struct IterRecord {
    double value = 0.0;
    double res1_sup = 0.0, res2_sup = 0.0;
    double res1_l1 = 0.0, res2_l1 = 0.0;
    double step = 0.0;
};

struct DualState {
    std::vector<double> u1, u2;
    double dual_value = 0.0;
    std::vector<double> residual1, residual2;  // m*_{T1} - mu1, m*_{T2} - mu2
    std::vector<IterRecord> trace;
    std::size_t iterations = 0;
    bool converged = false;
    bool plateau = false;
};

struct DualObjective {
    double value = 0.0;
    HjSolution1D solution;
};

/// Value of the dual functional at fixed potentials:
/// int u(T0) dmu0 - int u2 dmu2 - 1_{[0,T1]}(T0) int u1 dmu1.
DualObjective dual_objective(const std::vector<double>& u1, const std::vector<double>& u2,
                             const MotInstance& inst, const Hamiltonian& h,
                             const TimeGrid& tg);

/// Projected supergradient ascent: the supergradients are the marginal
/// residuals of the forward flow driven by b = -H'(D^2 u / 2); steps
/// backtrack by halving so accepted dual values never decrease.
/// Throws DomainError (with the order violation) when the marginals are
/// not in convex increasing order.
DualState ascend(const MotInstance& inst, const AscendConfig& cfg);

/// Clip to the Lipschitz ball (largest Lambda-Lipschitz minorant, two
/// sweeps), then to [-M, M], then limit downward curvature so
/// D^2 u / 2 >= -a_cap stays inside the Hamiltonian table (the dual is
/// then a supremum over a restricted admissible set: still a lower bound).
void project_potential(const Grid1D& grid, std::vector<double>& u, double M, double Lambda,
                       double a_cap = std::numeric_limits<double>::infinity());

}  // namespace motcal
