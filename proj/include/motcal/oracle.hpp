#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "motcal/hamiltonian.hpp"
#include "motcal/measures.hpp"
#include "motcal/simplex.hpp"
#include "motcal/svm.hpp"

namespace motcal {

// ---------------------------------------------------------------------------
// Discrete-time martingale transport (LP oracle)
// ---------------------------------------------------------------------------

/// Desk-scale exact instance: a small state grid, a few time steps per
/// interval, pinned marginals, and a convex cost table.
struct DiscreteMotInstance {
    std::vector<double> grid;            // <= 15 nodes, increasing
    std::vector<double> mu0, mu2;        // pinned at the ends
    std::vector<double> mu1;             // pinned at T1 when nonempty
    std::size_t steps_pre = 1, steps_post = 1;  // <= 4 each
    double T0 = 0.0, T1 = 1.0, T2 = 2.0;
    LagrangianSpec lagrangian;
};

struct DiscreteMotResult {
    bool feasible = false;
    double value = 0.0;
    /// transitions[t][i*n + j]: mass moving i -> j on step t.
    std::vector<std::vector<double>> transitions;
    std::vector<std::vector<double>> marginals;  // per time index
    double max_reduced_cost_violation = 0.0;     // LP optimality certificate
    std::vector<std::string> infeasibility;      // nonempty when infeasible
    std::size_t lp_iterations = 0;
    std::size_t cut_rounds = 0;
    std::size_t segments = 64;                    // final linearization density
    std::vector<std::size_t> lp_basis;            // debug dump
};

/// Piecewise-linearizes m L(w / (m dt)) by tangent segments on the
/// observed b-range (64 doubling until the value moves < 1e-7) and solves
/// the resulting LP with the dense simplex. Violated segments are added
/// lazily; the fixed point is the full segment LP optimum.
DiscreteMotResult solve_discrete_mot(const DiscreteMotInstance& inst);

// ---------------------------------------------------------------------------
// Path-space entropy minimization (exponential-family oracle)
// ---------------------------------------------------------------------------

struct TreeNode {
    double x = 0.0, y = 0.0;
    std::size_t parent = SIZE_MAX;
    std::vector<std::size_t> children;
    std::vector<double> child_prob;  // reference transition probabilities
    std::size_t depth = 0;
};

/// Rooted tree of (X, Y) states with reference path probabilities. The
/// reference X-process is a martingale by construction.
struct PathTree {
    std::vector<TreeNode> nodes;
    std::size_t depth_T1 = 0;   // T1 layer (0 disables the T1 marginal block)
    std::size_t depth_total = 1;
    double dt = 1.0;

    std::size_t root() const { return 0; }
    std::vector<std::size_t> leaves() const;
    /// Reference probability of the path ending at a leaf.
    double p0_of_leaf(std::size_t leaf) const;
    /// Ancestor of a leaf at the given depth.
    std::size_t ancestor_at(std::size_t leaf, std::size_t depth) const;
    void validate() const;  // probabilities, martingale property

    /// Trinomial Euler discretization: X-shocks {+s, 0, -s} with equal
    /// probabilities (s = sigma sqrt(3 dt / 2)), Y-shocks split so both
    /// volatility loadings are matched in variance and X stays an exact
    /// martingale.
    static PathTree trinomial(const SvmSpec& svm, std::size_t depth_T1,
                              std::size_t depth_total, double dt);
};

/// Law targets given on exact attained values.
struct ValueLaw {
    std::vector<double> values;
    std::vector<double> probs;
};

struct DiscreteSbResult {
    bool feasible = false;
    double value = 0.0;                 // relative entropy of the optimizer
    double dual_value = 0.0;            // exponential-family dual at the multipliers
    double duality_gap = 0.0;
    std::vector<double> path_probs;     // per leaf
    std::vector<double> v_at_t1_nodes;  // conditional log-contract per T1 node
    bool vix_fixed_point_converged = true;
    std::size_t fixed_point_iters = 0;
    double kkt_residual = 0.0;
    std::vector<std::string> infeasibility;
};

/// Minimize sum p log(p / p0) over path probabilities subject to marginal
/// pins at T1/T2, the node-wise martingale constraints, and (optionally)
/// the convex-lower-order cuts against mu3 with the conditional V values
/// recomputed in an outer fixed-point loop.
DiscreteSbResult solve_discrete_sb(const PathTree& tree, const ValueLaw& mu1,
                                   const ValueLaw& mu2,
                                   const std::optional<GridMeasure>& vix_mu3 = std::nullopt);

struct AttainmentReport {
    bool martingale_ok = false;
    bool marginals_ok = false;
    bool vix_ok = true;
    double max_martingale_residual = 0.0;
    double max_marginal_residual = 0.0;
    double max_vix_residual = 0.0;
};

/// Direct verification of the solved measure: martingale residuals,
/// marginal residuals and (when mu3 given) the convex-lower-order
/// residuals, all against 1e-8.
AttainmentReport check_attainment(const DiscreteSbResult& result, const PathTree& tree,
                                  const ValueLaw& mu1, const ValueLaw& mu2,
                                  const std::optional<GridMeasure>& vix_mu3 = std::nullopt,
                                  double tol = 1e-8);

}  // namespace motcal
