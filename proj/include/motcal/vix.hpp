#pragma once

#include <cstdint>
#include <vector>

#include "motcal/hj2d.hpp"
#include "motcal/measures.hpp"
#include "motcal/svm.hpp"

namespace motcal {

/// Convex piecewise-linear function on [0, +inf) given by knots, the
/// value at the first knot and one slope per cell; the last slope
/// extends to +inf. Convexity = nondecreasing slopes, restored by
/// isotonic (pool-adjacent-violators) projection. Lower-boundedness on
/// [0, +inf) requires the final slope to be >= 0.
class ConvexPL {
public:
    ConvexPL(std::vector<double> knots, double value_at_first, std::vector<double> slopes);
    static ConvexPL zero(double v_max);

    double operator()(double v) const;
    double min_value() const;
    double max_slope() const { return slopes_.empty() ? 0.0 : slopes_.back(); }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& slopes() const { return slopes_; }
    double value_at_first() const { return v0_; }

    /// Shift by a constant (used by the dual-value invariance checks).
    ConvexPL shifted(double c) const;

private:
    std::vector<double> knots_;
    double v0_ = 0.0;
    std::vector<double> slopes_;
};

struct VixInstance {
    SvmSpec model;
    Grid1D x_grid;                  // price axis of potentials and SPX marginals
    std::vector<double> mu1, mu2;   // weights on x_grid
    GridMeasure mu3;                // law of the forward-started log contract, support >= 0
    double t0 = 0.0, T1 = 0.5, T2 = 0.5 + 30.0 / 365.0;
    Grid2D wy_grid;                 // log-price x volatility for the PDE solves
    std::vector<double> delta_grid; // symmetric around 0; 0 is always solved
    std::vector<double> v_grid;     // subset of [0, v_max]
    std::size_t steps_pre = 0, steps_post = 0;  // 0 = auto

    GridMeasure target1() const { return GridMeasure(x_grid, mu1); }
    GridMeasure target2() const { return GridMeasure(x_grid, mu2); }

    static std::vector<double> default_delta_grid() { return linspace(-5.0, 5.0, 101); }
    /// [0, 1.05 * v_star] with 201 nodes plus the exact node
    /// v_star = sup sigma_tilde^2 (T2 - T1) / 2 (the proof's blow-up edge).
    static std::vector<double> default_v_grid(const SvmSpec& model, const Grid2D& wy,
                                              double T1, double T2);
};

/// One post-T1 state-constraint solve per delta node (log coordinates),
/// keeping the T1^+ slice. Solves run in parallel; assembly order is
/// deterministic.
struct PostFamily {
    std::vector<double> deltas;                // includes 0
    std::vector<std::vector<double>> t1_slice; // u(T1^+, w, y; delta) per delta
    std::size_t zero_index = 0;
    double continuity_margin = 0.0;  // worst |du| / (C(w) |ddelta|) observed
    std::vector<double> u2_on_w;     // terminal data shared by the family
};

/// u2 lives on the instance's x_grid; empty means u2 = 0.
PostFamily post_t1_family(const VixInstance& inst, const std::vector<double>& u2 = {});

/// Phi(x, y) = inf_v sup_delta { u3(v) - delta(G(x) + v) + u(T1^+; delta) }
/// with G(x) = -log(x), evaluated on the (w, y) grid from the tabulated
/// family (piecewise-linear in delta = max over the delta nodes).
struct PhiTable {
    Grid2D grid;
    std::vector<double> values;
    std::vector<double> v_grid, delta_grid;
    std::vector<double> argmin_v, argmax_delta;
    std::vector<double> lower_bound, upper_bound;  // proof-side envelopes per node
    double bound_slack = 0.0;                      // tolerance used in the check
};

PhiTable compute_phi(const PostFamily& family, const ConvexPL& u3, const VixInstance& inst);

/// Discrete concavity scan of delta -> u(T1^+; delta) per node.
struct ConcavityScan {
    bool concave = true;
    double worst_bulge = 0.0;
};
ConcavityScan delta_concavity_scan(const PostFamily& family, double tol = 1e-8);

/// Value function on [t0, T1] with terminal u1(e^w) + Phi(e^w, y) via the
/// log-coordinate PDE. Requires tau2 constant on the grid box (the PDE
/// characterization needs it); otherwise use pre_t1_value_mc.
HjSolution2D pre_t1_value(const VixInstance& inst, const PhiTable& phi,
                          const std::vector<double>& u1);

struct McPreValue {
    double value = 0.0;   // alpha = 0 rollout: an upper bound, report-only
    double se = 0.0;
    bool upper_bound_only = true;
};
McPreValue pre_t1_value_mc(const VixInstance& inst, const PhiTable& phi,
                           const std::vector<double>& u1, std::size_t n_paths,
                           std::uint64_t seed);

struct VixDualReport {
    double dual_value = 0.0;
    double u_t0 = 0.0;
    PostFamily family;
    PhiTable phi;
    ConcavityScan concavity;
    bool phi_bounds_ok = true;
};

/// Full dual value -int u1 dmu1 - int u2 dmu2 - int u3 dmu3 + u(t0, X0, Y0)
/// for given potentials (t0 < T1 required).
VixDualReport vix_dual_value(const VixInstance& inst, const std::vector<double>& u1,
                             const std::vector<double>& u2, const ConvexPL& u3);

/// VIX_P = 100 sqrt(2 V / (T2 - T1)).
double vix_index(double V, double T1, double T2);

struct PutBoundRow {
    double strike = 0.0;
    double mc_price = 0.0;
    double mc_se = 0.0;
    double bound = 0.0;
    bool pass = false;       // within 3 MC standard errors
    bool hard_violation = false;
};

/// Put-price bound E[(K - VIX)_+] <= int (K - 100 sqrt(2x/(T2-T1)))_+ dmu3
/// checked per strike against sampled V values under a candidate measure.
std::vector<PutBoundRow> vix_put_bound(const GridMeasure& mu3,
                                       const std::vector<double>& v_samples, double T1,
                                       double T2, const std::vector<double>& strikes);

}  // namespace motcal
