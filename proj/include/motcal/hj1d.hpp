#pragma once

#include <vector>

#include "motcal/hamiltonian.hpp"
#include "motcal/measures.hpp"
#include "motcal/time_grid.hpp"

namespace motcal {

/// Diffusion control b(t, x) >= 0, piecewise constant in time: values[k][i]
/// applies on the k-th forward step.
struct ControlField1D {
    Grid1D grid;
    TimeGrid tg;
    std::vector<std::vector<double>> values;  // total_steps() rows
};

/// Backward solution of -du/dt + H(D^2 u / 2) = delta_{T1} u1, u(T2) = u2,
/// realized as two clean backward solves glued by the jump
/// u(T1^-) = u1 + u(T1^+). Layers are stored at every time node; the node
/// at T1 carries both one-sided values.
struct HjSolution1D {
    Grid1D grid;
    TimeGrid tg;
    /// Layers on [t0, T1], index k at time t0 + k dt_pre; back() is u(T1^-).
    /// Empty when tg has no pre segment.
    std::vector<std::vector<double>> pre;
    /// Layers on [start_post, T2]; front() is u(T1^+) (or u(t0) when no
    /// pre segment), back() is u2.
    std::vector<std::vector<double>> post;
    /// Worst clamp applied when D^2 u / 2 dipped below the table edge
    /// (tolerated within a small band; beyond it the solve throws).
    double table_overshoot = 0.0;

    const std::vector<double>& at_t0() const { return pre.empty() ? post.front() : pre.front(); }
    const std::vector<double>& at_T1_minus() const { return pre.back(); }
    const std::vector<double>& at_T1_plus() const { return post.front(); }
    /// Layer reached after forward step k (k = 0 gives u at t0).
    const std::vector<double>& forward_layer(std::size_t k) const;

    double max_jump_residual(const std::vector<double>& u1) const;
};

/// Second difference of u at node i on a (possibly non-uniform) grid;
/// boundary rows are zero (linear extrapolation of u at the grid ends).
double second_diff(const Grid1D& g, const std::vector<double>& u, std::size_t i);

/// Explicit monotone backward solve. u1 may be empty when the time grid
/// has no pre segment. CFL: dt * b_max <= min_i h_- h_+ over interior
/// nodes, checked against the table's largest argmax; violations throw
/// NumericsError with the admissible step.
HjSolution1D solve_hj_mot(const Hamiltonian& h, const std::vector<double>& u1,
                          const std::vector<double>& u2, const Grid1D& grid,
                          const TimeGrid& tg);

/// b(t_k, x) = -H'(D^2 u(t_{k+1}, x)/2): the forward control consistent
/// with the backward sweep, suitable for evolve_1d.
ControlField1D extract_optimal_diffusion(const HjSolution1D& sol, const Hamiltonian& h);

struct SupersolutionReport {
    bool holds = false;
    double max_violation = 0.0;
    std::size_t step = 0;   // forward step index of the violation
    std::size_t node = 0;
};

/// Checks -d_t u + H(D^2 u/2) <= tol at all interior nodes away from T1
/// (inequality form of the jump-splitting definition).
SupersolutionReport certify_supersolution(const HjSolution1D& sol, const Hamiltonian& h,
                                          double tol = 1e-9);

}  // namespace motcal
