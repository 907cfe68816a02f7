#pragma once

#include <functional>
#include <vector>

#include "motcal/measures.hpp"
#include "motcal/svm.hpp"
#include "motcal/time_grid.hpp"

namespace motcal {

/// Rectangular grid with uniform spacing per axis (the monotone cross
/// stencil requires it).
struct Grid2D {
    Grid1D x;  // price axis, or w = log(price) for the log-coordinate solves
    Grid1D y;

    Grid2D(Grid1D gx, Grid1D gy);
    std::size_t nx() const { return x.size(); }
    std::size_t ny() const { return y.size(); }
    std::size_t size() const { return nx() * ny(); }
    std::size_t idx(std::size_t i, std::size_t j) const { return i * ny() + j; }
    double hx = 0.0, hy = 0.0;
};

/// Node-wise coefficients of the generator
///   L u = a11 u_xx + a22 u_yy + a12 u_xy + drift_x u_x + drift_y u_y
/// plus the tau2 field entering the quadratic (u_y)^2 term and the
/// extracted control. a11, a22 >= 0 and the pair (a11, a22, a12) is
/// elliptic node-wise.
struct Coeffs2D {
    std::vector<double> a11, a22, a12, drift_x, drift_y, tau2;
};

/// Coefficients of the (x, y) generator of the volatility model:
/// a11 = sigma^2/2, a22 = (tau1^2 + tau2^2)/2, a12 = sigma tau1,
/// drift_y = b.
Coeffs2D svm_coeffs_xy(const SvmSpec& svm, const Grid2D& g);

/// Coefficients of the log-price (w, y) generator: a11 = sigma_tilde^2/2,
/// drift_x = -sigma_tilde^2/2, a12 = sigma_tilde tau1, rest as above,
/// everything evaluated at (e^w, y).
Coeffs2D svm_coeffs_wy(const SvmSpec& svm, const Grid2D& g);

/// Backward solution of
///   -u_t - L u + (1/2) tau2^2 (u_y)^2 = delta_{T1}(t) u1(x),  u(T2) = u2(x),
/// by an explicit monotone scheme (Godunov upwinding on u_y in the
/// quadratic term). Layer storage mirrors HjSolution1D.
struct HjSolution2D {
    Grid2D grid;
    TimeGrid tg;
    std::vector<std::vector<double>> pre;   // [t0, T1]; back() is u(T1^-)
    std::vector<std::vector<double>> post;  // [start_post, T2]

    const std::vector<double>& at_t0() const { return pre.empty() ? post.front() : pre.front(); }
    const std::vector<double>& forward_layer(std::size_t k) const;
    double max_jump_residual(const std::vector<double>& u1_field) const;

    /// Bilinear interpolation of a stored layer.
    static double interp(const Grid2D& g, const std::vector<double>& layer, double x, double y);
};

struct Hj2DOptions {
    double cfl_safety = 0.9;
    /// Cap on layers * nodes (doubles); exceeded => NumericsError.
    std::size_t storage_cap = std::size_t(1) << 28;
};

/// u1 is a field of x alone, passed node-wise on the x-axis (empty when
/// the time grid has no pre segment); u2 likewise. Terminal and jump data
/// constant in y by construction.
HjSolution2D solve_hj_sb(const SvmSpec& svm, const std::vector<double>& u1_x,
                         const std::vector<double>& u2_x, const Grid2D& grid,
                         const TimeGrid& tg, const Hj2DOptions& opt = {});

/// Same scheme on arbitrary coefficients and a full terminal field
/// (used by the log-coordinate VIX solves, where the terminal data
/// u2(e^w) - delta w depends on w).
HjSolution2D solve_hj_generic(const Coeffs2D& coeffs, const std::vector<double>& u1_field,
                              const std::vector<double>& u2_field, const Grid2D& grid,
                              const TimeGrid& tg, const Hj2DOptions& opt = {});

struct VixPostSolution {
    HjSolution2D sol;   // on the (w, y) grid, [T1, T2] only
    double delta = 0.0;
    double growth_constant = 0.0;  // C with |v| <= C (1 + |w|) verified on the grid
};

/// State-constraint problem after the x = e^w change of variables:
/// terminal data u2(e^w) - delta w, generator svm_coeffs_wy. Checks the
/// logarithmic growth bound; domain adequacy is the caller's
/// domain-doubling test (see vix module).
VixPostSolution solve_hj_vix_post(const SvmSpec& svm, const std::vector<double>& u2_x_of_ew,
                                  double delta, const Grid2D& wy_grid, const TimeGrid& tg_post,
                                  const Hj2DOptions& opt = {});

/// alpha(t_k, x, y) = -tau2 * (upwind d_y u from the layer the backward
/// sweep stepped from), branch-consistent with the Godunov flux.
struct ControlField2D {
    Grid2D grid;
    TimeGrid tg;
    std::vector<std::vector<double>> values;
};

ControlField2D extract_tilt(const HjSolution2D& sol, const Coeffs2D& coeffs);

/// Godunov gradient selection: the one-sided difference whose square
/// realizes max over the convex flux, 0 on ties.
double godunov_dy(const Grid2D& g, const std::vector<double>& u, std::size_t i, std::size_t j);

}  // namespace motcal
