#pragma once

#include <functional>
#include <string>
#include <vector>

#include "motcal/common.hpp"

namespace motcal {

/// Coefficient functions of the stochastic volatility model
///   dX = sigma(X, Y) dW,              sigma(x, y) = x * sigma_tilde(y)
///   dY = b(X, Y) dt + tau1(X, Y) dW + tau2(X, Y) dW_perp
/// together with the truncation window applied to the y argument of the
/// volatility loadings and the deterministic initial state.
struct SvmSpec {
    std::string name;
    std::function<double(double)> sigma_tilde;           // of (truncated) y
    std::function<double(double, double)> b;             // (x, y)
    std::function<double(double, double)> tau1;
    std::function<double(double, double)> tau2;
    double trunc_lo = 0.0;
    double trunc_hi = 0.0;
    double x0 = 1.0;  // X_{t0} > 0
    double y0 = 0.0;

    double clamp_y(double y) const { return std::min(std::max(y, trunc_lo), trunc_hi); }
    double sigma(double x, double y) const { return x * sigma_tilde(y); }
    bool tau2_constant(double lo_x, double hi_x, double lo_y, double hi_y,
                       double tol = 1e-12) const;
};

/// Heston: sigma_tilde = sqrt(Id(y)), b = kappa (theta - y),
/// tau1 = rho xi sqrt(Id(y)), tau2 = xi sqrt(1 - rho^2) sqrt(Id(y)),
/// with Id clamped to [trunc_lo, trunc_hi], trunc_lo > 0.
SvmSpec make_heston(double kappa, double theta, double xi, double rho,
                    double trunc_lo, double trunc_hi, double x0 = 1.0, double y0 = 0.04);

/// SABR: sigma_tilde = exp(Id(y)) truncated, tau1 = 0, tau2 constant,
/// b = -tau2^2 / 2. A zero tau2 degenerates the (A3) ratio bound and is
/// reported (lambda0 = inf), not rejected.
SvmSpec make_sabr(double tau2_const, double trunc_lo, double trunc_hi, double x0 = 1.0,
                  double y0 = 0.0);

enum class Assumption { A3, A4 };

struct AssumptionReport {
    bool pass = false;
    double lip_sigma_tilde = 0.0;
    double lip_b = 0.0;
    double lip_tau1 = 0.0;
    double lip_tau2 = 0.0;
    double lambda0 = 0.0;           // max (|Db| + |Dtau2|) / |tau2|
    double growth_constant = 0.0;   // C in |tau1|+|tau2|+|b| <= C (1 + |y|)
    double sigma_tilde_bound = 0.0; // (A4) only
    bool lipschitz_bounded = false; // difference quotients stable under refinement
    std::string detail;
};

/// Sampled Lipschitz/growth estimates over [x_lo, x_hi] x [y_lo, y_hi].
/// Difference quotients are computed at two sample densities; a ratio
/// above 1.4 between refinements marks the constant as unbounded (e.g.
/// sqrt(y) near 0 for the untruncated Heston).
AssumptionReport check_assumptions(const SvmSpec& spec, Assumption which, double x_lo,
                                   double x_hi, double y_lo, double y_hi,
                                   std::size_t n_samples = 64);

}  // namespace motcal
