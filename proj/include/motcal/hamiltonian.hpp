#pragma once

#include <functional>
#include <string>
#include <vector>

#include "motcal/common.hpp"

namespace motcal {

/// Cost function L acting on the diffusion coefficient b >= 0, together
/// with its coercivity metadata: L(b) >= C*b^p - C' sampled on a b-grid.
struct LagrangianSpec {
    std::function<double(double)> evaluator;
    double p = 2.0;          // coercivity exponent, p >= 2
    double coercivity_c = 0.0;   // estimated C with L(b) >= C b^p - C'
    double coercivity_shift = 0.0;  // estimated C'
    bool convex_ok = false;  // sampled midpoint convexity certificate

    double operator()(double b) const { return evaluator(b); }

    /// Samples midpoint convexity and the coercivity constants on
    /// [0, b_max]. Throws DomainError if convexity fails beyond 1e-10.
    static LagrangianSpec make(std::function<double(double)> L, double p, double b_max,
                               std::size_t n_samples = 512);

    // Built-in catalog, selected by config key.
    static LagrangianSpec quadratic(double gamma = 1.0);       // b^2 / gamma
    static LagrangianSpec power(double p);                     // b^p / p
    static LagrangianSpec entropic_like();                     // b log b - b + 1
    static LagrangianSpec tabulated(std::vector<double> b, std::vector<double> L);
    static LagrangianSpec from_key(const std::string& key, double param);
};

/// Tabulated Hamiltonian H(a) = sup_{b>=0} { -a b - L(b) } with the
/// maximizing b*(a) recorded per node. Piecewise-linear between nodes.
/// H is convex and nonincreasing; H'(a) = -b*(a) <= 0.
class Hamiltonian {
public:
    Hamiltonian(std::vector<double> a_nodes, std::vector<double> h_values,
                std::vector<double> b_star);

    const std::vector<double>& a_nodes() const { return a_; }
    const std::vector<double>& values() const { return h_; }
    const std::vector<double>& argmax() const { return bstar_; }

    double a_min() const { return a_.front(); }
    double a_max() const { return a_.back(); }
    double b_max() const { return bstar_.front(); }  // b* is nonincreasing in a

    /// H(a) by piecewise-linear interpolation; throws NumericsError out of range.
    double value(double a) const;
    /// -b*(a) via the stored argmax (never numerical differentiation).
    double derivative(double a) const;
    /// b*(a) = -H'(a) >= 0.
    double optimal_b(double a) const;

private:
    std::size_t segment(double a) const;
    std::vector<double> a_, h_, bstar_;
    double uniform_da_ = 0.0;  // > 0 enables O(1) lookup
    bool flat_right_ = false;  // b*(a_max) = 0: H constant past the edge
};

/// Brute-force Legendre transform of L over a b-grid of n_b points on
/// [0, b_max], evaluated at each node of a_grid. Ties in the argmax break
/// toward the smallest b. Throws NumericsError when b_max truncates the
/// supremum (argmax pinned at b_max), suggesting a larger b_max;
/// allow_truncation keeps the truncated table instead (used by the C^1
/// refinement check, where kinks at the truncation edge are the point).
Hamiltonian legendre(const LagrangianSpec& spec, const std::vector<double>& a_grid,
                     double b_max, std::size_t n_b, bool allow_truncation = false);

/// h_prime(a) = -b*(a) <= 0 from the table.
double h_prime(const Hamiltonian& h, double a);

/// Numerical C^1 check for (A2): tabulates H at a base and a refined
/// resolution and tests whether the largest slope jump between adjacent
/// segments drops by at least a factor 2/1.5 under refinement. A kink in
/// H (e.g. from linear L) keeps the jump O(1) and fails.
bool check_a2(const LagrangianSpec& spec, double a_lo, double a_hi, double b_max,
              std::size_t n_a = 501, std::size_t n_b = 2001);

}  // namespace motcal
