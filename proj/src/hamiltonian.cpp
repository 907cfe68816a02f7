#include "motcal/hamiltonian.hpp"

#include <algorithm>
#include <cmath>

namespace motcal {

// ---------------------------------------------------------------------------
// LagrangianSpec
// ---------------------------------------------------------------------------

LagrangianSpec LagrangianSpec::make(std::function<double(double)> L, double p, double b_max,
                                    std::size_t n_samples) {
    if (p < 2.0) throw DomainError("LagrangianSpec: coercivity exponent must be >= 2");
    LagrangianSpec spec;
    spec.evaluator = std::move(L);
    spec.p = p;

    auto bs = linspace(0.0, b_max, n_samples);
    spec.convex_ok = true;
    for (std::size_t i = 0; i + 2 < bs.size(); ++i) {
        double mid = 0.5 * (spec.evaluator(bs[i]) + spec.evaluator(bs[i + 2]));
        if (spec.evaluator(bs[i + 1]) > mid + 1e-10) {
            spec.convex_ok = false;
            throw DomainError("LagrangianSpec: midpoint convexity fails near b = " +
                              std::to_string(bs[i + 1]));
        }
    }
    // With C fixed at 1/p, C' is whatever the sample forces; both are
    // reported, not enforced (A1 constants are estimated, never proven).
    spec.coercivity_c = 1.0 / p;
    double shift = 0.0;
    for (double b : bs) shift = std::max(shift, spec.coercivity_c * std::pow(b, p) - spec.evaluator(b));
    spec.coercivity_shift = shift;
    return spec;
}

LagrangianSpec LagrangianSpec::quadratic(double gamma) {
    if (gamma <= 0.0) throw DomainError("quadratic Lagrangian: gamma must be positive");
    return make([gamma](double b) { return b * b / gamma; }, 2.0, 8.0);
}

LagrangianSpec LagrangianSpec::power(double p) {
    if (p < 2.0) throw DomainError("power Lagrangian: p must be >= 2");
    return make([p](double b) { return std::pow(b, p) / p; }, p, 8.0);
}

LagrangianSpec LagrangianSpec::entropic_like() {
    // b log b - b + 1, extended by its limit 1 at b = 0; minimum 0 at b = 1.
    auto L = [](double b) { return b <= 0.0 ? 1.0 : b * std::log(b) - b + 1.0; };
    return make(L, 2.0, 8.0);
}

LagrangianSpec LagrangianSpec::tabulated(std::vector<double> b, std::vector<double> L) {
    if (b.size() != L.size() || b.size() < 3)
        throw DomainError("tabulated Lagrangian: need >= 3 (b, L) rows");
    for (std::size_t i = 1; i < b.size(); ++i)
        if (b[i] <= b[i - 1]) throw DomainError("tabulated Lagrangian: b column must increase");
    auto eval = [b = std::move(b), L = std::move(L)](double x) {
        if (x <= b.front()) return L.front();
        if (x >= b.back()) {
            // linear continuation with the last slope
            double s = (L[L.size() - 1] - L[L.size() - 2]) / (b[b.size() - 1] - b[b.size() - 2]);
            return L.back() + s * (x - b.back());
        }
        auto it = std::upper_bound(b.begin(), b.end(), x);
        std::size_t i = static_cast<std::size_t>(it - b.begin()) - 1;
        double t = (x - b[i]) / (b[i + 1] - b[i]);
        return (1.0 - t) * L[i] + t * L[i + 1];
    };
    return make(eval, 2.0, 8.0);
}

LagrangianSpec LagrangianSpec::from_key(const std::string& key, double param) {
    if (key == "quadratic") return quadratic(param > 0.0 ? param : 1.0);
    if (key == "power") return power(param >= 2.0 ? param : 2.0);
    if (key == "entropic_like") return entropic_like();
    throw DomainError("unknown Lagrangian key: " + key);
}

// ---------------------------------------------------------------------------
// Hamiltonian table
// ---------------------------------------------------------------------------

Hamiltonian::Hamiltonian(std::vector<double> a_nodes, std::vector<double> h_values,
                         std::vector<double> b_star)
    : a_(std::move(a_nodes)), h_(std::move(h_values)), bstar_(std::move(b_star)) {
    if (a_.size() < 3 || a_.size() != h_.size() || a_.size() != bstar_.size())
        throw DomainError("Hamiltonian: inconsistent table");
    double da = a_[1] - a_[0];
    uniform_da_ = da;
    for (std::size_t i = 1; i < a_.size(); ++i) {
        if (a_[i] <= a_[i - 1]) throw DomainError("Hamiltonian: a-grid must increase");
        if (h_[i] > h_[i - 1] + 1e-12)
            throw NumericsError("Hamiltonian: table not nonincreasing");
        if (std::abs((a_[i] - a_[i - 1]) - da) > 1e-9 * std::max(1.0, std::abs(da)))
            uniform_da_ = 0.0;  // non-uniform: fall back to binary search
    }
    for (double b : bstar_)
        if (b < 0.0) throw NumericsError("Hamiltonian: negative argmax");
    flat_right_ = bstar_.back() <= 1e-12;
}

std::size_t Hamiltonian::segment(double a) const {
    if (a < a_.front() || (a > a_.back() && !flat_right_))
        throw NumericsError("Hamiltonian: a = " + std::to_string(a) +
                            " outside table range [" + std::to_string(a_.front()) + ", " +
                            std::to_string(a_.back()) + "]");
    if (a >= a_.back()) return a_.size() - 2;
    if (uniform_da_ > 0.0) {
        double t = (a - a_.front()) / uniform_da_;
        if (t <= 0.0) return 0;
        return std::min(static_cast<std::size_t>(t), a_.size() - 2);
    }
    auto it = std::upper_bound(a_.begin(), a_.end(), a);
    if (it == a_.begin()) return 0;
    return std::min<std::size_t>(static_cast<std::size_t>(it - a_.begin()) - 1, a_.size() - 2);
}

double Hamiltonian::value(double a) const {
    // past the right edge the maximizer is already 0 and H is constant
    if (a >= a_.back()) return h_.back();
    std::size_t i = segment(a);
    double t = (a - a_[i]) / (a_[i + 1] - a_[i]);
    return (1.0 - t) * h_[i] + t * h_[i + 1];
}

double Hamiltonian::derivative(double a) const { return -optimal_b(a); }

double Hamiltonian::optimal_b(double a) const {
    if (a >= a_.back()) return bstar_.back();
    std::size_t i = segment(a);
    double t = (a - a_[i]) / (a_[i + 1] - a_[i]);
    return (1.0 - t) * bstar_[i] + t * bstar_[i + 1];
}

// ---------------------------------------------------------------------------
// Legendre transform
// ---------------------------------------------------------------------------

Hamiltonian legendre(const LagrangianSpec& spec, const std::vector<double>& a_grid,
                     double b_max, std::size_t n_b, bool allow_truncation) {
    if (n_b < 3) throw DomainError("legendre: n_b too small");
    if (b_max <= 0.0) throw DomainError("legendre: b_max must be positive");

    auto bs = linspace(0.0, b_max, n_b);
    std::vector<double> Lb(n_b);
    for (std::size_t j = 0; j < n_b; ++j) Lb[j] = spec(bs[j]);

    std::vector<double> h(a_grid.size()), bstar(a_grid.size());
    for (std::size_t i = 0; i < a_grid.size(); ++i) {
        double a = a_grid[i];
        double best = -a * bs[0] - Lb[0];
        std::size_t arg = 0;
        for (std::size_t j = 1; j < n_b; ++j) {
            double v = -a * bs[j] - Lb[j];
            if (v > best) {  // strict: ties keep the smallest b
                best = v;
                arg = j;
            }
        }
        if (arg == n_b - 1 && a < 0.0 && !allow_truncation)
            throw NumericsError("legendre: supremum truncated at b_max for a = " +
                                std::to_string(a) + "; retry with b_max >= " +
                                std::to_string(2.0 * b_max));
        h[i] = best;
        bstar[i] = bs[arg];
    }
    return Hamiltonian(std::vector<double>(a_grid), std::move(h), std::move(bstar));
}

double h_prime(const Hamiltonian& h, double a) { return h.derivative(a); }

bool check_a2(const LagrangianSpec& spec, double a_lo, double a_hi, double b_max,
              std::size_t n_a, std::size_t n_b) {
    auto max_slope_jump = [&](std::size_t na, std::size_t nb) {
        Hamiltonian h = legendre(spec, linspace(a_lo, a_hi, na), b_max, nb, true);
        const auto& a = h.a_nodes();
        const auto& v = h.values();
        double worst = 0.0;
        for (std::size_t i = 1; i + 1 < a.size(); ++i) {
            double sl = (v[i] - v[i - 1]) / (a[i] - a[i - 1]);
            double sr = (v[i + 1] - v[i]) / (a[i + 1] - a[i]);
            worst = std::max(worst, std::abs(sr - sl));
        }
        return worst;
    };
    double coarse = max_slope_jump(n_a, n_b);
    double fine = max_slope_jump(2 * n_a - 1, 2 * n_b - 1);
    // C^1 Hamiltonians halve the jump under refinement; allow slack 1.5.
    if (coarse < 1e-12) return true;  // flat table
    return fine <= coarse / 2.0 * 1.5;
}

}  // namespace motcal
