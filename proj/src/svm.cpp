#include "motcal/svm.hpp"

#include <algorithm>
#include <cmath>

namespace motcal {

bool SvmSpec::tau2_constant(double lo_x, double hi_x, double lo_y, double hi_y,
                            double tol) const {
    double ref = tau2(lo_x, lo_y);
    for (double x : {lo_x, 0.5 * (lo_x + hi_x), hi_x})
        for (double y : linspace(lo_y, hi_y, 9))
            if (std::abs(tau2(x, y) - ref) > tol) return false;
    return true;
}

SvmSpec make_heston(double kappa, double theta, double xi, double rho, double trunc_lo,
                    double trunc_hi, double x0, double y0) {
    if (!(rho > -1.0 && rho < 1.0)) throw DomainError("make_heston: rho must be in (-1, 1)");
    if (kappa <= 0.0 || theta <= 0.0 || xi <= 0.0)
        throw DomainError("make_heston: kappa, theta, xi must be positive");
    if (!(trunc_lo > 0.0 && trunc_hi > trunc_lo))
        throw DomainError("make_heston: truncation floor must be positive");
    if (x0 <= 0.0) throw DomainError("make_heston: X0 must be positive");

    SvmSpec s;
    s.name = "heston";
    s.trunc_lo = trunc_lo;
    s.trunc_hi = trunc_hi;
    s.x0 = x0;
    s.y0 = y0;
    auto clamp = [trunc_lo, trunc_hi](double y) {
        return std::min(std::max(y, trunc_lo), trunc_hi);
    };
    s.sigma_tilde = [clamp](double y) { return std::sqrt(clamp(y)); };
    s.b = [kappa, theta](double, double y) { return kappa * (theta - y); };
    s.tau1 = [clamp, rho, xi](double, double y) { return rho * xi * std::sqrt(clamp(y)); };
    double c2 = xi * std::sqrt(1.0 - rho * rho);
    s.tau2 = [clamp, c2](double, double y) { return c2 * std::sqrt(clamp(y)); };
    return s;
}

SvmSpec make_sabr(double tau2_const, double trunc_lo, double trunc_hi, double x0, double y0) {
    if (!(trunc_hi > trunc_lo)) throw DomainError("make_sabr: empty truncation window");
    if (x0 <= 0.0) throw DomainError("make_sabr: X0 must be positive");

    SvmSpec s;
    s.name = "sabr";
    s.trunc_lo = trunc_lo;
    s.trunc_hi = trunc_hi;
    s.x0 = x0;
    s.y0 = y0;
    auto clamp = [trunc_lo, trunc_hi](double y) {
        return std::min(std::max(y, trunc_lo), trunc_hi);
    };
    s.sigma_tilde = [clamp](double y) { return std::exp(clamp(y)); };
    s.b = [tau2_const](double, double) { return -0.5 * tau2_const * tau2_const; };
    s.tau1 = [](double, double) { return 0.0; };
    s.tau2 = [tau2_const](double, double) { return tau2_const; };
    return s;
}

namespace {

struct LipEstimate {
    double constant = 0.0;
    bool bounded = true;
};

// Max difference quotient over the sample box at two densities; a growing
// estimate under refinement marks the function as not Lipschitz there.
LipEstimate lip_estimate(const std::function<double(double, double)>& f, double x_lo,
                         double x_hi, double y_lo, double y_hi, std::size_t n) {
    auto run = [&](std::size_t m) {
        auto xs = linspace(x_lo, x_hi, m);
        auto ys = linspace(y_lo, y_hi, m);
        double worst = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j + 1 < m; ++j) {
                double qy = std::abs(f(xs[i], ys[j + 1]) - f(xs[i], ys[j])) / (ys[j + 1] - ys[j]);
                double qx = std::abs(f(xs[j + 1], ys[i]) - f(xs[j], ys[i])) / (xs[j + 1] - xs[j]);
                worst = std::max(worst, std::max(qx, qy));
            }
        return worst;
    };
    LipEstimate e;
    double coarse = run(n);
    double fine = run(2 * n - 1);
    e.constant = fine;
    e.bounded = coarse < 1e-14 || fine <= 1.4 * coarse;
    return e;
}

}  // namespace

AssumptionReport check_assumptions(const SvmSpec& spec, Assumption which, double x_lo,
                                   double x_hi, double y_lo, double y_hi,
                                   std::size_t n_samples) {
    AssumptionReport rep;

    auto f_sigma = [&](double, double y) { return spec.sigma_tilde(y); };
    auto e_sigma = lip_estimate(f_sigma, x_lo, x_hi, y_lo, y_hi, n_samples);
    auto e_b = lip_estimate(spec.b, x_lo, x_hi, y_lo, y_hi, n_samples);
    auto e_t1 = lip_estimate(spec.tau1, x_lo, x_hi, y_lo, y_hi, n_samples);
    auto e_t2 = lip_estimate(spec.tau2, x_lo, x_hi, y_lo, y_hi, n_samples);

    rep.lip_sigma_tilde = e_sigma.constant;
    rep.lip_b = e_b.constant;
    rep.lip_tau1 = e_t1.constant;
    rep.lip_tau2 = e_t2.constant;
    rep.lipschitz_bounded = e_sigma.bounded && e_b.bounded && e_t1.bounded && e_t2.bounded;

    auto xs = linspace(x_lo, x_hi, n_samples);
    auto ys = linspace(y_lo, y_hi, n_samples);
    double lam = 0.0, growth = 0.0, sup_sigma = 0.0;
    const double step = 1e-5 * std::max(1.0, y_hi - y_lo);
    for (double x : xs)
        for (double y : ys) {
            double t2 = spec.tau2(x, y);
            double db = std::abs(spec.b(x, y + step) - spec.b(x, y - step)) / (2 * step) +
                        std::abs(spec.b(x + step, y) - spec.b(x - step, y)) / (2 * step);
            double dt2 = std::abs(spec.tau2(x, y + step) - spec.tau2(x, y - step)) / (2 * step) +
                         std::abs(spec.tau2(x + step, y) - spec.tau2(x - step, y)) / (2 * step);
            lam = std::max(lam, std::abs(t2) > 1e-14
                                    ? (db + dt2) / std::abs(t2)
                                    : (db + dt2 > 1e-12
                                           ? std::numeric_limits<double>::infinity()
                                           : 0.0));
            growth = std::max(growth, (std::abs(spec.tau1(x, y)) + std::abs(t2) +
                                       std::abs(spec.b(x, y))) /
                                          (1.0 + std::abs(y)));
            sup_sigma = std::max(sup_sigma, std::abs(spec.sigma_tilde(y)));
        }
    rep.lambda0 = lam;
    rep.growth_constant = growth;
    rep.sigma_tilde_bound = sup_sigma;

    if (which == Assumption::A3) {
        rep.pass = rep.lipschitz_bounded && std::isfinite(lam) && std::isfinite(growth);
        if (!rep.lipschitz_bounded) rep.detail = "difference quotients blow up under refinement";
        else if (!std::isfinite(lam)) rep.detail = "tau2 vanishes where b or tau2 vary (lambda0 = inf)";
    } else {
        // (A4): sigma_tilde bounded, (x, y) -> b(e^x, y) Lipschitz
        auto b_log = [&](double w, double y) { return spec.b(std::exp(w), y); };
        auto e_blog = lip_estimate(b_log, std::log(std::max(x_lo, 1e-8)), std::log(x_hi),
                                   y_lo, y_hi, n_samples);
        rep.pass = rep.lipschitz_bounded && e_blog.bounded && std::isfinite(sup_sigma);
        if (!e_blog.bounded) rep.detail = "b(e^x, y) not Lipschitz on the sample box";
    }
    return rep;
}

}  // namespace motcal
