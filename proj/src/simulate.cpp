#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "motcal/fokker_planck.hpp"

namespace motcal {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double interp_field(const ControlField2D& f, std::size_t step, double x, double y) {
    const Grid2D& g = f.grid;
    double cx = std::clamp(x, g.x.front(), g.x.back());
    double cy = std::clamp(y, g.y.front(), g.y.back());
    return HjSolution2D::interp(g, f.values[step], cx, cy);
}

}  // namespace

PathEnsemble::Moment PathEnsemble::x_moment(std::size_t cp) const {
    Moment m;
    const std::size_t ncp = checkpoint_times.size();
    double s = 0.0, s2 = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        double v = x_at[p * ncp + cp];
        s += v;
        s2 += v * v;
    }
    m.mean = s / static_cast<double>(n_paths);
    double var = std::max(s2 / static_cast<double>(n_paths) - m.mean * m.mean, 0.0);
    m.se = std::sqrt(var / static_cast<double>(n_paths));
    return m;
}

PathEnsemble::Moment PathEnsemble::entropy() const {
    Moment m;
    double s = 0.0, s2 = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        double v = tilted ? log_weight[p] : std::exp(log_weight[p]) * log_weight[p];
        s += v;
        s2 += v * v;
    }
    m.mean = s / static_cast<double>(n_paths);
    double var = std::max(s2 / static_cast<double>(n_paths) - m.mean * m.mean, 0.0);
    m.se = std::sqrt(var / static_cast<double>(n_paths));
    return m;
}

PathEnsemble::Moment PathEnsemble::mean_weight() const {
    Moment m;
    double s = 0.0, s2 = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        double v = std::exp(log_weight[p]);
        s += v;
        s2 += v * v;
    }
    m.mean = s / static_cast<double>(n_paths);
    double var = std::max(s2 / static_cast<double>(n_paths) - m.mean * m.mean, 0.0);
    m.se = std::sqrt(var / static_cast<double>(n_paths));
    return m;
}

double PathEnsemble::effective_sample_size() const {
    double s = 0.0, s2 = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        double w = std::exp(log_weight[p]);
        s += w;
        s2 += w * w;
    }
    return s2 > 0.0 ? s * s / s2 : 0.0;
}

PathEnsemble simulate(const SvmSpec& svm, const ControlField2D* alpha, std::size_t n_paths,
                      const TimeGrid& tg, std::uint64_t seed, const SimulateOptions& opt) {
    if (n_paths < 1) throw DomainError("simulate: need at least one path");
    if (alpha && alpha->values.size() != tg.total_steps())
        throw DomainError("simulate: tilt field does not match the time grid");

    const std::size_t n_steps = tg.total_steps();
    auto steps = tg.step_sizes();

    PathEnsemble out;
    out.seed = seed;
    out.n_paths = n_paths;
    out.tilted = opt.tilt_dynamics;

    // checkpoints: t0, T1, T2 plus an even spread
    std::size_t t1_node = tg.has_pre() ? tg.steps_pre() : 0;
    std::vector<std::size_t> cps{0, t1_node, n_steps};
    std::size_t extra = opt.max_checkpoints > 3 ? opt.max_checkpoints - 3 : 0;
    for (std::size_t e = 1; e <= extra; ++e)
        cps.push_back(e * n_steps / (extra + 1));
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
    out.checkpoint_steps = cps;
    for (std::size_t c : cps) out.checkpoint_times.push_back(tg.node(c));
    out.t1_checkpoint = static_cast<std::size_t>(
        std::lower_bound(cps.begin(), cps.end(), t1_node) - cps.begin());

    const std::size_t ncp = cps.size();
    out.x_at.assign(n_paths * ncp, 0.0);
    out.y_at.assign(n_paths * ncp, 0.0);
    out.log_weight.assign(n_paths, 0.0);

    parallel_for(n_paths, [&](std::size_t p) {
        std::mt19937_64 rng(splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * (p + 1))));
        std::normal_distribution<double> normal(0.0, 1.0);

        double logx = std::log(svm.x0);
        double y = svm.y0;
        double logw = 0.0;
        std::size_t next_cp = 0;

        auto record = [&](std::size_t node) {
            while (next_cp < ncp && cps[next_cp] == node) {
                out.x_at[p * ncp + next_cp] = std::exp(logx);
                out.y_at[p * ncp + next_cp] = y;
                ++next_cp;
            }
        };
        record(0);

        for (std::size_t k = 0; k < n_steps; ++k) {
            double dt = steps[k];
            double sdt = std::sqrt(dt);
            double z1 = normal(rng);
            double z2 = normal(rng);
            double x = std::exp(logx);
            double st = svm.sigma_tilde(y);
            double t1c = svm.tau1(x, y);
            double t2c = svm.tau2(x, y);
            double a = alpha ? interp_field(*alpha, k, x, y) : 0.0;

            // X in log coordinates: exact positivity, exact martingale
            // increments under the reference measure
            logx += -0.5 * st * st * dt + st * sdt * z1;
            double drift = svm.b(x, y) + (opt.tilt_dynamics ? t2c * a : 0.0);
            y += drift * dt + t1c * sdt * z1 + t2c * sdt * z2;

            if (opt.tilt_dynamics)
                logw += a * sdt * z2 + 0.5 * a * a * dt;   // log dP^a/dP0 along P^a paths
            else
                logw += a * sdt * z2 - 0.5 * a * a * dt;   // log dP^a/dP0 along P0 paths

            record(k + 1);
        }
        if (!std::isfinite(logw)) logw = -std::numeric_limits<double>::infinity();
        out.log_weight[p] = logw;
    }, opt.workers);

    return out;
}

}  // namespace motcal
