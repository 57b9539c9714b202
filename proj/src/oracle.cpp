// SPDX-License-Identifier: Apache-2.0
#include "psmlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace psm {

PosteriorParams gaussian_posterior(const Gaussian1D& g, double alpha,
                                   double sigma_t) {
    g.validate();
    if (!(sigma_t > 0.0))
        throw std::domain_error("gaussian_posterior: sigma_t must be positive");
    double st2 = g.std * g.std;
    double denom = alpha * alpha * st2 + sigma_t * sigma_t;
    PosteriorParams post;
    post.mean_coeff = alpha * st2 / denom;
    post.mean_offset = g.mean * sigma_t * sigma_t / denom;
    post.variance = sigma_t * sigma_t * st2 / denom;
    return post;
}

McCheck psm_label_mc_check(const Gaussian1D& g, const NoiseSchedule& schedule,
                           double t, double x_t, long n_draws, std::uint64_t seed) {
    if (n_draws < 10000)
        throw ConfigError("psm_label_mc_check: need at least 1e4 draws");
    auto [alpha, sigma] = schedule.coeffs(t);
    PosteriorParams post = gaussian_posterior(g, alpha, sigma);
    double mean = post.mean_coeff * x_t + post.mean_offset;
    double sd = std::sqrt(post.variance);

    std::mt19937_64 rng = make_rng(seed, 0x6f7261636cull);
    std::normal_distribution<double> normal(0.0, 1.0);
    long double acc = 0.0L;
    double inv_st2 = 1.0 / (g.std * g.std);
    for (long i = 0; i < n_draws; ++i) {
        double x0 = mean + sd * normal(rng);
        acc += -(x0 - g.mean) * inv_st2; // force at kT = 1
    }
    McCheck out;
    out.mc_estimate = static_cast<double>(acc / n_draws) / alpha;
    out.analytic = -(x_t - alpha * g.mean) /
                   (alpha * alpha * g.std * g.std + sigma * sigma);
    out.abs_error = std::abs(out.mc_estimate - out.analytic);
    return out;
}

TargetVariance target_variance(const Gaussian1D& g, double alpha, double sigma_t,
                               int dim) {
    g.validate();
    if (!(sigma_t > 0.0))
        throw std::domain_error("target_variance: sigma_t must be positive");
    if (dim < 1) throw ConfigError("target_variance: dim must be >= 1");
    double st = g.std;
    double denom = alpha * alpha * st * st + sigma_t * sigma_t;
    TargetVariance out;
    out.dsm_var = dim * alpha * alpha * (st / sigma_t) * (st / sigma_t) / denom;
    out.psm_var = (dim / (alpha * alpha)) * (sigma_t / st) * (sigma_t / st) / denom;
    return out;
}

namespace {

// Composite Simpson weights for n+1 nodes (n even), excluding the h/3 factor.
double simpson_weight(int i, int n) {
    if (i == 0 || i == n) return 1.0;
    return (i % 2 == 1) ? 4.0 : 2.0;
}

Vec score_once_1d(const PotentialSystem& system, double alpha, double sigma,
                  double x_t, const QuadratureGrid& grid, int n) {
    double lo = grid.box_lo, hi = grid.box_hi;
    double h = (hi - lo) / n;
    double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    double kT = system.kT();

    // stabilize: shift log weights by their max before exponentiating
    double max_log = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(static_cast<size_t>(n) + 1,
                             -std::numeric_limits<double>::infinity());
    for (int i = 0; i <= n; ++i) {
        double x0 = lo + i * h;
        Vec pt{x0};
        if (!system.in_domain(pt)) continue;
        double d = x_t - alpha * x0;
        logs[i] = -system.energy(pt) / kT - d * d * inv2s2;
        max_log = std::max(max_log, logs[i]);
    }
    if (!std::isfinite(max_log))
        throw NumericError("marginal score quadrature: density vanished on grid");

    long double num = 0.0L, den = 0.0L;
    for (int i = 0; i <= n; ++i) {
        if (!std::isfinite(logs[i])) continue;
        double x0 = lo + i * h;
        long double w = simpson_weight(i, n) * std::exp(logs[i] - max_log);
        den += w;
        num += w * (alpha * x0 - x_t) / (sigma * sigma);
    }
    if (den <= 0.0L)
        throw NumericError("marginal score quadrature: zero normalization");
    return Vec{static_cast<double>(num / den)};
}

Vec score_once_2d(const PotentialSystem& system, double alpha, double sigma,
                  std::span<const double> x_t, const QuadratureGrid& grid, int n) {
    double lo = grid.box_lo, hi = grid.box_hi;
    double h = (hi - lo) / n;
    double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    double kT = system.kT();

    double max_log = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(static_cast<size_t>(n + 1) * (n + 1),
                             -std::numeric_limits<double>::infinity());
    for (int i = 0; i <= n; ++i) {
        double a = lo + i * h;
        for (int j = 0; j <= n; ++j) {
            double b = lo + j * h;
            Vec pt{a, b};
            if (!system.in_domain(pt)) continue;
            double da = x_t[0] - alpha * a;
            double db = x_t[1] - alpha * b;
            double l = -system.energy(pt) / kT - (da * da + db * db) * inv2s2;
            logs[static_cast<size_t>(i) * (n + 1) + j] = l;
            max_log = std::max(max_log, l);
        }
    }
    if (!std::isfinite(max_log))
        throw NumericError("marginal score quadrature: density vanished on grid");

    long double num0 = 0.0L, num1 = 0.0L, den = 0.0L;
    for (int i = 0; i <= n; ++i) {
        double a = lo + i * h;
        double wi = simpson_weight(i, n);
        for (int j = 0; j <= n; ++j) {
            double l = logs[static_cast<size_t>(i) * (n + 1) + j];
            if (!std::isfinite(l)) continue;
            double b = lo + j * h;
            long double w = wi * simpson_weight(j, n) * std::exp(l - max_log);
            den += w;
            num0 += w * (alpha * a - x_t[0]) / (sigma * sigma);
            num1 += w * (alpha * b - x_t[1]) / (sigma * sigma);
        }
    }
    if (den <= 0.0L)
        throw NumericError("marginal score quadrature: zero normalization");
    return Vec{static_cast<double>(num0 / den), static_cast<double>(num1 / den)};
}

} // namespace

Vec marginal_score_quadrature(const PotentialSystem& system,
                              const NoiseSchedule& schedule, double t,
                              std::span<const double> x_t,
                              const QuadratureGrid& grid) {
    int d = system.dim();
    if (d != 1 && d != 2)
        throw ConfigError("marginal score quadrature supports 1D and 2D systems");
    if (static_cast<int>(x_t.size()) != d)
        throw std::invalid_argument("marginal score quadrature: x_t has wrong dim");
    if (grid.points_per_axis < 2 || grid.points_per_axis % 2 != 0)
        throw ConfigError("quadrature grid: points_per_axis must be even and >= 2");
    if (!(grid.box_hi > grid.box_lo))
        throw ConfigError("quadrature grid: empty box");
    auto [alpha, sigma] = schedule.coeffs(t);
    if (!(sigma > 0.0))
        throw std::domain_error("marginal score quadrature: sigma_t must be positive");

    auto eval = [&](int n) {
        return d == 1 ? score_once_1d(system, alpha, sigma, x_t[0], grid, n)
                      : score_once_2d(system, alpha, sigma, x_t, grid, n);
    };
    Vec coarse = eval(grid.points_per_axis);
    Vec fine = eval(2 * grid.points_per_axis);
    for (int i = 0; i < d; ++i)
        if (std::abs(fine[i] - coarse[i]) > grid.richardson_tol)
            throw NumericError(
                "marginal score quadrature did not converge: step-halving "
                "changed the result by " +
                std::to_string(std::abs(fine[i] - coarse[i])));
    return fine;
}

Density1D gaussian_density(double mean, double std) {
    if (!(std > 0.0)) throw ConfigError("gaussian_density: std must be positive");
    double inv = 1.0 / (std * std);
    return Density1D{
        [mean, inv](double x) { return -0.5 * (x - mean) * (x - mean) * inv; },
        [mean, inv](double x) { return -(x - mean) * inv; }};
}

Theorem2Result theorem2_check(const Density1D& p, const Density1D& q,
                              const NoiseSchedule& schedule, double t, double x_t,
                              const QuadratureGrid& grid) {
    if (!p.log_density || !p.score || !q.log_density || !q.score)
        throw ConfigError("theorem2_check: densities must provide log_density and score");
    if (grid.points_per_axis < 2 || grid.points_per_axis % 2 != 0)
        throw ConfigError("quadrature grid: points_per_axis must be even and >= 2");
    auto [alpha, sigma] = schedule.coeffs(t);
    if (!(sigma > 0.0))
        throw std::domain_error("theorem2_check: sigma_t must be positive");
    double inv2s2 = 1.0 / (2.0 * sigma * sigma);

    // posterior expectation of fn under density f at (x_t, t)
    auto post_expect = [&](const Density1D& f,
                           const std::function<double(double)>& fn, int n) {
        double lo = grid.box_lo, hi = grid.box_hi;
        double h = (hi - lo) / n;
        double max_log = -std::numeric_limits<double>::infinity();
        std::vector<double> logs(static_cast<size_t>(n) + 1);
        for (int i = 0; i <= n; ++i) {
            double x0 = lo + i * h;
            double d = x_t - alpha * x0;
            logs[i] = f.log_density(x0) - d * d * inv2s2;
            max_log = std::max(max_log, logs[i]);
        }
        long double num = 0.0L, den = 0.0L;
        for (int i = 0; i <= n; ++i) {
            double x0 = lo + i * h;
            long double w = simpson_weight(i, n) * std::exp(logs[i] - max_log);
            den += w;
            num += w * fn(x0);
        }
        if (den <= 0.0L)
            throw NumericError("theorem2_check: zero posterior normalization");
        return static_cast<double>(num / den);
    };

    auto once = [&](int n) {
        Theorem2Result r;
        double ep_sp = post_expect(p, p.score, n);
        double eq_sp = post_expect(q, p.score, n);
        double eq_sq = post_expect(q, q.score, n);
        r.I1 = eq_sp - ep_sp;
        r.I2 = eq_sq - ep_sp;
        r.I3 = r.I2 - r.I1;
        r.norm_I1_sq = r.I1 * r.I1;
        r.norm_I2_sq = r.I2 * r.I2;
        return r;
    };
    Theorem2Result coarse = once(grid.points_per_axis);
    Theorem2Result fine = once(2 * grid.points_per_axis);
    if (std::abs(fine.I1 - coarse.I1) > grid.richardson_tol ||
        std::abs(fine.I2 - coarse.I2) > grid.richardson_tol)
        throw NumericError("theorem2_check quadrature did not converge");
    return fine;
}

} // namespace psm
