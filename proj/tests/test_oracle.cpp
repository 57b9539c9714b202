#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "psmlab/oracle.hpp"

using namespace psm;

TEST_CASE("gaussian posterior closed form") {
    Gaussian1D g{0.0, 1.0};
    PosteriorParams p = gaussian_posterior(g, 1.0, 1.0);
    CHECK(p.variance == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p.mean_coeff == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p.mean_offset == doctest::Approx(0.0));

    // vanishing noise: posterior collapses onto x_t / alpha
    PosteriorParams tight = gaussian_posterior(g, 2.0, 1e-9);
    CHECK(tight.variance == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(tight.mean_coeff == doctest::Approx(0.5).epsilon(1e-6));

    // huge noise: posterior returns to the prior
    Gaussian1D g2{1.5, 0.7};
    PosteriorParams wide = gaussian_posterior(g2, 1.0, 1e6);
    CHECK(wide.mean_coeff == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(wide.mean_offset == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(wide.variance == doctest::Approx(0.49).epsilon(1e-9));
}

TEST_CASE("posterior force expectation equals the marginal score") {
    Gaussian1D g{0.0, 1.0};
    NoiseSchedule sch = NoiseSchedule::ve(1.0, 5.0); // sigma(0) = 1
    McCheck c = psm_label_mc_check(g, sch, 0.0, 1.0, 100000);
    CHECK(c.analytic == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(c.abs_error <= 0.02);

    McCheck sym = psm_label_mc_check(g, sch, 0.0, 0.0, 10000);
    CHECK(sym.analytic == 0.0);

    Gaussian1D shifted{2.0, 1.0};
    McCheck at_mean = psm_label_mc_check(shifted, sch, 0.0, 2.0, 10000);
    CHECK(at_mean.analytic == 0.0);
}

TEST_CASE("monte-carlo error shrinks at the square-root rate") {
    Gaussian1D g{0.0, 1.0};
    NoiseSchedule sch = NoiseSchedule::ve(0.1, 5.0);
    auto median_err = [&](long n) {
        std::vector<double> errs;
        for (std::uint64_t s = 0; s < 21; ++s)
            errs.push_back(psm_label_mc_check(g, sch, 0.4, 0.8, n, 100 + s).abs_error);
        std::nth_element(errs.begin(), errs.begin() + 10, errs.end());
        return errs[10];
    };
    double e1 = median_err(10000);
    double e2 = median_err(40000);
    double e3 = median_err(160000);
    CHECK(e2 <= 0.80 * e1);
    CHECK(e3 <= 0.80 * e2);
    CHECK(e2 >= 0.25 * e1);
    CHECK(e3 >= 0.25 * e2);
}

TEST_CASE("CLT bound on the posterior-draw error") {
    Gaussian1D g{0.0, 1.0};
    NoiseSchedule sch = NoiseSchedule::ve(0.1, 5.0);
    // posterior std of the scaled force = sqrt(post var)/(alpha sigma_tar^2)
    double t = 0.5;
    auto c = sch.coeffs(t);
    PosteriorParams post = gaussian_posterior(g, c.alpha, c.sigma);
    double force_std = std::sqrt(post.variance) / (c.alpha * g.std * g.std);
    long n = 10000;
    int violations = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        McCheck mc = psm_label_mc_check(g, sch, t, -0.7, n, 1000 + s);
        if (mc.abs_error > 4.0 * force_std / std::sqrt(double(n))) ++violations;
    }
    CHECK(violations == 0); // 4-sigma bound: essentially never exceeded
}

TEST_CASE("target variance closed forms") {
    Gaussian1D g{0.0, 1.0};
    TargetVariance lo = target_variance(g, 1.0, 0.1, 1);
    CHECK(lo.dsm_var == doctest::Approx(99.0099).epsilon(1e-4));
    CHECK(lo.psm_var == doctest::Approx(0.009901).epsilon(1e-4));

    TargetVariance hi = target_variance(g, 1.0, 5.0, 1);
    CHECK(hi.dsm_var == doctest::Approx(0.001538).epsilon(1e-3));
    CHECK(hi.psm_var == doctest::Approx(0.9615).epsilon(1e-3));
    CHECK(lo.psm_var < lo.dsm_var);
    CHECK(hi.dsm_var < hi.psm_var);

    // exact crossing at sigma_t = alpha * sigma_tar
    TargetVariance eq = target_variance(g, 1.0, 1.0, 1);
    CHECK(eq.dsm_var == doctest::Approx(eq.psm_var).epsilon(1e-14));
    TargetVariance eq2 = target_variance(Gaussian1D{0.3, 2.0}, 0.8, 1.6, 3);
    CHECK(eq2.dsm_var == doctest::Approx(eq2.psm_var).epsilon(1e-14));

    // dimension scales both linearly
    TargetVariance d3 = target_variance(g, 1.0, 0.1, 3);
    CHECK(d3.dsm_var == doctest::Approx(3.0 * lo.dsm_var).epsilon(1e-12));
}

TEST_CASE("quadrature marginal score vs the Gaussian closed form") {
    GaussianWell well(1, 1.0);
    NoiseSchedule sch = NoiseSchedule::ve(0.1, 5.0);
    QuadratureGrid grid;
    for (double t : {0.1, 0.5, 0.9}) {
        auto c = sch.coeffs(t);
        double var = c.alpha * c.alpha + c.sigma * c.sigma;
        for (double x : {-1.5, -0.2, 0.8}) {
            Vec s = marginal_score_quadrature(well, sch, t, Vec{x}, grid);
            CHECK(s[0] == doctest::Approx(-x / var).epsilon(1e-6));
        }
    }
}

TEST_CASE("quadrature respects symmetry and prior dominance") {
    QuarticToy q(1);
    NoiseSchedule sch = NoiseSchedule::ve(0.1, 5.0);
    QuadratureGrid grid;
    Vec at0 = marginal_score_quadrature(q, sch, 0.3, Vec{0.0}, grid);
    CHECK(std::abs(at0[0]) < 1e-10);

    // near t = 1 the marginal is close to the prior N(0, sigma_max^2 + var_data)
    Vec late = marginal_score_quadrature(q, sch, 1.0, Vec{2.0}, grid);
    CHECK(late[0] == doctest::Approx(-2.0 / 25.0).epsilon(0.01));
}

TEST_CASE("quadrature in two dimensions") {
    GaussianWell well(2, 1.0);
    NoiseSchedule sch = NoiseSchedule::ve(0.1, 5.0);
    QuadratureGrid grid;
    grid.points_per_axis = 512;
    double t = 0.5;
    auto c = sch.coeffs(t);
    double var = c.alpha * c.alpha + c.sigma * c.sigma;
    Vec s = marginal_score_quadrature(well, sch, t, Vec{0.7, -0.4}, grid);
    CHECK(s[0] == doctest::Approx(-0.7 / var).epsilon(1e-5));
    CHECK(s[1] == doctest::Approx(0.4 / var).epsilon(1e-5));
}

TEST_CASE("quadrature reports non-convergence") {
    GaussianWell well(1, 1.0);
    NoiseSchedule sch = NoiseSchedule::ve(0.1, 5.0);
    QuadratureGrid coarse;
    coarse.points_per_axis = 4;
    coarse.richardson_tol = 1e-14;
    CHECK_THROWS_AS(marginal_score_quadrature(well, sch, 0.5, Vec{0.5}, coarse),
                    NumericError);
}

TEST_CASE("data-score error quantities") {
    NoiseSchedule sch = NoiseSchedule::ve(0.1, 5.0);
    QuadratureGrid grid;
    Density1D p = gaussian_density(0.0, 1.0);
    Density1D q = gaussian_density(0.5, 1.0);

    Theorem2Result same = theorem2_check(p, p, sch, 0.01, 0.25, grid);
    CHECK(std::abs(same.I1) < 1e-9);
    CHECK(std::abs(same.I2) < 1e-9);

    Theorem2Result r = theorem2_check(p, q, sch, 0.01, 0.25, grid);
    CHECK(r.norm_I1_sq <= r.norm_I2_sq);
    CHECK(r.I3 == doctest::Approx(r.I2 - r.I1).epsilon(1e-12));

    Theorem2Result sw = theorem2_check(q, p, sch, 0.01, 0.25, grid);
    CHECK(sw.I2 != doctest::Approx(r.I2).epsilon(1e-9)); // no symmetry assumed
}

TEST_CASE("gaussian density helper") {
    Density1D d = gaussian_density(0.5, 2.0);
    CHECK(d.score(0.5) == doctest::Approx(0.0));
    CHECK(d.score(1.5) == doctest::Approx(-0.25).epsilon(1e-12));
    // finite-difference cross-check of the log density
    double h = 1e-6, x = -0.3;
    double fd = (d.log_density(x + h) - d.log_density(x - h)) / (2 * h);
    CHECK(fd == doctest::Approx(d.score(x)).epsilon(1e-6));
}

TEST_CASE("posterior mean minimizes the empirical square loss") {
    // five-atom data law: the bin-wise empirical minimizer of the noise-target
    // square loss must match the analytic posterior mean of the noise
    Vec atoms{-2.0, -0.5, 0.0, 1.0, 2.5};
    Vec weights{0.1, 0.3, 0.2, 0.25, 0.15};
    NoiseSchedule sch = NoiseSchedule::ve(0.1, 5.0);
    double t = 0.5;
    auto c = sch.coeffs(t);

    auto posterior_eps_mean = [&](double x_t) {
        // E[eps | x_t] = (x_t - alpha E[x0|x_t]) / sigma
        double num = 0, den = 0;
        for (size_t k = 0; k < atoms.size(); ++k) {
            double r = (x_t - c.alpha * atoms[k]) / c.sigma;
            double w = weights[k] * std::exp(-0.5 * r * r);
            num += w * atoms[k];
            den += w;
        }
        double ex0 = num / den;
        return (x_t - c.alpha * ex0) / c.sigma;
    };

    std::mt19937_64 rng = make_rng(61);
    std::normal_distribution<double> normal;
    std::discrete_distribution<int> pick(weights.begin(), weights.end());

    const int n_bins = 40;
    double lo = -4.0, hi = 4.0;
    Vec sum(n_bins, 0.0);
    std::vector<long> cnt(n_bins, 0);
    for (int i = 0; i < 400000; ++i) {
        double x0 = atoms[size_t(pick(rng))];
        double eps = normal(rng);
        double xt = c.alpha * x0 + c.sigma * eps;
        int b = int((xt - lo) / (hi - lo) * n_bins);
        if (b < 0 || b >= n_bins) continue;
        sum[size_t(b)] += eps;
        cnt[size_t(b)] += 1;
    }
    int checked = 0;
    for (int b = 0; b < n_bins; ++b) {
        if (cnt[size_t(b)] < 2000) continue;
        double center = lo + (hi - lo) * (b + 0.5) / n_bins;
        double emp = sum[size_t(b)] / double(cnt[size_t(b)]);
        CHECK(std::abs(emp - posterior_eps_mean(center)) <= 0.12);
        ++checked;
    }
    CHECK(checked >= 10);
}
