#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "psmlab/metrics.hpp"
#include "psmlab/sampler.hpp"
#include "psmlab/train.hpp"

using namespace psm;

namespace {

BatchScoreFn gaussian_score(double var) {
    return analytic_score_fn([var](std::span<const double> x) {
        Vec s(x.size());
        for (size_t i = 0; i < x.size(); ++i) s[i] = -x[i] / var;
        return s;
    }, 1);
}

// score of the VE-noised N(0, sigma_tar^2) marginal at time t
BatchScoreFn marginal_gaussian_score(const NoiseSchedule& sch, double sigma_tar) {
    return [sch, sigma_tar](const double* X, int B, double t, double* S) {
        auto c = sch.coeffs(t);
        double var = c.alpha * c.alpha * sigma_tar * sigma_tar + c.sigma * c.sigma;
        for (int i = 0; i < B; ++i) S[i] = -X[i] / var;
    };
}

std::pair<double, double> moments(const SampleSet& s) {
    double sum = 0, sum2 = 0;
    for (const Vec& c : s.configurations) {
        sum += c[0];
        sum2 += c[0] * c[0];
    }
    double n = double(s.size());
    double mean = sum / n;
    return {mean, sum2 / n - mean * mean};
}

} // namespace

TEST_CASE("MALA on a Gaussian well") {
    GaussianWell well(1, 1.0);
    MalaConfig cfg;
    cfg.step_size = 0.5;
    cfg.n_burn_in = 1000;
    cfg.n_samples = 100000;
    cfg.init = {0.0};
    cfg.seed = 3;
    MalaResult res = mala_sample(well, cfg);
    REQUIRE(res.samples.size() == 100000);
    CHECK_FALSE(res.low_acceptance);
    auto [mean, var] = moments(res.samples);
    CHECK(std::abs(mean) <= 0.02);
    CHECK(std::abs(var - 1.0) <= 0.05);

    // histogram against the analytic density
    Vec edges = uniform_edges(-4.0, 4.0, 100);
    Histogram h;
    h.bin_edges = edges;
    h.masses.assign(100, 0.0);
    for (const Vec& c : res.samples.configurations) {
        int b = int((c[0] + 4.0) / 0.08);
        if (b >= 0 && b < 100)
            h.masses[size_t(b)] += 1.0 / 100000.0;
        else
            h.overflow += 1.0 / 100000.0;
    }
    Histogram g;
    g.bin_edges = edges;
    g.masses.assign(100, 0.0);
    double total = 0.0;
    for (int b = 0; b < 100; ++b) {
        double x = -4.0 + 0.08 * (b + 0.5);
        g.masses[size_t(b)] = std::exp(-0.5 * x * x);
        total += g.masses[size_t(b)];
    }
    for (double& m : g.masses) m /= total;
    CHECK(tvd(h, g) <= 0.02);
}

TEST_CASE("MALA acceptance approaches 1 as the step vanishes") {
    GaussianWell well(1, 1.0);
    MalaConfig cfg;
    cfg.step_size = 1e-6;
    cfg.n_samples = 2000;
    cfg.init = {0.3};
    MalaResult res = mala_sample(well, cfg);
    CHECK(res.acceptance_rate > 0.999);
}

TEST_CASE("MALA flags low acceptance with a suggested step") {
    GaussianWell well(1, 1.0);
    MalaConfig cfg;
    cfg.step_size = 500.0;
    cfg.n_samples = 2000;
    cfg.init = {0.0};
    MalaResult res = mala_sample(well, cfg);
    CHECK(res.low_acceptance);
    CHECK(res.suggested_step_size < cfg.step_size);
    CHECK(res.suggested_step_size > 0.0);
}

TEST_CASE("MALA preserves frame order and thinning") {
    GaussianWell well(1, 1.0);
    MalaConfig cfg;
    cfg.step_size = 0.5;
    cfg.n_samples = 100;
    cfg.thinning = 3;
    cfg.init = {0.0};
    MalaResult a = mala_sample(well, cfg);
    MalaResult b = mala_sample(well, cfg);
    CHECK(a.samples.configurations == b.samples.configurations); // determinism
    CHECK(a.samples.energies.size() == 100);

    CHECK_THROWS_AS(mala_sample(well, MalaConfig{}), ConfigError); // empty init
    MalaConfig bad = cfg;
    bad.init = {0.0, 0.0};
    CHECK_THROWS_AS(mala_sample(well, bad), std::invalid_argument);
}

TEST_CASE("Euler reverse with the exact marginal score") {
    NoiseSchedule ve = NoiseSchedule::ve(0.1, 5.0);
    SamplerConfig cfg;
    cfg.n_steps = 1000;
    cfg.n_samples = 10000;
    cfg.method = SampleMethod::Euler;
    cfg.seed = 11;
    SampleSet out = euler_reverse(marginal_gaussian_score(ve, 1.0), ve, cfg, 1);
    auto [mean, var] = moments(out);
    CHECK(std::abs(mean) < 0.05);
    CHECK(var == doctest::Approx(1.0 + 0.01).epsilon(0.05));
}

TEST_CASE("zero score leaves the prior variance plus the accumulated noise") {
    // with s = 0 and VE, x_0 = x_1 + sum of g dW, so
    // Var = sigma_max^2 + sum g(t_k)^2 dt over the predictor grid
    NoiseSchedule ve = NoiseSchedule::ve(0.1, 5.0);
    SamplerConfig cfg;
    cfg.n_steps = 200;
    cfg.n_samples = 20000;
    cfg.method = SampleMethod::Euler;
    cfg.seed = 19;
    BatchScoreFn zero = [](const double*, int B, double, double* S) {
        for (int i = 0; i < B; ++i) S[i] = 0.0;
    };
    SampleSet out = euler_reverse(zero, ve, cfg, 1);
    double expect = 25.0;
    double dt = 1.0 / cfg.n_steps;
    for (int k = 0; k + 1 < cfg.n_steps; ++k) {
        double g = ve.sde_coeffs(1.0 - k * dt).diffusion;
        expect += g * g * dt;
    }
    auto [mean, var] = moments(out);
    CHECK(std::abs(mean) < 0.15);
    CHECK(var == doctest::Approx(expect).epsilon(0.05));
}

TEST_CASE("PC sampler with the exact marginal score") {
    NoiseSchedule ve = NoiseSchedule::ve(0.1, 5.0);
    SamplerConfig cfg;
    cfg.n_steps = 1000;
    cfg.n_samples = 10000;
    cfg.method = SampleMethod::PC;
    cfg.seed = 13;
    SampleSet out = pc_sample(marginal_gaussian_score(ve, 1.0), ve, cfg, 1);
    auto [mean, var] = moments(out);
    CHECK(std::abs(mean) < 0.05);
    CHECK(var == doctest::Approx(1.0 + 0.01).epsilon(0.05));

    // closure: W-2 against direct draws from the target
    std::mt19937_64 rng = make_rng(29);
    std::normal_distribution<double> normal;
    Vec gen, ref;
    for (const Vec& c : out.configurations) gen.push_back(c[0]);
    for (size_t i = 0; i < gen.size(); ++i) ref.push_back(normal(rng));
    CHECK(wasserstein2_1d(gen, ref) <= 0.05);
}

TEST_CASE("sampler config guards") {
    SamplerConfig cfg;
    cfg.corrector_snr = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SamplerConfig{};
    cfg.n_steps = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    NoiseSchedule ve = NoiseSchedule::ve(0.1, 5.0);
    SamplerConfig empty;
    empty.n_samples = 0;
    SampleSet none = euler_reverse(gaussian_score(1.0), ve, empty, 1);
    CHECK(none.size() == 0);
}

TEST_CASE("samplers are deterministic") {
    NoiseSchedule ve = NoiseSchedule::ve(0.1, 5.0);
    SamplerConfig cfg;
    cfg.n_steps = 50;
    cfg.n_samples = 64;
    cfg.seed = 5;
    SampleSet a = pc_sample(marginal_gaussian_score(ve, 1.0), ve, cfg, 1);
    SampleSet b = pc_sample(marginal_gaussian_score(ve, 1.0), ve, cfg, 1);
    CHECK(a.configurations == b.configurations);
    CHECK(a.content_hash() == b.content_hash());
    cfg.seed = 6;
    SampleSet c = pc_sample(marginal_gaussian_score(ve, 1.0), ve, cfg, 1);
    CHECK(a.content_hash() != c.content_hash());
}

TEST_CASE("corrector converges to the time-t marginal") {
    // run many corrector passes at fixed t by sampling with a tiny predictor
    // count is awkward; instead check Langevin steps directly
    NoiseSchedule ve = NoiseSchedule::ve(0.1, 5.0);
    double t = 0.5;
    auto c = ve.coeffs(t);
    double var_t = 1.0 + c.sigma * c.sigma;

    std::mt19937_64 rng = make_rng(41);
    std::normal_distribution<double> normal;
    const int n = 20000;
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = 4.0 * normal(rng); // wrong initial law
    double eta = 0.05;
    for (int step = 0; step < 400; ++step) {
        for (int i = 0; i < n; ++i) {
            double score = -x[i] / var_t;
            x[i] += eta * score + std::sqrt(2.0 * eta) * normal(rng);
        }
    }
    double sum = 0, sum2 = 0;
    for (double v : x) {
        sum += v;
        sum2 += v * v;
    }
    double mean = sum / n, var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    // biased Langevin stationary variance is var_t / (1 - eta/(2 var_t))^-1 ...
    // with eta = 0.05 the discretization bias is ~2%; allow 5%
    CHECK(var == doctest::Approx(var_t).epsilon(0.05));
}

TEST_CASE("score_from_eps") {
    CHECK(score_from_eps(Vec{0.0, 0.0}, 0.7) == Vec{0.0, 0.0});
    Vec s = score_from_eps(Vec{1.0, -1.0}, 0.5);
    CHECK(s[0] == doctest::Approx(-2.0));
    CHECK(s[1] == doctest::Approx(2.0));
    CHECK_THROWS_AS(score_from_eps(Vec{1.0}, 0.0), std::domain_error);

    // composing with the force target recovers F / (alpha kT)
    NoiseSchedule ve = NoiseSchedule::ve(0.1, 5.0);
    LossSpec psm;
    psm.variant = LossVariant::PSM;
    Vec x0{0.2}, noise{0.1}, force{3.0};
    double t = 0.33, kT = 2.0;
    auto c = ve.coeffs(t);
    Vec x_t = ve.perturb(x0, t, noise);
    Vec eps = target_epsilon(psm, ve, x0, x_t, noise, force, t, kT);
    Vec rec = score_from_eps(eps, c.sigma);
    CHECK(rec[0] == doctest::Approx(force[0] / (c.alpha * kT)).epsilon(1e-12));
}

TEST_CASE("score_to_velocity") {
    NoiseSchedule ve = NoiseSchedule::ve(0.1, 5.0);
    Vec zero{0.0};
    CHECK(score_to_velocity(zero, Vec{1.3}, ve, 0.5)[0] == 0.0);

    Vec v = score_to_velocity(Vec{1.0}, Vec{0.0}, ve, 0.5);
    CHECK(v[0] == doctest::Approx(1.9560).epsilon(1e-4));
    CHECK(v[0] == doctest::Approx(0.01 * 50.0 * std::log(50.0)).epsilon(1e-12));

    // VE velocity is independent of x
    Vec v2 = score_to_velocity(Vec{1.0}, Vec{7.7}, ve, 0.5);
    CHECK(v2[0] == v[0]);

    NoiseSchedule vp = NoiseSchedule::vp();
    CHECK_THROWS_AS(score_to_velocity(Vec{1.0}, Vec{0.0}, vp, 0.0), std::domain_error);
    CHECK_THROWS_AS(score_to_velocity(Vec{1.0}, Vec{0.0}, vp, 1.0), std::domain_error);
    Vec vv = score_to_velocity(Vec{1.0}, Vec{0.5}, vp, 0.5);
    CHECK(std::isfinite(vv[0]));
}

TEST_CASE("net-backed score function") {
    ScoreNet net = ScoreNet::create(1, {4}, 4, 3);
    net.set_params(Vec(net.n_params(), 0.0));
    NoiseSchedule ve = NoiseSchedule::ve(0.1, 5.0);
    BatchScoreFn fn = net_score_fn(net, ve);
    double x = 0.4, s = -1.0;
    fn(&x, 1, 0.5, &s);
    CHECK(s == 0.0); // zero net output -> zero score
}
