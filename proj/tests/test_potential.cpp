#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "psmlab/potential.hpp"

using namespace psm;

namespace {

// cluster positions with a guaranteed minimum separation, for force checks
Vec spread_cluster(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec x;
    double side = std::cbrt(double(n)) + 1.0;
    while (true) {
        x.clear();
        std::uniform_real_distribution<double> box(-side, side);
        for (int i = 0; i < 3 * n; ++i) x.push_back(box(rng));
        bool ok = true;
        for (int i = 0; i < n && ok; ++i)
            for (int j = i + 1; j < n && ok; ++j) {
                double r2 = 0;
                for (int k = 0; k < 3; ++k) {
                    double d = x[3 * i + k] - x[3 * j + k];
                    r2 += d * d;
                }
                if (r2 < 0.49) ok = false;
            }
        if (ok) return x;
    }
}

} // namespace

TEST_CASE("LJ pair energies") {
    LennardJonesCluster bare(2, 1.0, 1.0, false);
    Vec x{0, 0, 0, 1, 0, 0};
    CHECK(bare.energy(x) == doctest::Approx(-1.0).epsilon(1e-12));

    LennardJonesCluster osc(2, 1.0, 1.0, true);
    CHECK(osc.energy(x) == doctest::Approx(-0.75).epsilon(1e-12));

    Vec far{0, 0, 0, 1e6, 0, 0};
    CHECK(std::abs(bare.energy(far)) < 1e-30);
}

TEST_CASE("LJ forces") {
    LennardJonesCluster bare(2, 1.0, 1.0, false);
    Vec x{0, 0, 0, 1, 0, 0}; // pair at the potential minimum
    Vec f = bare.force(x);
    for (double v : f) CHECK(std::abs(v) < 1e-12);

    LennardJonesCluster osc(2, 1.0, 1.0, true);
    Vec g = osc.force(x);
    CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g[3] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(g[1] == 0.0);
    CHECK(g[4] == 0.0);
}

TEST_CASE("LJ pair forces sum to zero") {
    std::mt19937_64 rng = make_rng(11);
    LennardJonesCluster lj(7, 1.0, 1.0, false);
    for (int trial = 0; trial < 10; ++trial) {
        Vec x = spread_cluster(7, rng);
        Vec f = lj.force(x);
        for (int k = 0; k < 3; ++k) {
            double s = 0;
            for (int i = 0; i < 7; ++i) s += f[3 * i + k];
            CHECK(std::abs(s) < 1e-10);
        }
    }
}

TEST_CASE("LJ singularity guard") {
    LennardJonesCluster lj(2, 1.0, 1.0, false);
    Vec clash{0, 0, 0, 0, 0, 1e-12};
    CHECK_THROWS_AS(lj.energy(clash), std::domain_error);
    CHECK_THROWS_AS(lj.force(clash), std::domain_error);
}

TEST_CASE("LJ invariance without oscillator") {
    std::mt19937_64 rng = make_rng(12);
    LennardJonesCluster lj(5, 1.0, 1.0, false);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Vec x = spread_cluster(5, rng);
        double e = lj.energy(x);

        Vec shifted = x;
        double c[3] = {u(rng), u(rng), u(rng)};
        for (int i = 0; i < 5; ++i)
            for (int k = 0; k < 3; ++k) shifted[3 * i + k] += c[k];
        CHECK(lj.energy(shifted) == doctest::Approx(e).epsilon(1e-10));

        // rotation about z by a random angle
        double a = u(rng) * 3.0;
        Vec rot = x;
        for (int i = 0; i < 5; ++i) {
            double px = x[3 * i], py = x[3 * i + 1];
            rot[3 * i] = std::cos(a) * px - std::sin(a) * py;
            rot[3 * i + 1] = std::sin(a) * px + std::cos(a) * py;
        }
        CHECK(lj.energy(rot) == doctest::Approx(e).epsilon(1e-10));
    }
}

TEST_CASE("Gaussian well is exactly quadratic") {
    Vec mu{0.3, -0.7};
    GaussianWell well(2, 1.5, mu);
    Vec x{1.0, 1.0};
    Vec f = well.force(x);
    for (int i = 0; i < 2; ++i)
        CHECK(f[i] == doctest::Approx(-(x[i] - mu[i]) / 2.25).epsilon(1e-15));
    CHECK(check_force_consistency(well, x, 1e-5) <= 1e-8);
}

TEST_CASE("quartic score") {
    QuarticToy q1(1);
    CHECK(q1.score(Vec{0.0})[0] == 0.0);
    CHECK(q1.score(Vec{1.0})[0] == doctest::Approx(-6.0).epsilon(1e-12));
    CHECK(q1.score(Vec{std::sqrt(2.5)})[0] == doctest::Approx(0.0).epsilon(1e-12));

    QuarticToy q2(2);
    Vec s = q2.score(Vec{0.0, 0.0});
    CHECK(s[0] == 0.0);
    CHECK(s[1] == 0.0);

    CHECK_THROWS_AS(q1.score(Vec{2.5}), std::domain_error);
    CHECK_THROWS_AS(q1.energy(Vec{-2.1}), std::domain_error);
    CHECK(q1.in_domain(Vec{1.99}));
    CHECK_FALSE(q1.in_domain(Vec{2.01}));
}

TEST_CASE("force consistency across systems") {
    std::mt19937_64 rng = make_rng(13);
    std::uniform_real_distribution<double> u(-1.5, 1.5);

    GaussianWell well(3, 1.0);
    QuarticToy quartic(1);
    QuarticToy quartic2(2);
    LennardJonesCluster lj13(13);

    for (int trial = 0; trial < 100; ++trial) {
        Vec xg{u(rng), u(rng), u(rng)};
        CHECK(check_force_consistency(well, xg, 1e-5) <= 1e-8);

        Vec xq{u(rng)};
        CHECK(check_force_consistency(quartic, xq, 1e-5) <= 1e-8);

        Vec xq2{u(rng), u(rng)};
        while (!quartic2.in_domain(xq2)) xq2 = {u(rng), u(rng)};
        CHECK(check_force_consistency(quartic2, xq2, 1e-5) <= 1e-7);

        Vec xl = spread_cluster(13, rng);
        CHECK(check_force_consistency(lj13, xl, 1e-5) <= 1e-4);
    }
}

TEST_CASE("finite-difference step bounds") {
    GaussianWell well(1, 1.0);
    Vec x{0.5};
    CHECK_THROWS_AS(check_force_consistency(well, x, 1e-8), ConfigError);
    CHECK_THROWS_AS(check_force_consistency(well, x, 1e-2), ConfigError);
}

TEST_CASE("constructor validation") {
    CHECK_THROWS_AS(LennardJonesCluster(1), ConfigError);
    CHECK_THROWS_AS(LennardJonesCluster(3, -1.0), ConfigError);
    CHECK_THROWS_AS(GaussianWell(0), ConfigError);
    CHECK_THROWS_AS(GaussianWell(2, -0.5), ConfigError);
    CHECK_THROWS_AS(QuarticToy(3), ConfigError);
    CHECK_THROWS_AS(QuarticToy(1, 0.0), ConfigError);
    GaussianWell w(1);
    CHECK_THROWS_AS(w.set_kT(0.0), ConfigError);
}
