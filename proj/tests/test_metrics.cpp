#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "psmlab/metrics.hpp"

using namespace psm;

namespace {

SampleSet set1d(std::vector<double> xs) {
    SampleSet s;
    s.n_particles = 1;
    s.spatial_dim = 1;
    for (double x : xs) s.configurations.push_back({x});
    return s;
}

Histogram simple(Vec edges, Vec masses) {
    Histogram h;
    h.bin_edges = std::move(edges);
    h.masses = std::move(masses);
    return h;
}

} // namespace

TEST_CASE("interatomic distance histogram") {
    SampleSet s;
    s.n_particles = 3;
    s.spatial_dim = 1;
    s.configurations = {{0.0, 1.0, 2.0}};
    Histogram h = interatomic_hist(s, Vec{0.5, 1.5, 2.5});
    CHECK(h.masses[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(h.masses[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(h.overflow == 0.0);
    h.validate();

    SampleSet pair;
    pair.n_particles = 2;
    pair.spatial_dim = 3;
    pair.configurations = {{0, 0, 0, 1.2, 0, 0}};
    Histogram hp = interatomic_hist(pair, Vec{0.0, 1.0, 1.5, 3.0});
    CHECK(hp.masses[1] == doctest::Approx(1.0));

    SampleSet empty;
    empty.n_particles = 2;
    CHECK_THROWS_AS(interatomic_hist(empty, Vec{0.0, 1.0}), DataError);

    // invariance under rigid motion
    SampleSet moved = s;
    for (double& v : moved.configurations[0]) v += 17.3;
    Histogram hm = interatomic_hist(moved, Vec{0.5, 1.5, 2.5});
    CHECK(hm.masses == h.masses);
}

TEST_CASE("tvd") {
    Vec edges{0.0, 1.0, 2.0};
    Histogram p = simple(edges, {0.7, 0.3});
    Histogram q = simple(edges, {0.5, 0.5});
    CHECK(tvd(p, p) == 0.0);
    CHECK(tvd(p, q) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(tvd(q, p) == tvd(p, q));

    Histogram disjoint_a = simple(edges, {1.0, 0.0});
    Histogram disjoint_b = simple(edges, {0.0, 1.0});
    CHECK(tvd(disjoint_a, disjoint_b) == doctest::Approx(1.0));

    Histogram other = simple(Vec{0.0, 0.5, 2.0}, {0.5, 0.5});
    CHECK_THROWS_AS(tvd(p, other), std::invalid_argument);
}

TEST_CASE("tvd triangle inequality on random histograms") {
    std::mt19937_64 rng = make_rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec edges = uniform_edges(0.0, 1.0, 8);
    auto random_hist = [&]() {
        Vec m(8);
        double total = 0;
        for (double& v : m) {
            v = u(rng);
            total += v;
        }
        for (double& v : m) v /= total;
        return simple(edges, m);
    };
    for (int trial = 0; trial < 50; ++trial) {
        Histogram a = random_hist(), b = random_hist(), c = random_hist();
        CHECK(tvd(a, b) <= tvd(a, c) + tvd(c, b) + 1e-12);
        CHECK(tvd(a, b) == doctest::Approx(tvd(b, a)).epsilon(1e-14));
    }
}

TEST_CASE("histogram MAE uses densities") {
    Vec edges{0.0, 1.0, 2.0};
    Histogram p = simple(edges, {1.0, 0.0});
    Histogram q = simple(edges, {0.0, 1.0});
    CHECK(mae_hist(p, p) == 0.0);
    CHECK(mae_hist(p, q) == doctest::Approx(1.0).epsilon(1e-12));

    Histogram a = simple(edges, {0.6, 0.4});
    Histogram b = simple(edges, {0.5, 0.5});
    CHECK(mae_hist(a, b) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("wasserstein2 exact mode") {
    SampleSet a = set1d({0.0, 1.0});
    SampleSet b = set1d({0.0, 0.0});
    CHECK(wasserstein2(a, a) == doctest::Approx(0.0));
    CHECK(wasserstein2(a, b) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(wasserstein2(a, b) == doctest::Approx(wasserstein2(b, a)).epsilon(1e-12));

    // translation moves the value by exactly the shift length
    SampleSet shifted = a;
    for (Vec& c : shifted.configurations) c[0] += 2.5;
    CHECK(wasserstein2(a, shifted) == doctest::Approx(2.5).epsilon(1e-12));

    // coordinate scaling scales the value
    SampleSet sa = a, sb = b;
    for (Vec& c : sa.configurations) c[0] *= 3.0;
    for (Vec& c : sb.configurations) c[0] *= 3.0;
    CHECK(wasserstein2(sa, sb) == doctest::Approx(3.0 * wasserstein2(a, b)).epsilon(1e-12));

    SampleSet unequal = set1d({0.0, 1.0, 2.0});
    CHECK_THROWS_AS(wasserstein2(a, unequal), std::invalid_argument);
}

TEST_CASE("entropic mode approximates the exact coupling") {
    std::mt19937_64 rng = make_rng(37);
    std::normal_distribution<double> normal;
    SampleSet a, b;
    a.n_particles = b.n_particles = 1;
    a.spatial_dim = b.spatial_dim = 1;
    for (int i = 0; i < 600; ++i) {
        a.configurations.push_back({normal(rng)});
        b.configurations.push_back({normal(rng) + 0.5});
    }
    double approx = wasserstein2(a, b); // 600 > exact limit
    Vec av, bv;
    for (const Vec& c : a.configurations) av.push_back(c[0]);
    for (const Vec& c : b.configurations) bv.push_back(c[0]);
    double exact = wasserstein2_1d(av, bv);
    CHECK(approx == doctest::Approx(exact).epsilon(0.15));
}

TEST_CASE("1D quantile-coupling distance") {
    CHECK(wasserstein2_1d({0.0, 1.0}, {0.0, 0.0}) ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(wasserstein2_1d({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
    // unequal sizes: {0,1} vs {0.5} couples each half to 0.5
    CHECK(wasserstein2_1d({0.0, 1.0}, {0.5}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(wasserstein2_1d({}, {1.0}), std::invalid_argument);
}

TEST_CASE("bond extraction and stability") {
    // 1D chain at 0, 1, 3: only (0,1) is within the 1.8 cutoff
    std::vector<Bond> bonds = bonds_from_frame(Vec{0.0, 1.0, 3.0}, 3);
    REQUIRE(bonds.size() == 1);
    CHECK(bonds[0].i == 0);
    CHECK(bonds[0].j == 1);
    CHECK(bonds[0].length == doctest::Approx(1.0));

    StabilityResult ok = stability_check(Vec{0.0, 1.0, 3.0}, bonds);
    CHECK(ok.stable);
    CHECK(ok.deviation == 0.0);

    StabilityResult edge = stability_check(Vec{0.0, 1.5, 3.0}, bonds);
    CHECK(edge.stable); // deviation exactly 0.5 stays stable (strict >)

    StabilityResult broken = stability_check(Vec{0.0, 1.6, 3.0}, bonds);
    CHECK_FALSE(broken.stable);
    CHECK(broken.i == 0);
    CHECK(broken.j == 1);
    CHECK(broken.deviation == doctest::Approx(0.6));

    CHECK_THROWS_AS(stability_check(Vec{0.0}, std::vector<Bond>{}), DataError);
}

TEST_CASE("energy histogram") {
    GaussianWell well(1, 1.0);
    SampleSet same = set1d({0.5, 0.5, 0.5});
    Histogram h = energy_hist(same, well, Vec{0.0, 0.1, 0.2, 0.3});
    CHECK(h.masses[1] == doctest::Approx(1.0)); // all energy 0.125

    SampleSet empty;
    CHECK_THROWS_AS(energy_hist(empty, well, Vec{0.0, 1.0}), DataError);

    // singular configurations are skipped and counted
    LennardJonesCluster lj(2, 1.0, 1.0, false);
    SampleSet mix;
    mix.n_particles = 2;
    mix.spatial_dim = 3;
    mix.configurations = {{0, 0, 0, 1, 0, 0}, {0, 0, 0, 0, 0, 0}};
    long skipped = -1;
    Histogram hh = energy_hist(mix, lj, Vec{-2.0, 0.0}, &skipped);
    CHECK(skipped == 1);
    CHECK(hh.masses[0] == doctest::Approx(1.0));
}

TEST_CASE("gaussian energies follow the half-chi-square law") {
    GaussianWell well(1, 1.0);
    std::mt19937_64 rng = make_rng(53);
    std::normal_distribution<double> normal;
    SampleSet s;
    s.n_particles = 1;
    s.spatial_dim = 1;
    for (int i = 0; i < 100000; ++i) s.configurations.push_back({normal(rng)});
    Vec edges = uniform_edges(0.0, 4.0, 60);
    Histogram h = energy_hist(s, well, edges);

    // analytic law of E = x^2/2 for x ~ N(0,1): P(E in bin) via the normal CDF
    auto ncdf = [](double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); };
    Histogram g;
    g.bin_edges = edges;
    g.masses.assign(60, 0.0);
    for (int b = 0; b < 60; ++b) {
        double lo = edges[size_t(b)], hi = edges[size_t(b) + 1];
        double mass = 2.0 * (ncdf(std::sqrt(2.0 * hi)) - ncdf(std::sqrt(2.0 * lo)));
        g.masses[size_t(b)] = mass;
    }
    g.overflow = 1.0;
    for (double m : g.masses) g.overflow -= m;
    CHECK(tvd(h, g) <= 0.03);
}

TEST_CASE("uniform edges and histogram validation") {
    Vec e = uniform_edges(0.0, 1.0, 4);
    CHECK(e == Vec{0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK_THROWS_AS(uniform_edges(1.0, 0.0, 4), ConfigError);
    CHECK_THROWS_AS(uniform_edges(0.0, 1.0, 0), ConfigError);

    Histogram bad = simple(Vec{0.0, 1.0}, {0.5, 0.5});
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    Histogram neg = simple(Vec{0.0, 0.5, 1.0}, {-0.1, 1.1});
    CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
}
