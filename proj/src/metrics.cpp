// SPDX-License-Identifier: Apache-2.0
#include "psmlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace psm {

std::uint64_t SampleSet::content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const void* p, size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ull;
        }
    };
    mix(&n_particles, sizeof(n_particles));
    mix(&spatial_dim, sizeof(spatial_dim));
    for (const Vec& c : configurations) mix(c.data(), c.size() * sizeof(double));
    return h;
}

void Histogram::validate() const {
    if (bin_edges.size() < 2) throw std::invalid_argument("histogram needs >= 2 bin edges");
    if (masses.size() + 1 != bin_edges.size())
        throw std::invalid_argument("histogram mass count must be bin edge count - 1");
    for (size_t i = 1; i < bin_edges.size(); ++i)
        if (!(bin_edges[i] > bin_edges[i - 1]))
            throw std::invalid_argument("histogram bin edges must be strictly increasing");
    double total = overflow;
    for (double m : masses) {
        if (m < 0.0) throw std::invalid_argument("histogram masses must be non-negative");
        total += m;
    }
    if (std::abs(total - 1.0) > 1e-12 && total != 0.0)
        throw std::invalid_argument("histogram masses must sum to 1");
}

Vec uniform_edges(double lo, double hi, int n_bins) {
    if (!(hi > lo) || n_bins < 1) throw ConfigError("invalid histogram bin spec");
    Vec edges(static_cast<size_t>(n_bins) + 1);
    for (int i = 0; i <= n_bins; ++i)
        edges[static_cast<size_t>(i)] = lo + (hi - lo) * i / n_bins;
    return edges;
}

namespace {

// Bins are [e_k, e_{k+1}), with the last bin closed on the right.
// Returns -1 for values outside the edge range.
int find_bin(const Vec& edges, double v) {
    if (v < edges.front() || v > edges.back()) return -1;
    if (v == edges.back()) return static_cast<int>(edges.size()) - 2;
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    return static_cast<int>(it - edges.begin()) - 1;
}

void check_same_edges(const Histogram& p, const Histogram& q) {
    if (p.bin_edges != q.bin_edges)
        throw std::invalid_argument("histograms have mismatched bin edges");
}

} // namespace

Histogram interatomic_hist(const SampleSet& samples, std::span<const double> bin_edges) {
    if (samples.size() == 0) throw DataError("interatomic_hist: empty sample set");
    if (samples.n_particles < 2)
        throw DataError("interatomic_hist needs at least 2 particles");
    samples.validate();

    Histogram h;
    h.bin_edges.assign(bin_edges.begin(), bin_edges.end());
    h.masses.assign(h.bin_edges.size() - 1, 0.0);

    int n = samples.n_particles;
    int d = samples.spatial_dim;
    double per_pair = 2.0 / (static_cast<double>(n) * (n - 1) * static_cast<double>(samples.size()));
    for (const Vec& c : samples.configurations) {
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                double r2 = 0.0;
                for (int k = 0; k < d; ++k) {
                    double diff = c[static_cast<size_t>(i * d + k)] - c[static_cast<size_t>(j * d + k)];
                    r2 += diff * diff;
                }
                int bin = find_bin(h.bin_edges, std::sqrt(r2));
                if (bin < 0)
                    h.overflow += per_pair;
                else
                    h.masses[static_cast<size_t>(bin)] += per_pair;
            }
        }
    }
    return h;
}

double tvd(const Histogram& p, const Histogram& q) {
    check_same_edges(p, q);
    double sum = std::abs(p.overflow - q.overflow);
    for (size_t i = 0; i < p.masses.size(); ++i) sum += std::abs(p.masses[i] - q.masses[i]);
    return 0.5 * sum;
}

double mae_hist(const Histogram& p, const Histogram& q) {
    check_same_edges(p, q);
    double sum = 0.0;
    for (size_t i = 0; i < p.masses.size(); ++i) {
        double w = p.bin_edges[i + 1] - p.bin_edges[i];
        sum += std::abs(p.masses[i] - q.masses[i]) / w;
    }
    return sum / static_cast<double>(p.masses.size());
}

namespace {

// Exact min-cost assignment via shortest augmenting paths with potentials.
double assignment_cost(const std::vector<Vec>& cost) {
    int n = static_cast<int>(cost.size());
    const double kInf = std::numeric_limits<double>::infinity();
    Vec u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(n) + 1, 0.0);
    std::vector<int> match(static_cast<size_t>(n) + 1, 0), way(static_cast<size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        Vec minv(static_cast<size_t>(n) + 1, kInf);
        std::vector<char> used(static_cast<size_t>(n) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            int i0 = match[static_cast<size_t>(j0)], j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                double cur = cost[static_cast<size_t>(i0 - 1)][static_cast<size_t>(j - 1)] -
                             u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<size_t>(j0)] != 0);
        do {
            int j1 = way[static_cast<size_t>(j0)];
            match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j)
        total += cost[static_cast<size_t>(match[static_cast<size_t>(j)] - 1)][static_cast<size_t>(j - 1)];
    return total;
}

std::vector<Vec> squared_cost_matrix(const SampleSet& a, const SampleSet& b) {
    size_t n = a.size();
    std::vector<Vec> cost(n, Vec(n, 0.0));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (size_t k = 0; k < a.configurations[i].size(); ++k) {
                double d = a.configurations[i][k] - b.configurations[j][k];
                s += d * d;
            }
            cost[i][j] = s;
        }
    }
    return cost;
}

// Log-domain Sinkhorn with uniform marginals; returns the entropic transport
// cost (not debiased). Used above the exact-assignment size limit.
double sinkhorn_cost(const std::vector<Vec>& cost, double eps, int max_iter) {
    size_t n = cost.size();
    Vec f(n, 0.0), g(n, 0.0);
    double log_a = -std::log(static_cast<double>(n));
    auto lse_row = [&](size_t i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < n; ++j)
            mx = std::max(mx, (g[j] - cost[i][j]) / eps);
        double s = 0.0;
        for (size_t j = 0; j < n; ++j) s += std::exp((g[j] - cost[i][j]) / eps - mx);
        return mx + std::log(s);
    };
    auto lse_col = [&](size_t j) {
        double mx = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < n; ++i)
            mx = std::max(mx, (f[i] - cost[i][j]) / eps);
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) s += std::exp((f[i] - cost[i][j]) / eps - mx);
        return mx + std::log(s);
    };
    for (int it = 0; it < max_iter; ++it) {
        double change = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double nf = eps * (log_a - lse_row(i));
            change = std::max(change, std::abs(nf - f[i]));
            f[i] = nf;
        }
        for (size_t j = 0; j < n; ++j) g[j] = eps * (log_a - lse_col(j));
        if (change < 1e-9 * eps) break;
    }
    double total = 0.0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            total += std::exp((f[i] + g[j] - cost[i][j]) / eps) * cost[i][j];
    return total;
}

} // namespace

double wasserstein2(const SampleSet& a, const SampleSet& b) {
    constexpr size_t kExactLimit = 512;
    if (a.dim() != b.dim())
        throw std::invalid_argument("wasserstein2: sample sets have different dimension");
    if (a.size() == 0 || b.size() == 0)
        throw DataError("wasserstein2: empty sample set");
    size_t n = a.size();
    if (n <= kExactLimit) {
        if (b.size() != n)
            throw std::invalid_argument("wasserstein2 exact mode requires equal sizes");
        auto cost = squared_cost_matrix(a, b);
        return std::sqrt(assignment_cost(cost) / static_cast<double>(n));
    }
    if (b.size() != n)
        throw std::invalid_argument("wasserstein2 requires equal sample counts");
    auto cost = squared_cost_matrix(a, b);
    Vec flat;
    flat.reserve(n * n);
    for (const Vec& row : cost) flat.insert(flat.end(), row.begin(), row.end());
    std::nth_element(flat.begin(), flat.begin() + static_cast<long>(flat.size() / 2), flat.end());
    double median = flat[flat.size() / 2];
    double eps = 0.01 * std::max(median, 1e-12);
    // The entropic plan carries total mass 1, so its cost is already a mean.
    return std::sqrt(sinkhorn_cost(cost, eps, 500));
}

double wasserstein2_1d(Vec a, Vec b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("wasserstein2_1d requires non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    // exact quantile coupling: integrate (F^-1(u) - G^-1(u))^2 over u in [0,1]
    size_t n = a.size(), m = b.size();
    size_t i = 0, j = 0;
    long double s = 0.0L, pos = 0.0L;
    long double scale = static_cast<long double>(n) * m;
    while (i < n && j < m) {
        unsigned long long ca = static_cast<unsigned long long>(i + 1) * m;
        unsigned long long cb = static_cast<unsigned long long>(j + 1) * n;
        long double next = static_cast<long double>(std::min(ca, cb)) / scale;
        long double d = a[i] - b[j];
        s += d * d * (next - pos);
        pos = next;
        if (ca <= cb) ++i;
        if (cb <= ca) ++j;
    }
    return static_cast<double>(std::sqrt(s));
}

std::vector<Bond> bonds_from_frame(std::span<const double> frame, int n_particles,
                                   double cutoff) {
    if (n_particles < 2) throw DataError("bond extraction needs >= 2 particles");
    int d = static_cast<int>(frame.size()) / n_particles;
    if (d * n_particles != static_cast<int>(frame.size()))
        throw std::invalid_argument("frame length not divisible by particle count");
    std::vector<Bond> bonds;
    for (int i = 0; i < n_particles; ++i) {
        for (int j = i + 1; j < n_particles; ++j) {
            double r2 = 0.0;
            for (int k = 0; k < d; ++k) {
                double diff = frame[static_cast<size_t>(i * d + k)] - frame[static_cast<size_t>(j * d + k)];
                r2 += diff * diff;
            }
            double r = std::sqrt(r2);
            if (r < cutoff) bonds.push_back({i, j, r});
        }
    }
    return bonds;
}

StabilityResult stability_check(std::span<const double> config,
                                const std::vector<Bond>& bonds, double threshold) {
    if (bonds.empty()) throw DataError("stability_check: empty bond list");
    StabilityResult res;
    int n = 0;
    for (const Bond& b : bonds) n = std::max({n, b.i + 1, b.j + 1});
    int d = static_cast<int>(config.size()) / n;
    if (d < 1 || d * n > static_cast<int>(config.size()))
        throw std::out_of_range("stability_check: bond index out of configuration range");
    for (const Bond& b : bonds) {
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) {
            double diff = config[static_cast<size_t>(b.i * d + k)] - config[static_cast<size_t>(b.j * d + k)];
            r2 += diff * diff;
        }
        double dev = std::abs(std::sqrt(r2) - b.length);
        if (dev > res.deviation) {
            res.deviation = dev;
            res.i = b.i;
            res.j = b.j;
        }
    }
    res.stable = !(res.deviation > threshold);
    return res;
}

Histogram energy_hist(const SampleSet& samples, const PotentialSystem& system,
                      std::span<const double> bin_edges, long* n_skipped) {
    if (samples.size() == 0) throw DataError("energy_hist: empty sample set");
    samples.validate();
    Histogram h;
    h.bin_edges.assign(bin_edges.begin(), bin_edges.end());
    h.masses.assign(h.bin_edges.size() - 1, 0.0);
    long skipped = 0;
    std::vector<double> energies;
    energies.reserve(samples.size());
    for (const Vec& c : samples.configurations) {
        try {
            energies.push_back(system.energy(c));
        } catch (const std::domain_error&) {
            ++skipped;
        }
    }
    if (n_skipped) *n_skipped = skipped;
    if (energies.empty()) throw DataError("energy_hist: every configuration was singular");
    double w = 1.0 / static_cast<double>(energies.size());
    for (double e : energies) {
        int bin = find_bin(h.bin_edges, e);
        if (bin < 0)
            h.overflow += w;
        else
            h.masses[static_cast<size_t>(bin)] += w;
    }
    return h;
}

} // namespace psm
