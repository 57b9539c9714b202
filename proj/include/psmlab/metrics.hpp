// SPDX-License-Identifier: Apache-2.0
#ifndef PSMLAB_METRICS_HPP
#define PSMLAB_METRICS_HPP

#include <span>
#include <vector>

#include "psmlab/potential.hpp"
#include "psmlab/sample_set.hpp"

namespace psm {

/// Binned distribution; masses sum to 1 over bins plus overflow.
struct Histogram {
    Vec bin_edges; // sorted, size = bins + 1
    Vec masses;    // size = bins
    double overflow = 0.0;

    void validate() const;
};

Vec uniform_edges(double lo, double hi, int n_bins);

/// Normalized distribution of all ordered interatomic distances pooled over
/// every configuration: per sample weight 1/(N(N-1)), across samples 1/|S|.
Histogram interatomic_hist(const SampleSet& samples, std::span<const double> bin_edges);

/// Half L1 distance between two histograms on identical edges.
double tvd(const Histogram& p, const Histogram& q);

/// Mean absolute difference of bin densities (mass / bin width).
double mae_hist(const Histogram& p, const Histogram& q);

/// Empirical 2-Wasserstein distance: exact assignment for |A| <= 512, entropic
/// approximation (epsilon = 0.01 * median cost) above.
double wasserstein2(const SampleSet& a, const SampleSet& b);

/// Exact 1D 2-Wasserstein via the quantile coupling.
double wasserstein2_1d(Vec a, Vec b);

struct Bond {
    int i;
    int j;
    double length;
};

/// Bond list convention: pairs closer than `cutoff` in the reference frame.
std::vector<Bond> bonds_from_frame(std::span<const double> frame, int n_particles,
                                   double cutoff = 1.8);

struct StabilityResult {
    bool stable = true;
    int i = -1;
    int j = -1;
    double deviation = 0.0;
};

/// Unstable iff some bonded pair deviates from its reference length by
/// strictly more than threshold.
StabilityResult stability_check(std::span<const double> config,
                                const std::vector<Bond>& bonds,
                                double threshold = 0.5);

/// Histogram of per-sample energies; singular configurations are skipped and
/// counted in *n_skipped when provided.
Histogram energy_hist(const SampleSet& samples, const PotentialSystem& system,
                      std::span<const double> bin_edges, long* n_skipped = nullptr);

} // namespace psm

#endif
