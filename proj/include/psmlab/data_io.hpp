// SPDX-License-Identifier: Apache-2.0
#ifndef PSMLAB_DATA_IO_HPP
#define PSMLAB_DATA_IO_HPP

#include <string>
#include <utility>

#include "psmlab/common.hpp"
#include "psmlab/sample_set.hpp"

namespace psm {

/// Ordered trajectory frames with optional force/energy/species labels.
/// Each frame is a flattened n_particles x spatial_dim coordinate vector.
struct TrajectoryDataset {
    std::vector<Vec> positions;
    std::vector<Vec> forces; // empty or same shape as positions
    Vec energies;            // empty or one per frame
    std::vector<long> atomic_numbers;
    int n_particles = 0;
    int spatial_dim = 0;

    size_t n_frames() const { return positions.size(); }
    bool has_forces() const { return !forces.empty(); }
    void validate() const;
};

/// NPZ archive with entries R (positions, T x n x d), F (forces, optional),
/// E (energies, optional), z (atomic numbers, optional). Float arrays may be
/// <f4 or <f8, integers <i4 or <i8; C-order little-endian only. ZIP entries
/// may be stored or deflated.
TrajectoryDataset read_npz(const std::string& path);

/// Writes f8/i8 stored (uncompressed) entries; omits empty optional fields.
void write_npz(const std::string& path, const TrajectoryDataset& dataset);

enum class SplitMode { FirstK, RandomFraction };

struct SplitSpec {
    SplitMode mode = SplitMode::FirstK;
    long k = 0;            // FirstK
    double fraction = 0.1; // RandomFraction, in (0, 1]
    std::uint64_t seed = 42;

    void validate() const;
};

/// FirstK: train = frames [0, k), holdout = the rest. RandomFraction: a
/// seeded without-replacement selection; frame order is preserved in both
/// parts.
std::pair<TrajectoryDataset, TrajectoryDataset> make_split(
    const TrajectoryDataset& dataset, const SplitSpec& spec);

/// CSV with header p0_x,p0_y,p0_z,p1_x,... (axes truncated to spatial_dim).
void write_sample_csv(const std::string& path, const SampleSet& samples);
SampleSet read_sample_csv(const std::string& path, int n_particles,
                          int spatial_dim);

} // namespace psm

#endif
