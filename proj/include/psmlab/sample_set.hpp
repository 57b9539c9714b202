// SPDX-License-Identifier: Apache-2.0
#ifndef PSMLAB_SAMPLE_SET_HPP
#define PSMLAB_SAMPLE_SET_HPP

#include <vector>

#include "psmlab/common.hpp"

namespace psm {

/// Batch of configurations, each a flattened coordinate vector of length
/// n_particles * spatial_dim. Energies are optional (empty when absent).
struct SampleSet {
    std::vector<Vec> configurations;
    int n_particles = 1;
    int spatial_dim = 1;
    Vec energies;

    int dim() const { return n_particles * spatial_dim; }
    size_t size() const { return configurations.size(); }

    void validate() const {
        for (const Vec& c : configurations)
            if (static_cast<int>(c.size()) != dim())
                throw std::invalid_argument(
                    "sample set: configuration dimension does not match "
                    "n_particles * spatial_dim");
    }

    std::uint64_t content_hash() const;
};

} // namespace psm

#endif
