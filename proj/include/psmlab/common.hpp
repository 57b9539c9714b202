// SPDX-License-Identifier: Apache-2.0
#ifndef PSMLAB_COMMON_HPP
#define PSMLAB_COMMON_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace psm {

// Error classes map onto CLI exit codes: ConfigError -> 2, DataError -> 3,
// NumericError -> 4. FormatError is a DataError raised by parsers.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FormatError : DataError {
    using DataError::DataError;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Vec = std::vector<double>;

// RNG stream derived from a base seed and a stream index, so independent
// chains get reproducible streams regardless of scheduling.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t s = stream ^ 0x9e3779b97f4a7c15ull;
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(s),
                      static_cast<std::uint32_t>(s >> 32)};
    return std::mt19937_64(seq);
}

// Worker cap: min(hardware, PSMLAB_THREADS). At least 1.
int worker_count();

// Runs fn(chunk) for chunk in [0, n_chunks). Chunks are a fixed unit of
// work; results merged by the caller in chunk order stay deterministic
// for any worker count.
void parallel_for_chunks(int n_chunks, const std::function<void(int)>& fn);

// FNV-1a over bytes; used for config/sample-set provenance hashes.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::uint64_t fnv1a64(const std::string& s);
std::string hex64(std::uint64_t v);

} // namespace psm

#endif
