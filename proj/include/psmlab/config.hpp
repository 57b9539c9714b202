// SPDX-License-Identifier: Apache-2.0
#ifndef PSMLAB_CONFIG_HPP
#define PSMLAB_CONFIG_HPP

#include <memory>
#include <string>

#include "psmlab/data_io.hpp"
#include "psmlab/metrics.hpp"
#include "psmlab/potential.hpp"
#include "psmlab/sampler.hpp"
#include "psmlab/train.hpp"

namespace psm {

struct NetSpec {
    std::vector<int> hidden_dims{64, 64};
    int time_embed_dim = 32;

    void validate() const;
};

/// Which system a run targets: an analytic potential ("lj", "gauss",
/// "quartic") or an external trajectory archive ("dataset").
struct SystemSpec {
    std::string kind = "gauss";
    double kT = 1.0;
    // lj
    int n_particles = 13;
    double r_m = 1.0;
    double tau = 1.0;
    bool oscillator = true;
    // gauss
    int dim = 1;
    double sigma_tar = 1.0;
    Vec mean;
    // quartic
    int d = 1;
    double box_half_width = 2.0;
    // dataset
    std::string dataset_path;

    bool analytic() const { return kind != "dataset"; }
    std::unique_ptr<PotentialSystem> make() const;
    void validate() const;
};

struct MetricsSpec {
    double hist_lo = 0.5;
    double hist_hi = 3.0;
    int hist_bins = 100;
    double bond_cutoff = 1.8;
    double stability_threshold = 0.5;
    int w2_max_reference = 2048; // reference subsample cap for W-2

    void validate() const;
};

struct RunConfig {
    SystemSpec system;
    NoiseSchedule schedule; // VE(0.1, 5) by default
    LossSpec loss;
    int epochs = 2000;
    int batch_size = 64;
    double lr = 2e-4;
    double weight_decay = 5e-7;
    bool cosine_lr = true;
    NetSpec net;
    SamplerConfig sampler;
    MalaConfig mala;
    SplitSpec split;
    MetricsSpec metrics;
    std::string output_dir = "out";
    std::uint64_t seed = 42;
    std::string preset; // provenance only

    void validate() const;
    TrainConfig train_config() const;
};

/// Defaults, overlaid by the named preset (if any), overlaid by the JSON
/// config file (if any). Unknown keys are rejected.
RunConfig load_run_config(const std::string& config_path,
                          const std::string& preset_name);

std::vector<std::string> preset_names();

/// Canonical JSON rendering (sorted keys, full field set) and its hash.
std::string canonical_json(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);

/// Hash over the fields that determine a trained model (system, schedule,
/// loss, net, optimizer, split, seed); sampling settings excluded.
std::uint64_t model_hash(const RunConfig& cfg);

} // namespace psm

#endif
