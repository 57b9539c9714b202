// SPDX-License-Identifier: Apache-2.0
#ifndef PSMLAB_COMMANDS_HPP
#define PSMLAB_COMMANDS_HPP

#include <string>

#include "psmlab/config.hpp"

namespace psm {

/// Artifact layout inside output_dir.
struct RunPaths {
    std::string dir;
    std::string reference() const { return dir + "/reference.npz"; }
    std::string reference_sidecar() const { return dir + "/reference.npz.json"; }
    std::string checkpoint() const { return dir + "/checkpoint.json"; }
    std::string loss_csv() const { return dir + "/loss.csv"; }
    std::string samples() const { return dir + "/samples.csv"; }
    std::string samples_sidecar() const { return dir + "/samples.csv.json"; }
    std::string metrics() const { return dir + "/metrics.json"; }
    std::string check_report() const { return dir + "/check_report.json"; }
    std::string manifest(const std::string& command) const {
        return dir + "/manifest_" + command + ".json";
    }
};

/// Starting configuration for MALA when the config leaves init empty:
/// the well mean for gauss, zeros for quartic, a relaxed cluster for lj.
Vec default_init(const PotentialSystem& system);

/// Serialized training state: network parameters (current and best-loss),
/// optimizer moments, rng stream, and completed epoch count.
struct Checkpoint {
    int version = 1;
    std::uint64_t model_hash = 0;
    int input_dim = 0;
    NetSpec net;
    Vec params;
    Vec best_params;
    int best_epoch = -1;
    double best_loss = 0.0;
    Vec loss_history;
    Vec probe_history;
    AdamState adam;
    std::string rng_state;
    int epoch_done = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Generate the MALA reference trajectory with force/energy labels.
/// strict: low MALA acceptance becomes a hard failure.
int cmd_reference(const RunConfig& cfg, bool strict);

/// Train on the (split) reference data; resume_path continues an earlier
/// checkpoint. Writes checkpoint + per-epoch loss CSV.
int cmd_train(const RunConfig& cfg, const std::string& resume_path = "");

/// Sample from the best-loss checkpoint; refuses a model-hash mismatch
/// unless force.
int cmd_sample(const RunConfig& cfg, bool force);

/// Compare generated samples against the reference; writes metrics JSON and
/// histogram CSVs.
int cmd_eval(const RunConfig& cfg);

/// Self-check suite (force consistency, closed forms, Monte-Carlo and
/// quadrature oracles, gradient check). Nonzero exit on any failure.
int cmd_check(const RunConfig& cfg);

} // namespace psm

#endif
