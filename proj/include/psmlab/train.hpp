// SPDX-License-Identifier: Apache-2.0
#ifndef PSMLAB_TRAIN_HPP
#define PSMLAB_TRAIN_HPP

#include <optional>
#include <span>

#include "psmlab/net.hpp"
#include "psmlab/schedule.hpp"

namespace psm {

enum class LossVariant { DSM, PSM, Piecewise, PiecewiseWeighted };

/// Which target applies at each diffusion time. Piecewise uses the force
/// target on [0, t_p) and the noise target on [t_p, 1]; PiecewiseWeighted
/// blends them with omega(t).
struct LossSpec {
    LossVariant variant = LossVariant::DSM;
    double t_p = 0.05;
    double omega_slope = 50.0;
    double omega_center = 0.05;
    double omega_cutoff = 0.1;

    void validate() const;
};

/// Decreasing sigmoid blend weight: 1/(1 + exp(slope*(t - center))) below the
/// cutoff, exactly 0 at and above it.
double omega(const LossSpec& spec, double t);

/// Per-sample epsilon-space training target.
///   DSM:                noise
///   PSM:                -(sigma_t/alpha_t) * force / kT
///   Piecewise:          PSM target for t < t_p, else noise
///   PiecewiseWeighted:  (1 - omega) * noise + omega * PSM target
Vec target_epsilon(const LossSpec& spec, const NoiseSchedule& schedule,
                   std::span<const double> x0, std::span<const double> x_t,
                   std::span<const double> noise, std::span<const double> force,
                   double t, double kT);

/// Clean configurations with optional force labels (required for any
/// PSM-family loss).
struct TrainData {
    std::vector<Vec> x0;
    std::vector<Vec> force;
    double kT = 1.0;

    bool has_forces() const { return !force.empty(); }
};

struct TrainConfig {
    int epochs = 1;
    int batch_size = 64;
    std::uint64_t seed = 42;
    NoiseSchedule schedule;
    LossSpec loss;
    double lr = 2e-4;
    double weight_decay = 5e-7;
    bool cosine_lr = true;

    void validate() const;
};

/// Resumable loop state: rng stream and completed epoch count travel with
/// the checkpoint so a split run replays the unsplit one exactly.
struct TrainState {
    AdamState adam;
    std::mt19937_64 rng;
    int epoch_done = 0;
};

/// best_* holds the final-epoch parameters. With force-scaled targets the
/// per-epoch loss is dominated by target-draw noise, so its argmin lands on
/// an arbitrary plateau epoch whose parameters still carry SGD jitter; the
/// cosine-annealed final iterate is the low-noise one. probe_loss (a fixed
/// noise-target batch drawn once from the config seed) is recorded per epoch
/// as a variance-reduced convergence diagnostic.
struct TrainResult {
    Vec epoch_loss; // running training loss, one entry per epoch
    Vec probe_loss; // fixed-batch evaluation loss, one entry per epoch
    int best_epoch = -1;    // last epoch run, -1 if none
    double best_loss = 0.0; // probe loss at best_epoch
    Vec best_params;
};

TrainState make_train_state(const TrainConfig& config, const ScoreNet& net,
                            long steps_per_epoch_hint = -1);

/// Runs epochs [state.epoch_done, config.epochs). Per batch element: sample
/// t ~ U(0,1) and noise, perturb, build the target, take an Adam step on the
/// batch loss with lambda(t) = 1.
TrainResult train_run(const TrainConfig& config, const TrainData& data,
                      ScoreNet& net, TrainState& state);

/// Convenience wrapper running from a fresh state.
TrainResult train_run(const TrainConfig& config, const TrainData& data, ScoreNet& net);

} // namespace psm

#endif
