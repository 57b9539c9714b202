// SPDX-License-Identifier: Apache-2.0
#ifndef PSMLAB_SAMPLER_HPP
#define PSMLAB_SAMPLER_HPP

#include <functional>
#include <span>

#include "psmlab/net.hpp"
#include "psmlab/potential.hpp"
#include "psmlab/sample_set.hpp"
#include "psmlab/schedule.hpp"

namespace psm {

/// Batched score evaluator: X and S_out are B x dim row-major, one shared t.
/// Chains advance in lockstep so a network backend amortizes the evaluation.
using BatchScoreFn =
    std::function<void(const double* X, int B, double t, double* S_out)>;

/// Wraps a per-point analytic score.
BatchScoreFn analytic_score_fn(std::function<Vec(std::span<const double>)> score,
                               int dim);

/// Wraps a trained noise-prediction net: score = -eps_hat / sigma_t.
BatchScoreFn net_score_fn(const ScoreNet& net, const NoiseSchedule& schedule);

enum class SampleMethod { Euler, PC };

struct SamplerConfig {
    int n_steps = 1000;
    int n_samples = 0;
    SampleMethod method = SampleMethod::PC;
    double corrector_snr = 0.16;
    int corrector_steps_per_predictor = 1;
    std::uint64_t seed = 42;

    void validate() const;
};

struct MalaConfig {
    double step_size = 0.01;
    long n_burn_in = 0;
    long n_samples = 0;
    int thinning = 1;
    Vec init;
    std::uint64_t seed = 42;

    void validate() const;
};

struct MalaResult {
    SampleSet samples; // frames in chain order
    double acceptance_rate = 0.0;
    bool low_acceptance = false; // acceptance below 0.1 after burn-in
    double suggested_step_size = 0.0;
};

/// Metropolis-adjusted Langevin chain targeting exp(-E/kT). Frame order is
/// preserved so prefix splits reproduce early-trajectory bias.
MalaResult mala_sample(const PotentialSystem& system, const MalaConfig& cfg);

/// Euler-Maruyama integration of the reverse SDE from t=1 to t=0 on a uniform
/// grid; the final step omits noise.
SampleSet euler_reverse(const BatchScoreFn& score, const NoiseSchedule& schedule,
                        const SamplerConfig& cfg, int dim);

/// Predictor-corrector: each Euler predictor step is followed by Langevin
/// corrector steps with step size from the signal-to-noise convention
/// eta = 2 (snr * ||z|| / ||score||)^2.
SampleSet pc_sample(const BatchScoreFn& score, const NoiseSchedule& schedule,
                    const SamplerConfig& cfg, int dim);

/// score = -eps_hat / sigma_t.
Vec score_from_eps(std::span<const double> eps_hat, double sigma_t);

/// Probability-flow velocity from the score:
///   v = (alpha'/alpha) x + gamma (alpha' gamma / alpha - gamma') s
/// with gamma = sigma.
Vec score_to_velocity(std::span<const double> score, std::span<const double> x,
                      const NoiseSchedule& schedule, double t);

} // namespace psm

#endif
