// SPDX-License-Identifier: Apache-2.0
#ifndef PSMLAB_NET_HPP
#define PSMLAB_NET_HPP

#include <span>
#include <string>
#include <vector>

#include "psmlab/common.hpp"

namespace psm {

/// Sinusoidal embedding of scalar diffusion time: interleaved sin/cos pairs
/// at geometrically spaced frequencies from min_freq to max_freq.
struct TimeEmbedding {
    int dim = 64; // even
    double min_freq = 1.0;
    double max_freq = 1000.0;

    void write(double t, double* out) const;
};

struct Linear {
    int in = 0;
    int out = 0;
    Vec W; // row-major, out x in
    Vec b;
};

/// Noise-prediction MLP eps_theta(x_t, t). Input is x_t concatenated with the
/// time embedding; hidden layers use SiLU; output dimension equals input_dim.
class ScoreNet {
public:
    int input_dim = 0;
    std::vector<int> hidden_dims;
    TimeEmbedding embed;
    std::vector<Linear> layers;

    static ScoreNet create(int input_dim, std::vector<int> hidden_dims,
                           int time_embed_dim, std::uint64_t seed);

    Vec forward(std::span<const double> x, double t) const;

    /// Lockstep batch: X is B x input_dim row-major, one shared t.
    void forward_batch(const double* X, int B, double t, double* out) const;

    size_t n_params() const;
    Vec get_params() const;
    void set_params(std::span<const double> params);

    void assert_finite(const std::string& where) const;
};

struct GradResult {
    double loss = 0.0;
    Vec grads; // flat, layer by layer: W then b
};

/// Mean over the batch of weight[i] * ||forward(x[i], t[i]) - target[i]||^2
/// and its parameter gradient by reverse-mode differentiation.
GradResult net_grad(const ScoreNet& net, const std::vector<Vec>& x, const Vec& t,
                    const std::vector<Vec>& target, const Vec& weight);

struct AdamState {
    long step = 0;
    Vec first_moment;
    Vec second_moment;
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 5e-7; // decoupled
    long total_steps = 0;       // cosine decay horizon; 0 keeps lr constant

    static AdamState init(const ScoreNet& net, double lr, double weight_decay,
                          long total_steps = 0);
    double current_lr() const;
};

/// One Adam update with decoupled weight decay and cosine lr decay.
void adam_step(AdamState& state, ScoreNet& net, std::span<const double> grads);

} // namespace psm

#endif
