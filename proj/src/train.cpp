// SPDX-License-Identifier: Apache-2.0
#include "psmlab/train.hpp"

#include <algorithm>
#include <cmath>

namespace psm {

void LossSpec::validate() const {
    if (variant == LossVariant::Piecewise && !(t_p > 0.0 && t_p < 1.0))
        throw ConfigError("piecewise boundary t_p must lie in (0, 1)");
    if (variant == LossVariant::PiecewiseWeighted) {
        if (!(omega_slope > 0.0)) throw ConfigError("omega slope must be positive");
        if (!(omega_cutoff > 0.0 && omega_cutoff <= 1.0))
            throw ConfigError("omega cutoff must lie in (0, 1]");
    }
}

double omega(const LossSpec& spec, double t) {
    if (t >= spec.omega_cutoff) return 0.0;
    return 1.0 / (1.0 + std::exp(spec.omega_slope * (t - spec.omega_center)));
}

Vec target_epsilon(const LossSpec& spec, const NoiseSchedule& schedule,
                   std::span<const double> x0, std::span<const double> x_t,
                   std::span<const double> noise, std::span<const double> force,
                   double t, double kT) {
    if (!(kT > 0.0)) throw ConfigError("kT must be positive");
    if (x0.size() != x_t.size() || x0.size() != noise.size())
        throw std::invalid_argument("target_epsilon: mismatched shapes");

    auto psm_target = [&](Vec& out) {
        if (force.size() != x0.size())
            throw std::invalid_argument("target_epsilon: force label has wrong shape");
        auto [alpha, sigma] = schedule.coeffs(t);
        for (size_t i = 0; i < out.size(); ++i)
            out[i] = -(sigma / alpha) * force[i] / kT;
    };

    Vec out(x0.size());
    switch (spec.variant) {
        case LossVariant::DSM:
            std::copy(noise.begin(), noise.end(), out.begin());
            break;
        case LossVariant::PSM:
            psm_target(out);
            break;
        case LossVariant::Piecewise:
            if (t < spec.t_p) {
                psm_target(out);
            } else {
                std::copy(noise.begin(), noise.end(), out.begin());
            }
            break;
        case LossVariant::PiecewiseWeighted: {
            psm_target(out);
            double w = omega(spec, t);
            for (size_t i = 0; i < out.size(); ++i)
                out[i] = (1.0 - w) * noise[i] + w * out[i];
            break;
        }
    }
    return out;
}

void TrainConfig::validate() const {
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    schedule.validate();
    loss.validate();
}

TrainState make_train_state(const TrainConfig& config, const ScoreNet& net,
                            long steps_per_epoch_hint) {
    TrainState st;
    long total_steps = 0;
    if (config.cosine_lr && steps_per_epoch_hint > 0)
        total_steps = steps_per_epoch_hint * config.epochs;
    st.adam = AdamState::init(net, config.lr, config.weight_decay, total_steps);
    st.rng = make_rng(config.seed, 0x747261696eull);
    return st;
}

TrainResult train_run(const TrainConfig& config, const TrainData& data,
                      ScoreNet& net, TrainState& state) {
    config.validate();
    if (data.x0.empty()) throw DataError("training dataset is empty");
    bool needs_forces = config.loss.variant != LossVariant::DSM;
    if (needs_forces && data.force.size() != data.x0.size())
        throw ConfigError("loss variant requires force labels for every sample");

    size_t n = data.x0.size();
    size_t batch = std::min<size_t>(static_cast<size_t>(config.batch_size), n);
    size_t steps_per_epoch = (n + batch - 1) / batch;

    TrainResult result;
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    // fixed probe batch for epoch selection; derived from the config seed so
    // a resumed run rebuilds the identical probe. The probe always scores
    // against the noise target: it has the same minimizer as any variant but
    // a bounded noise floor, unlike force-scaled targets at large sigma.
    size_t probe_n = 1024;
    std::vector<Vec> probe_x(probe_n), probe_y(probe_n);
    Vec probe_t(probe_n);
    {
        // local distributions: normal_distribution caches a spare draw, so
        // sharing the training ones would desync a resumed run
        std::mt19937_64 prng = make_rng(config.seed, 0x70726f6265ull);
        std::uniform_int_distribution<size_t> pick(0, n - 1);
        std::uniform_real_distribution<double> punif(0.0, 1.0);
        std::normal_distribution<double> pnormal(0.0, 1.0);
        for (size_t k = 0; k < probe_n; ++k) {
            const Vec& x0 = data.x0[pick(prng)];
            double t = punif(prng);
            Vec noise(x0.size());
            for (double& z : noise) z = pnormal(prng);
            probe_x[k] = config.schedule.perturb(x0, t, noise);
            probe_t[k] = t;
            probe_y[k] = std::move(noise);
        }
    }
    auto probe_eval = [&]() {
        long double acc = 0.0L;
        for (size_t k = 0; k < probe_n; ++k) {
            Vec out = net.forward(probe_x[k], probe_t[k]);
            for (size_t i = 0; i < out.size(); ++i) {
                double d = out[i] - probe_y[k][i];
                acc += d * d;
            }
        }
        return static_cast<double>(acc / probe_n);
    };

    std::vector<Vec> xs(batch), targets(batch);
    Vec ts(batch), weights(batch, 1.0); // lambda(t) = 1

    for (int epoch = state.epoch_done; epoch < config.epochs; ++epoch) {
        // restart from the identity so the permutation, like the noise draws,
        // is a pure function of the rng state (resume replays exactly)
        for (size_t i = 0; i < n; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), state.rng);
        normal.reset(); // drop the cached spare for the same reason
        double epoch_loss = 0.0;
        size_t epoch_count = 0;
        for (size_t step = 0; step < steps_per_epoch; ++step) {
            size_t lo = step * batch;
            size_t hi = std::min(n, lo + batch);
            size_t bsz = hi - lo;
            for (size_t k = 0; k < bsz; ++k) {
                size_t idx = order[lo + k];
                const Vec& x0 = data.x0[idx];
                double t = unif(state.rng);
                Vec noise(x0.size());
                for (double& z : noise) z = normal(state.rng);
                xs[k] = config.schedule.perturb(x0, t, noise);
                ts[k] = t;
                static const Vec kNoForce;
                const Vec& force = needs_forces ? data.force[idx] : kNoForce;
                targets[k] = target_epsilon(config.loss, config.schedule, x0, xs[k],
                                            noise, force, t, data.kT);
            }
            std::vector<Vec> bx(xs.begin(), xs.begin() + static_cast<long>(bsz));
            std::vector<Vec> bt(targets.begin(), targets.begin() + static_cast<long>(bsz));
            Vec btt(ts.begin(), ts.begin() + static_cast<long>(bsz));
            Vec bw(weights.begin(), weights.begin() + static_cast<long>(bsz));
            GradResult g = net_grad(net, bx, btt, bt, bw);
            if (!std::isfinite(g.loss))
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                                   " step " + std::to_string(step));
            adam_step(state.adam, net, g.grads);
            epoch_loss += g.loss;
            ++epoch_count;
        }
        double mean_loss = epoch_loss / static_cast<double>(epoch_count);
        result.epoch_loss.push_back(mean_loss);
        double pl = probe_eval();
        result.probe_loss.push_back(pl);
        result.best_epoch = epoch;
        result.best_loss = pl;
        state.epoch_done = epoch + 1;
    }
    result.best_params = net.get_params();
    return result;
}

TrainResult train_run(const TrainConfig& config, const TrainData& data, ScoreNet& net) {
    size_t n = data.x0.empty() ? 1 : data.x0.size();
    size_t batch = std::min<size_t>(static_cast<size_t>(std::max(config.batch_size, 1)), n);
    TrainState state = make_train_state(config, net, static_cast<long>((n + batch - 1) / batch));
    return train_run(config, data, net, state);
}

} // namespace psm
