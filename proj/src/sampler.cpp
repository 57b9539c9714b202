// SPDX-License-Identifier: Apache-2.0
#include "psmlab/sampler.hpp"

#include <cmath>
#include <iostream>

namespace psm {

void SamplerConfig::validate() const {
    if (n_steps < 1) throw ConfigError("sampler: n_steps must be >= 1");
    if (n_samples < 0) throw ConfigError("sampler: n_samples must be >= 0");
    if (method == SampleMethod::PC) {
        if (!(corrector_snr > 0.0))
            throw ConfigError("sampler: corrector_snr must be positive");
        if (corrector_steps_per_predictor < 1)
            throw ConfigError("sampler: corrector_steps_per_predictor must be >= 1");
    }
}

void MalaConfig::validate() const {
    if (!(step_size > 0.0)) throw ConfigError("mala: step_size must be positive");
    if (thinning < 1) throw ConfigError("mala: thinning must be >= 1");
    if (n_burn_in < 0) throw ConfigError("mala: n_burn_in must be >= 0");
    if (n_samples < 0) throw ConfigError("mala: n_samples must be >= 0");
    if (init.empty()) throw ConfigError("mala: init configuration required");
}

BatchScoreFn analytic_score_fn(std::function<Vec(std::span<const double>)> score,
                               int dim) {
    return [score = std::move(score), dim](const double* X, int B, double t,
                                           double* S_out) {
        (void)t;
        for (int b = 0; b < B; ++b) {
            Vec s = score(std::span<const double>(X + static_cast<size_t>(b) * dim,
                                                  static_cast<size_t>(dim)));
            std::copy(s.begin(), s.end(), S_out + static_cast<size_t>(b) * dim);
        }
    };
}

BatchScoreFn net_score_fn(const ScoreNet& net, const NoiseSchedule& schedule) {
    int dim = net.input_dim;
    return [&net, schedule, dim](const double* X, int B, double t, double* S_out) {
        net.forward_batch(X, B, t, S_out);
        double sigma = schedule.coeffs(t).sigma;
        if (!(sigma > 0.0))
            throw NumericError("net score requested at t with sigma_t <= 0");
        size_t n = static_cast<size_t>(B) * dim;
        for (size_t i = 0; i < n; ++i) S_out[i] = -S_out[i] / sigma;
    };
}

MalaResult mala_sample(const PotentialSystem& system, const MalaConfig& cfg) {
    cfg.validate();
    if (static_cast<int>(cfg.init.size()) != system.dim())
        throw std::invalid_argument("mala: init dimension does not match system");
    if (!system.in_domain(cfg.init))
        throw ConfigError("mala: init configuration is outside the domain");

    const double eps = cfg.step_size;
    const double kT = system.kT();
    const int dim = system.dim();

    std::mt19937_64 rng = make_rng(cfg.seed, 0x6d616c61ull);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Vec x = cfg.init;
    double e_x = system.energy(x);
    Vec f_x = system.force(x);

    // log density of the proposal kernel N(from + eps*F(from)/kT, 2 eps I)
    // up to the constant that cancels in the Metropolis ratio
    auto log_q = [&](const Vec& to, const Vec& from, const Vec& f_from) {
        double s = 0.0;
        for (int i = 0; i < dim; ++i) {
            double d = to[i] - from[i] - eps * f_from[i] / kT;
            s += d * d;
        }
        return -s / (4.0 * eps);
    };

    MalaResult result;
    result.samples.n_particles = system.n_particles();
    result.samples.spatial_dim = system.spatial_dim();
    result.samples.configurations.reserve(static_cast<size_t>(cfg.n_samples));
    result.samples.energies.reserve(static_cast<size_t>(cfg.n_samples));

    long total_steps = cfg.n_burn_in + cfg.n_samples * static_cast<long>(cfg.thinning);
    long accepted = 0, proposed = 0;
    Vec prop(dim);

    for (long step = 0; step < total_steps; ++step) {
        for (int i = 0; i < dim; ++i)
            prop[i] = x[i] + eps * f_x[i] / kT + std::sqrt(2.0 * eps) * normal(rng);
        bool post_burn = step >= cfg.n_burn_in;
        if (post_burn) ++proposed;
        bool accept = false;
        if (system.in_domain(prop)) {
            try {
                double e_p = system.energy(prop);
                Vec f_p = system.force(prop);
                double log_ratio = -(e_p - e_x) / kT + log_q(x, prop, f_p) -
                                   log_q(prop, x, f_x);
                if (std::isfinite(log_ratio) &&
                    (log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio)) {
                    x = prop;
                    e_x = e_p;
                    f_x = std::move(f_p);
                    accept = true;
                }
            } catch (const std::domain_error&) {
                // singular proposal, reject
            }
        }
        if (post_burn && accept) ++accepted;
        if (post_burn && (step - cfg.n_burn_in + 1) % cfg.thinning == 0) {
            result.samples.configurations.push_back(x);
            result.samples.energies.push_back(e_x);
        }
    }

    result.acceptance_rate =
        proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed)
                     : 1.0;
    if (proposed > 0 && result.acceptance_rate < 0.1) {
        result.low_acceptance = true;
        result.suggested_step_size =
            eps * std::max(result.acceptance_rate, 1e-3) / 0.574;
        std::cerr << "warning: MALA acceptance rate " << result.acceptance_rate
                  << " below 0.1; try step_size " << result.suggested_step_size
                  << "\n";
    }
    return result;
}

namespace {

struct ReverseState {
    std::vector<double> x;                // B x dim
    std::vector<double> s;                // B x dim
    std::vector<std::mt19937_64> rngs;    // one per chain
};

ReverseState init_reverse(const NoiseSchedule& schedule, const SamplerConfig& cfg,
                          int dim) {
    ReverseState st;
    int B = cfg.n_samples;
    st.x.resize(static_cast<size_t>(B) * dim);
    st.s.resize(static_cast<size_t>(B) * dim);
    st.rngs.reserve(static_cast<size_t>(B));
    double prior = schedule.prior_std();
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int b = 0; b < B; ++b) {
        st.rngs.push_back(make_rng(cfg.seed, static_cast<std::uint64_t>(b)));
        for (int i = 0; i < dim; ++i)
            st.x[static_cast<size_t>(b) * dim + i] = prior * normal(st.rngs[b]);
    }
    return st;
}

void check_finite(const std::vector<double>& x, int step) {
    for (double v : x)
        if (!std::isfinite(v))
            throw NumericError("reverse sampler: non-finite state at step " +
                               std::to_string(step));
}

SampleSet collect(const ReverseState& st, int dim, int B) {
    SampleSet out;
    out.n_particles = 1;
    out.spatial_dim = dim;
    out.configurations.reserve(static_cast<size_t>(B));
    for (int b = 0; b < B; ++b)
        out.configurations.emplace_back(st.x.begin() + static_cast<long>(b) * dim,
                                        st.x.begin() + static_cast<long>(b + 1) * dim);
    return out;
}

// Euler-Maruyama step of the reverse SDE from t to t - dt; with_noise=false
// on the final step.
void predictor_step(ReverseState& st, const BatchScoreFn& score,
                    const NoiseSchedule& schedule, int dim, int B, double t,
                    double dt, bool with_noise) {
    score(st.x.data(), B, t, st.s.data());
    auto [drift_scale, g] = schedule.sde_coeffs(t);
    double g2 = g * g;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int b = 0; b < B; ++b) {
        size_t off = static_cast<size_t>(b) * dim;
        for (int i = 0; i < dim; ++i) {
            double drift = drift_scale * st.x[off + i] - g2 * st.s[off + i];
            st.x[off + i] -= drift * dt;
            if (with_noise)
                st.x[off + i] += g * std::sqrt(dt) * normal(st.rngs[b]);
        }
    }
}

// Langevin corrector at fixed t: x += eta * s + sqrt(2 eta) z. The step size
// eta = 2 (snr ||z|| / ||s||)^2 uses norms averaged over the batch, so one
// near-zero per-chain score cannot blow up its step.
void corrector_step(ReverseState& st, const BatchScoreFn& score, int dim, int B,
                    double t, double snr) {
    score(st.x.data(), B, t, st.s.data());
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(static_cast<size_t>(B) * dim);
    double z_norm = 0.0, s_norm = 0.0;
    for (int b = 0; b < B; ++b) {
        size_t off = static_cast<size_t>(b) * dim;
        double z2 = 0.0, s2 = 0.0;
        for (int i = 0; i < dim; ++i) {
            z[off + i] = normal(st.rngs[b]);
            z2 += z[off + i] * z[off + i];
            s2 += st.s[off + i] * st.s[off + i];
        }
        z_norm += std::sqrt(z2);
        s_norm += std::sqrt(s2);
    }
    z_norm /= B;
    s_norm /= B;
    if (s_norm <= 0.0) return; // zero score: no informative corrector move
    double eta = 2.0 * snr * snr * z_norm * z_norm / (s_norm * s_norm);
    double noise_scale = std::sqrt(2.0 * eta);
    for (size_t i = 0; i < z.size(); ++i)
        st.x[i] += eta * st.s[i] + noise_scale * z[i];
}

SampleSet run_reverse(const BatchScoreFn& score, const NoiseSchedule& schedule,
                      const SamplerConfig& cfg, int dim, bool correct) {
    cfg.validate();
    schedule.validate();
    int B = cfg.n_samples;
    if (B == 0) {
        SampleSet empty;
        empty.n_particles = 1;
        empty.spatial_dim = dim;
        return empty;
    }
    ReverseState st = init_reverse(schedule, cfg, dim);
    double dt = 1.0 / cfg.n_steps;
    for (int k = 0; k < cfg.n_steps; ++k) {
        double t = 1.0 - k * dt;
        if (correct)
            for (int c = 0; c < cfg.corrector_steps_per_predictor; ++c)
                corrector_step(st, score, dim, B, t, cfg.corrector_snr);
        bool last = k == cfg.n_steps - 1;
        predictor_step(st, score, schedule, dim, B, t, dt, !last);
        check_finite(st.x, k);
    }
    return collect(st, dim, B);
}

} // namespace

SampleSet euler_reverse(const BatchScoreFn& score, const NoiseSchedule& schedule,
                        const SamplerConfig& cfg, int dim) {
    return run_reverse(score, schedule, cfg, dim, false);
}

SampleSet pc_sample(const BatchScoreFn& score, const NoiseSchedule& schedule,
                    const SamplerConfig& cfg, int dim) {
    return run_reverse(score, schedule, cfg, dim, true);
}

Vec score_from_eps(std::span<const double> eps_hat, double sigma_t) {
    if (!(sigma_t > 0.0))
        throw std::domain_error("score_from_eps: sigma_t must be positive");
    Vec out(eps_hat.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = -eps_hat[i] / sigma_t;
    return out;
}

Vec score_to_velocity(std::span<const double> score, std::span<const double> x,
                      const NoiseSchedule& schedule, double t) {
    if (score.size() != x.size())
        throw std::invalid_argument("score_to_velocity: mismatched shapes");
    Vec v(score.size());
    if (schedule.kind == ScheduleKind::VE) {
        if (t < 0.0 || t > 1.0)
            throw std::domain_error("score_to_velocity: t must lie in [0, 1]");
        double lr = std::log(schedule.sigma_max / schedule.sigma_min);
        double c = schedule.sigma_min * schedule.sigma_min *
                   std::pow(schedule.sigma_max / schedule.sigma_min, 2.0 * t) * lr;
        for (size_t i = 0; i < v.size(); ++i) v[i] = c * score[i];
    } else {
        if (!(t > 0.0 && t < 1.0))
            throw std::domain_error(
                "score_to_velocity: VP conversion is singular at t = 0 and 1");
        double beta = schedule.beta_min + (schedule.beta_max - schedule.beta_min) * t;
        double gamma = schedule.coeffs(t).sigma;
        double B = schedule.beta_min * t +
                   0.5 * (schedule.beta_max - schedule.beta_min) * t * t;
        double gamma_dot = beta * std::exp(-B) / (2.0 * gamma);
        double c = gamma * (-0.5 * beta * gamma - gamma_dot);
        for (size_t i = 0; i < v.size(); ++i)
            v[i] = -0.5 * beta * x[i] + c * score[i];
    }
    return v;
}

} // namespace psm
