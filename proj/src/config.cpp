// SPDX-License-Identifier: Apache-2.0
#include "psmlab/config.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace psm {

using nlohmann::json;

void NetSpec::validate() const {
    if (hidden_dims.empty()) throw ConfigError("net: at least one hidden layer");
    for (int h : hidden_dims)
        if (h < 1) throw ConfigError("net: hidden width must be >= 1");
    if (time_embed_dim < 2 || time_embed_dim % 2 != 0)
        throw ConfigError("net: time_embed_dim must be even and >= 2");
}

void SystemSpec::validate() const {
    if (kind != "lj" && kind != "gauss" && kind != "quartic" && kind != "dataset")
        throw ConfigError("system: unknown kind '" + kind + "'");
    if (!(kT > 0.0)) throw ConfigError("system: kT must be positive");
    if (kind == "dataset" && dataset_path.empty())
        throw ConfigError("system: dataset kind requires dataset_path");
}

std::unique_ptr<PotentialSystem> SystemSpec::make() const {
    validate();
    std::unique_ptr<PotentialSystem> sys;
    if (kind == "lj")
        sys = std::make_unique<LennardJonesCluster>(n_particles, r_m, tau, oscillator);
    else if (kind == "gauss")
        sys = std::make_unique<GaussianWell>(dim, sigma_tar, mean);
    else if (kind == "quartic")
        sys = std::make_unique<QuarticToy>(d, box_half_width);
    else
        throw ConfigError("system: '" + kind + "' has no analytic potential");
    sys->set_kT(kT);
    return sys;
}

void MetricsSpec::validate() const {
    if (!(hist_hi > hist_lo)) throw ConfigError("metrics: empty histogram range");
    if (hist_bins < 1) throw ConfigError("metrics: hist_bins must be >= 1");
    if (!(bond_cutoff > 0.0)) throw ConfigError("metrics: bond_cutoff must be positive");
    if (!(stability_threshold > 0.0))
        throw ConfigError("metrics: stability_threshold must be positive");
    if (w2_max_reference < 1)
        throw ConfigError("metrics: w2_max_reference must be >= 1");
}

void RunConfig::validate() const {
    system.validate();
    schedule.validate();
    loss.validate();
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    net.validate();
    sampler.validate();
    // mala.init may still be empty here; commands fill a system default
    if (!(mala.step_size > 0.0)) throw ConfigError("mala: step_size must be positive");
    if (mala.thinning < 1) throw ConfigError("mala: thinning must be >= 1");
    split.validate();
    metrics.validate();
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

TrainConfig RunConfig::train_config() const {
    TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = batch_size;
    tc.seed = seed;
    tc.schedule = schedule;
    tc.loss = loss;
    tc.lr = lr;
    tc.weight_decay = weight_decay;
    tc.cosine_lr = cosine_lr;
    return tc;
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    if (!j.is_object())
        throw ConfigError("config: '" + where + "' must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = std::any_of(allowed.begin(), allowed.end(),
                              [&](const char* k) { return it.key() == k; });
        if (!ok)
            throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
void get(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config: bad value for '" + std::string(key) +
                              "': " + e.what());
        }
    }
}

// ---- field maps ------------------------------------------------------------

json to_json(const SystemSpec& s) {
    return json{{"kind", s.kind},
                {"kT", s.kT},
                {"n_particles", s.n_particles},
                {"r_m", s.r_m},
                {"tau", s.tau},
                {"oscillator", s.oscillator},
                {"dim", s.dim},
                {"sigma_tar", s.sigma_tar},
                {"mean", s.mean},
                {"d", s.d},
                {"box_half_width", s.box_half_width},
                {"dataset_path", s.dataset_path}};
}

void from_json_into(const json& j, SystemSpec& s) {
    check_keys(j,
               {"kind", "kT", "n_particles", "r_m", "tau", "oscillator", "dim",
                "sigma_tar", "mean", "d", "box_half_width", "dataset_path"},
               "system");
    get(j, "kind", s.kind);
    get(j, "kT", s.kT);
    get(j, "n_particles", s.n_particles);
    get(j, "r_m", s.r_m);
    get(j, "tau", s.tau);
    get(j, "oscillator", s.oscillator);
    get(j, "dim", s.dim);
    get(j, "sigma_tar", s.sigma_tar);
    get(j, "mean", s.mean);
    get(j, "d", s.d);
    get(j, "box_half_width", s.box_half_width);
    get(j, "dataset_path", s.dataset_path);
}

json to_json(const NoiseSchedule& s) {
    return json{{"kind", s.kind == ScheduleKind::VE ? "ve" : "vp"},
                {"sigma_min", s.sigma_min},
                {"sigma_max", s.sigma_max},
                {"beta_min", s.beta_min},
                {"beta_max", s.beta_max}};
}

void from_json_into(const json& j, NoiseSchedule& s) {
    check_keys(j, {"kind", "sigma_min", "sigma_max", "beta_min", "beta_max"},
               "schedule");
    std::string kind = s.kind == ScheduleKind::VE ? "ve" : "vp";
    get(j, "kind", kind);
    if (kind == "ve")
        s.kind = ScheduleKind::VE;
    else if (kind == "vp")
        s.kind = ScheduleKind::VP;
    else
        throw ConfigError("config: schedule kind must be 've' or 'vp'");
    get(j, "sigma_min", s.sigma_min);
    get(j, "sigma_max", s.sigma_max);
    get(j, "beta_min", s.beta_min);
    get(j, "beta_max", s.beta_max);
}

const char* variant_name(LossVariant v) {
    switch (v) {
        case LossVariant::DSM: return "dsm";
        case LossVariant::PSM: return "psm";
        case LossVariant::Piecewise: return "piecewise";
        case LossVariant::PiecewiseWeighted: return "piecewise_weighted";
    }
    return "dsm";
}

json to_json(const LossSpec& l) {
    return json{{"variant", variant_name(l.variant)},
                {"t_p", l.t_p},
                {"omega_slope", l.omega_slope},
                {"omega_center", l.omega_center},
                {"omega_cutoff", l.omega_cutoff}};
}

void from_json_into(const json& j, LossSpec& l) {
    check_keys(j, {"variant", "t_p", "omega_slope", "omega_center", "omega_cutoff"},
               "loss");
    std::string v = variant_name(l.variant);
    get(j, "variant", v);
    if (v == "dsm")
        l.variant = LossVariant::DSM;
    else if (v == "psm")
        l.variant = LossVariant::PSM;
    else if (v == "piecewise")
        l.variant = LossVariant::Piecewise;
    else if (v == "piecewise_weighted")
        l.variant = LossVariant::PiecewiseWeighted;
    else
        throw ConfigError("config: unknown loss variant '" + v + "'");
    get(j, "t_p", l.t_p);
    get(j, "omega_slope", l.omega_slope);
    get(j, "omega_center", l.omega_center);
    get(j, "omega_cutoff", l.omega_cutoff);
}

json to_json(const NetSpec& n) {
    return json{{"hidden_dims", n.hidden_dims}, {"time_embed_dim", n.time_embed_dim}};
}

void from_json_into(const json& j, NetSpec& n) {
    check_keys(j, {"hidden_dims", "time_embed_dim"}, "net");
    get(j, "hidden_dims", n.hidden_dims);
    get(j, "time_embed_dim", n.time_embed_dim);
}

json to_json(const SamplerConfig& s) {
    return json{{"n_steps", s.n_steps},
                {"n_samples", s.n_samples},
                {"method", s.method == SampleMethod::PC ? "pc" : "euler"},
                {"corrector_snr", s.corrector_snr},
                {"corrector_steps_per_predictor", s.corrector_steps_per_predictor},
                {"seed", s.seed}};
}

void from_json_into(const json& j, SamplerConfig& s) {
    check_keys(j,
               {"n_steps", "n_samples", "method", "corrector_snr",
                "corrector_steps_per_predictor", "seed"},
               "sampler");
    get(j, "n_steps", s.n_steps);
    get(j, "n_samples", s.n_samples);
    std::string m = s.method == SampleMethod::PC ? "pc" : "euler";
    get(j, "method", m);
    if (m == "pc")
        s.method = SampleMethod::PC;
    else if (m == "euler")
        s.method = SampleMethod::Euler;
    else
        throw ConfigError("config: sampler method must be 'pc' or 'euler'");
    get(j, "corrector_snr", s.corrector_snr);
    get(j, "corrector_steps_per_predictor", s.corrector_steps_per_predictor);
    get(j, "seed", s.seed);
}

json to_json(const MalaConfig& m) {
    return json{{"step_size", m.step_size},
                {"n_burn_in", m.n_burn_in},
                {"n_samples", m.n_samples},
                {"thinning", m.thinning},
                {"init", m.init},
                {"seed", m.seed}};
}

void from_json_into(const json& j, MalaConfig& m) {
    check_keys(j, {"step_size", "n_burn_in", "n_samples", "thinning", "init", "seed"},
               "mala");
    get(j, "step_size", m.step_size);
    get(j, "n_burn_in", m.n_burn_in);
    get(j, "n_samples", m.n_samples);
    get(j, "thinning", m.thinning);
    get(j, "init", m.init);
    get(j, "seed", m.seed);
}

json to_json(const SplitSpec& s) {
    return json{{"mode", s.mode == SplitMode::FirstK ? "first_k" : "random_fraction"},
                {"k", s.k},
                {"fraction", s.fraction},
                {"seed", s.seed}};
}

void from_json_into(const json& j, SplitSpec& s) {
    check_keys(j, {"mode", "k", "fraction", "seed"}, "split");
    std::string m = s.mode == SplitMode::FirstK ? "first_k" : "random_fraction";
    get(j, "mode", m);
    if (m == "first_k")
        s.mode = SplitMode::FirstK;
    else if (m == "random_fraction")
        s.mode = SplitMode::RandomFraction;
    else
        throw ConfigError("config: split mode must be 'first_k' or 'random_fraction'");
    get(j, "k", s.k);
    get(j, "fraction", s.fraction);
    get(j, "seed", s.seed);
}

json to_json(const MetricsSpec& m) {
    return json{{"hist_lo", m.hist_lo},
                {"hist_hi", m.hist_hi},
                {"hist_bins", m.hist_bins},
                {"bond_cutoff", m.bond_cutoff},
                {"stability_threshold", m.stability_threshold},
                {"w2_max_reference", m.w2_max_reference}};
}

void from_json_into(const json& j, MetricsSpec& m) {
    check_keys(j,
               {"hist_lo", "hist_hi", "hist_bins", "bond_cutoff",
                "stability_threshold", "w2_max_reference"},
               "metrics");
    get(j, "hist_lo", m.hist_lo);
    get(j, "hist_hi", m.hist_hi);
    get(j, "hist_bins", m.hist_bins);
    get(j, "bond_cutoff", m.bond_cutoff);
    get(j, "stability_threshold", m.stability_threshold);
    get(j, "w2_max_reference", m.w2_max_reference);
}

json to_json_full(const RunConfig& c) {
    return json{{"system", to_json(c.system)},
                {"schedule", to_json(c.schedule)},
                {"loss", to_json(c.loss)},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"lr", c.lr},
                {"weight_decay", c.weight_decay},
                {"cosine_lr", c.cosine_lr},
                {"net", to_json(c.net)},
                {"sampler", to_json(c.sampler)},
                {"mala", to_json(c.mala)},
                {"split", to_json(c.split)},
                {"metrics", to_json(c.metrics)},
                {"output_dir", c.output_dir},
                {"seed", c.seed},
                {"preset", c.preset}};
}

void from_json_into(const json& j, RunConfig& c) {
    check_keys(j,
               {"system", "schedule", "loss", "epochs", "batch_size", "lr",
                "weight_decay", "cosine_lr", "net", "sampler", "mala", "split",
                "metrics", "output_dir", "seed", "preset"},
               "config root");
    if (j.contains("system")) from_json_into(j.at("system"), c.system);
    if (j.contains("schedule")) from_json_into(j.at("schedule"), c.schedule);
    if (j.contains("loss")) from_json_into(j.at("loss"), c.loss);
    get(j, "epochs", c.epochs);
    get(j, "batch_size", c.batch_size);
    get(j, "lr", c.lr);
    get(j, "weight_decay", c.weight_decay);
    get(j, "cosine_lr", c.cosine_lr);
    if (j.contains("net")) from_json_into(j.at("net"), c.net);
    if (j.contains("sampler")) from_json_into(j.at("sampler"), c.sampler);
    if (j.contains("mala")) from_json_into(j.at("mala"), c.mala);
    if (j.contains("split")) from_json_into(j.at("split"), c.split);
    if (j.contains("metrics")) from_json_into(j.at("metrics"), c.metrics);
    get(j, "output_dir", c.output_dir);
    get(j, "seed", c.seed);
    get(j, "preset", c.preset);
}

json preset_overlay(const std::string& name) {
    if (name == "gauss")
        return json::parse(R"({
            "system": {"kind": "gauss", "dim": 1, "sigma_tar": 1.0},
            "loss": {"variant": "psm"},
            "epochs": 2000,
            "batch_size": 256,
            "mala": {"step_size": 0.5, "n_burn_in": 1000, "n_samples": 2000,
                     "thinning": 5, "init": [0.0]},
            "sampler": {"n_samples": 10000},
            "split": {"mode": "first_k", "k": 2000},
            "metrics": {"hist_lo": -4.0, "hist_hi": 4.0}
        })");
    if (name == "quartic1d")
        return json::parse(R"({
            "system": {"kind": "quartic", "d": 1},
            "loss": {"variant": "piecewise"},
            "epochs": 2000,
            "mala": {"step_size": 0.0005, "n_burn_in": 0, "n_samples": 100000,
                     "thinning": 1, "init": [0.8]},
            "sampler": {"n_samples": 10000, "corrector_steps_per_predictor": 2,
                        "corrector_snr": 0.25},
            "split": {"mode": "first_k", "k": 1000},
            "metrics": {"hist_lo": -2.0, "hist_hi": 2.0}
        })");
    if (name == "quartic2d")
        return json::parse(R"({
            "system": {"kind": "quartic", "d": 2},
            "loss": {"variant": "piecewise"},
            "epochs": 2000,
            "mala": {"step_size": 0.0005, "n_burn_in": 0, "n_samples": 100000,
                     "thinning": 1, "init": [0.8, 0.0]},
            "sampler": {"n_samples": 10000, "corrector_steps_per_predictor": 2,
                        "corrector_snr": 0.25},
            "split": {"mode": "first_k", "k": 1000},
            "metrics": {"hist_lo": -2.0, "hist_hi": 2.0}
        })");
    if (name == "lj13")
        return json::parse(R"({
            "system": {"kind": "lj", "n_particles": 13},
            "loss": {"variant": "piecewise"},
            "epochs": 150,
            "net": {"hidden_dims": [128, 128], "time_embed_dim": 64},
            "mala": {"step_size": 0.0001, "n_burn_in": 0, "n_samples": 50000,
                     "thinning": 1, "init": []},
            "sampler": {"n_samples": 500},
            "split": {"mode": "first_k", "k": 1000},
            "metrics": {"hist_lo": 0.5, "hist_hi": 3.0}
        })");
    if (name == "lj55")
        return json::parse(R"({
            "system": {"kind": "lj", "n_particles": 55},
            "loss": {"variant": "piecewise"},
            "epochs": 150,
            "net": {"hidden_dims": [128, 128], "time_embed_dim": 64},
            "mala": {"step_size": 0.00005, "n_burn_in": 0, "n_samples": 10000,
                     "thinning": 1, "init": []},
            "sampler": {"n_samples": 500},
            "split": {"mode": "first_k", "k": 1000},
            "metrics": {"hist_lo": 0.5, "hist_hi": 3.0}
        })");
    throw ConfigError("unknown preset '" + name + "'");
}

} // namespace

std::vector<std::string> preset_names() {
    return {"gauss", "quartic1d", "quartic2d", "lj13", "lj55"};
}

RunConfig load_run_config(const std::string& config_path,
                          const std::string& preset_name) {
    RunConfig cfg;
    if (!preset_name.empty()) {
        from_json_into(preset_overlay(preset_name), cfg);
        cfg.preset = preset_name;
    }
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("config file '" + config_path + "' is not valid JSON: " +
                              e.what());
        }
        from_json_into(j, cfg);
    }
    return cfg;
}

std::string canonical_json(const RunConfig& cfg) {
    return to_json_full(cfg).dump(2);
}

std::uint64_t config_hash(const RunConfig& cfg) {
    return fnv1a64(to_json_full(cfg).dump());
}

std::uint64_t model_hash(const RunConfig& cfg) {
    json j{{"system", to_json(cfg.system)},
           {"schedule", to_json(cfg.schedule)},
           {"loss", to_json(cfg.loss)},
           {"epochs", cfg.epochs},
           {"batch_size", cfg.batch_size},
           {"lr", cfg.lr},
           {"weight_decay", cfg.weight_decay},
           {"cosine_lr", cfg.cosine_lr},
           {"net", to_json(cfg.net)},
           {"split", to_json(cfg.split)},
           {"mala", to_json(cfg.mala)},
           {"seed", cfg.seed}};
    return fnv1a64(j.dump());
}

} // namespace psm
