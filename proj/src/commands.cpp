// SPDX-License-Identifier: Apache-2.0
#include "psmlab/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "psmlab/oracle.hpp"

namespace psm {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
    if (!out) throw DataError("write failed for '" + path + "'");
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError("'" + path + "' is not valid JSON: " + std::string(e.what()));
    }
}

// Manifests are written before any compute so every artifact directory is
// self-describing even after a crash.
RunPaths prepare_run(const RunConfig& cfg, const std::string& command) {
    cfg.validate();
    RunPaths paths{cfg.output_dir};
    fs::create_directories(paths.dir);
    json manifest{{"command", command},
                  {"preset", cfg.preset},
                  {"seed", cfg.seed},
                  {"config_hash", hex64(config_hash(cfg))},
                  {"model_hash", hex64(model_hash(cfg))},
                  {"config", json::parse(canonical_json(cfg))}};
    write_text(paths.manifest(command), manifest.dump(2) + "\n");
    return paths;
}

SampleSet dataset_to_samples(const TrajectoryDataset& ds) {
    SampleSet s;
    s.n_particles = ds.n_particles;
    s.spatial_dim = ds.spatial_dim;
    s.configurations = ds.positions;
    s.energies = ds.energies;
    return s;
}

SampleSet stride_subsample(const SampleSet& s, size_t max_n) {
    if (s.size() <= max_n) return s;
    SampleSet out;
    out.n_particles = s.n_particles;
    out.spatial_dim = s.spatial_dim;
    double stride = static_cast<double>(s.size()) / static_cast<double>(max_n);
    for (size_t i = 0; i < max_n; ++i)
        out.configurations.push_back(
            s.configurations[static_cast<size_t>(i * stride)]);
    return out;
}

TrajectoryDataset load_training_source(const RunConfig& cfg, const RunPaths& paths) {
    std::string src = cfg.system.kind == "dataset" ? cfg.system.dataset_path
                                                   : paths.reference();
    if (!fs::exists(src))
        throw DataError("training source '" + src +
                        "' not found; run the reference command first");
    return read_npz(src);
}

} // namespace

Vec default_init(const PotentialSystem& system) {
    if (auto* g = dynamic_cast<const GaussianWell*>(&system)) {
        Vec x(g->dim(), 0.0);
        for (size_t i = 0; i < g->mean().size(); ++i) x[i] = g->mean()[i];
        return x;
    }
    if (dynamic_cast<const QuarticToy*>(&system))
        return Vec(system.dim(), 0.0);

    auto* lj = dynamic_cast<const LennardJonesCluster*>(&system);
    if (!lj) return Vec(system.dim(), 0.0);

    // seed particles on a cubic lattice around the origin, then relax by
    // gradient descent with backtracking until forces are modest
    int n = lj->n_particles();
    double a = lj->r_m();
    Vec x;
    x.reserve(static_cast<size_t>(3) * n);
    int side = 1;
    while (side * side * side < n) ++side;
    std::vector<Vec> sites;
    for (int i = 0; i < side && static_cast<int>(sites.size()) < n * 4; ++i)
        for (int j = 0; j < side; ++j)
            for (int k = 0; k < side; ++k)
                sites.push_back({(i - (side - 1) / 2.0) * a,
                                 (j - (side - 1) / 2.0) * a,
                                 (k - (side - 1) / 2.0) * a});
    std::sort(sites.begin(), sites.end(), [](const Vec& p, const Vec& q) {
        auto r2 = [](const Vec& v) {
            return v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        };
        return r2(p) < r2(q);
    });
    for (int i = 0; i < n; ++i)
        x.insert(x.end(), sites[i].begin(), sites[i].end());

    double e = system.energy(x);
    double step = 1e-3;
    for (int iter = 0; iter < 2000; ++iter) {
        Vec f = system.force(x);
        double fmax = 0.0;
        for (double v : f) fmax = std::max(fmax, std::abs(v));
        if (fmax < 1.0) break;
        Vec trial(x.size());
        double s = step;
        bool moved = false;
        for (int bt = 0; bt < 30; ++bt) {
            for (size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + s * f[i];
            try {
                double et = system.energy(trial);
                if (et < e) {
                    x = trial;
                    e = et;
                    step = std::min(s * 1.5, 1e-2);
                    moved = true;
                    break;
                }
            } catch (const std::domain_error&) {
                // clashed, shrink
            }
            s *= 0.5;
        }
        if (!moved) break;
    }
    return x;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    json j{{"version", ckpt.version},
           {"model_hash", hex64(ckpt.model_hash)},
           {"input_dim", ckpt.input_dim},
           {"net", {{"hidden_dims", ckpt.net.hidden_dims},
                    {"time_embed_dim", ckpt.net.time_embed_dim}}},
           {"params", ckpt.params},
           {"best_params", ckpt.best_params},
           {"best_epoch", ckpt.best_epoch},
           {"best_loss", ckpt.best_loss},
           {"loss_history", ckpt.loss_history},
           {"probe_history", ckpt.probe_history},
           {"adam", {{"step", ckpt.adam.step},
                     {"lr", ckpt.adam.lr},
                     {"beta1", ckpt.adam.beta1},
                     {"beta2", ckpt.adam.beta2},
                     {"eps", ckpt.adam.eps},
                     {"weight_decay", ckpt.adam.weight_decay},
                     {"total_steps", ckpt.adam.total_steps},
                     {"first_moment", ckpt.adam.first_moment},
                     {"second_moment", ckpt.adam.second_moment}}},
           {"rng_state", ckpt.rng_state},
           {"epoch_done", ckpt.epoch_done}};
    write_text(path, j.dump() + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
    json j = read_json_file(path);
    Checkpoint c;
    try {
        c.version = j.at("version").get<int>();
        if (c.version != 1)
            throw FormatError("unsupported checkpoint version " +
                              std::to_string(c.version));
        c.model_hash = std::stoull(j.at("model_hash").get<std::string>(), nullptr, 16);
        c.input_dim = j.at("input_dim").get<int>();
        c.net.hidden_dims = j.at("net").at("hidden_dims").get<std::vector<int>>();
        c.net.time_embed_dim = j.at("net").at("time_embed_dim").get<int>();
        c.params = j.at("params").get<Vec>();
        c.best_params = j.at("best_params").get<Vec>();
        c.best_epoch = j.at("best_epoch").get<int>();
        c.best_loss = j.at("best_loss").get<double>();
        c.loss_history = j.at("loss_history").get<Vec>();
        c.probe_history = j.at("probe_history").get<Vec>();
        const json& a = j.at("adam");
        c.adam.step = a.at("step").get<long>();
        c.adam.lr = a.at("lr").get<double>();
        c.adam.beta1 = a.at("beta1").get<double>();
        c.adam.beta2 = a.at("beta2").get<double>();
        c.adam.eps = a.at("eps").get<double>();
        c.adam.weight_decay = a.at("weight_decay").get<double>();
        c.adam.total_steps = a.at("total_steps").get<long>();
        c.adam.first_moment = a.at("first_moment").get<Vec>();
        c.adam.second_moment = a.at("second_moment").get<Vec>();
        c.rng_state = j.at("rng_state").get<std::string>();
        c.epoch_done = j.at("epoch_done").get<int>();
    } catch (const json::exception& e) {
        throw FormatError("checkpoint '" + path + "' is malformed: " + e.what());
    }
    return c;
}

int cmd_reference(const RunConfig& cfg, bool strict) {
    if (!cfg.system.analytic())
        throw ConfigError("reference generation needs an analytic system");
    RunPaths paths = prepare_run(cfg, "reference");
    std::unique_ptr<PotentialSystem> system = cfg.system.make();

    MalaConfig mala = cfg.mala;
    if (mala.init.empty()) mala.init = default_init(*system);
    MalaResult res = mala_sample(*system, mala);
    if (strict && res.low_acceptance)
        throw NumericError("MALA acceptance rate " +
                           std::to_string(res.acceptance_rate) +
                           " below 0.1 (strict mode); suggested step_size " +
                           std::to_string(res.suggested_step_size));

    TrajectoryDataset ds;
    ds.n_particles = system->n_particles();
    ds.spatial_dim = system->spatial_dim();
    ds.positions = res.samples.configurations;
    ds.energies = res.samples.energies;
    ds.forces.reserve(ds.positions.size());
    for (const Vec& frame : ds.positions) ds.forces.push_back(system->force(frame));
    write_npz(paths.reference(), ds);

    json sidecar{{"seed", mala.seed},
                 {"config_hash", hex64(config_hash(cfg))},
                 {"system", system->name()},
                 {"n_frames", ds.positions.size()},
                 {"step_size", mala.step_size},
                 {"n_burn_in", mala.n_burn_in},
                 {"thinning", mala.thinning},
                 {"acceptance_rate", res.acceptance_rate},
                 {"content_hash", hex64(res.samples.content_hash())}};
    write_text(paths.reference_sidecar(), sidecar.dump(2) + "\n");
    std::cout << "reference: " << ds.positions.size() << " frames, acceptance "
              << res.acceptance_rate << " -> " << paths.reference() << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& resume_path) {
    RunPaths paths = prepare_run(cfg, "train");
    TrajectoryDataset full = load_training_source(cfg, paths);
    auto [train_part, holdout] = make_split(full, cfg.split);
    (void)holdout;
    if (train_part.positions.empty())
        throw DataError("training split is empty");

    TrainData data;
    data.x0 = train_part.positions;
    data.force = train_part.forces;
    data.kT = cfg.system.kT;
    if (cfg.loss.variant != LossVariant::DSM && !data.has_forces())
        throw ConfigError(
            "the selected loss needs force labels, but the training data has "
            "none; regenerate the reference with forces or switch to the dsm "
            "variant");

    int dim = train_part.n_particles * train_part.spatial_dim;
    TrainConfig tc = cfg.train_config();

    ScoreNet net = ScoreNet::create(dim, cfg.net.hidden_dims,
                                    cfg.net.time_embed_dim, cfg.seed);
    size_t batch = std::min<size_t>(static_cast<size_t>(cfg.batch_size),
                                    data.x0.size());
    long steps_per_epoch =
        static_cast<long>((data.x0.size() + batch - 1) / batch);
    TrainState state = make_train_state(tc, net, steps_per_epoch);

    int prior_best_epoch = -1;
    double prior_best_loss = 0.0;
    Vec prior_best_params;
    Vec prior_history;
    Vec prior_probe_history;
    if (!resume_path.empty()) {
        Checkpoint ckpt = load_checkpoint(resume_path);
        if (ckpt.model_hash != model_hash(cfg))
            throw ConfigError("resume checkpoint was trained under a different "
                              "configuration (model hash mismatch)");
        net.set_params(ckpt.params);
        state.adam = ckpt.adam;
        std::istringstream ss(ckpt.rng_state);
        ss >> state.rng;
        if (!ss) throw FormatError("checkpoint rng state is unreadable");
        state.epoch_done = ckpt.epoch_done;
        prior_best_epoch = ckpt.best_epoch;
        prior_best_loss = ckpt.best_loss;
        prior_best_params = ckpt.best_params;
        prior_history = ckpt.loss_history;
        prior_probe_history = ckpt.probe_history;
    }

    TrainResult res = train_run(tc, data, net, state);

    Checkpoint ckpt;
    ckpt.model_hash = model_hash(cfg);
    ckpt.input_dim = dim;
    ckpt.net = cfg.net;
    ckpt.params = net.get_params();
    ckpt.loss_history = prior_history;
    ckpt.loss_history.insert(ckpt.loss_history.end(), res.epoch_loss.begin(),
                             res.epoch_loss.end());
    ckpt.probe_history = prior_probe_history;
    ckpt.probe_history.insert(ckpt.probe_history.end(), res.probe_loss.begin(),
                              res.probe_loss.end());
    // best_* tracks the latest trained parameters; keep the prior entry only
    // when this invocation had no epochs left to run
    if (res.best_epoch >= 0) {
        ckpt.best_epoch = res.best_epoch;
        ckpt.best_loss = res.best_loss;
        ckpt.best_params = res.best_params;
    } else {
        ckpt.best_epoch = prior_best_epoch;
        ckpt.best_loss = prior_best_loss;
        ckpt.best_params = prior_best_params.empty() ? net.get_params()
                                                     : prior_best_params;
    }
    std::ostringstream rs;
    rs << state.rng;
    ckpt.rng_state = rs.str();
    ckpt.adam = state.adam;
    ckpt.epoch_done = state.epoch_done;
    save_checkpoint(paths.checkpoint(), ckpt);

    std::ofstream loss_out(paths.loss_csv(), std::ios::trunc);
    loss_out << "epoch,loss,probe_loss\n";
    loss_out.precision(17);
    for (size_t i = 0; i < ckpt.loss_history.size(); ++i)
        loss_out << i << ',' << ckpt.loss_history[i] << ','
                 << ckpt.probe_history[i] << '\n';

    std::cout << "train: " << state.epoch_done << " epochs, best epoch "
              << ckpt.best_epoch << " (loss " << ckpt.best_loss << ") -> "
              << paths.checkpoint() << "\n";
    return 0;
}

int cmd_sample(const RunConfig& cfg, bool force) {
    RunPaths paths = prepare_run(cfg, "sample");
    Checkpoint ckpt = load_checkpoint(paths.checkpoint());
    if (ckpt.model_hash != model_hash(cfg)) {
        if (!force)
            throw ConfigError(
                "checkpoint model hash " + hex64(ckpt.model_hash) +
                " does not match this configuration (" +
                hex64(model_hash(cfg)) + "); pass --force to sample anyway");
        std::cerr << "warning: sampling despite model hash mismatch (--force)\n";
    }

    ScoreNet net = ScoreNet::create(ckpt.input_dim, ckpt.net.hidden_dims,
                                    ckpt.net.time_embed_dim, cfg.seed);
    net.set_params(ckpt.best_params);

    BatchScoreFn score = net_score_fn(net, cfg.schedule);
    SampleSet samples = cfg.sampler.method == SampleMethod::PC
                            ? pc_sample(score, cfg.schedule, cfg.sampler,
                                        ckpt.input_dim)
                            : euler_reverse(score, cfg.schedule, cfg.sampler,
                                            ckpt.input_dim);
    if (cfg.system.analytic()) {
        std::unique_ptr<PotentialSystem> system = cfg.system.make();
        if (system->dim() == ckpt.input_dim) {
            samples.n_particles = system->n_particles();
            samples.spatial_dim = system->spatial_dim();
        }
    }
    write_sample_csv(paths.samples(), samples);

    json sidecar{{"seed", cfg.sampler.seed},
                 {"config_hash", hex64(config_hash(cfg))},
                 {"model_hash", hex64(ckpt.model_hash)},
                 {"method", cfg.sampler.method == SampleMethod::PC ? "pc" : "euler"},
                 {"n_steps", cfg.sampler.n_steps},
                 {"n_samples", samples.size()},
                 {"content_hash", hex64(samples.content_hash())}};
    write_text(paths.samples_sidecar(), sidecar.dump(2) + "\n");
    std::cout << "sample: " << samples.size() << " configurations -> "
              << paths.samples() << "\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg) {
    RunPaths paths = prepare_run(cfg, "eval");
    TrajectoryDataset ref_ds = load_training_source(cfg, paths);
    SampleSet reference = dataset_to_samples(ref_ds);
    SampleSet samples = read_sample_csv(paths.samples(), ref_ds.n_particles,
                                        ref_ds.spatial_dim);
    if (samples.dim() != reference.dim())
        throw DataError("samples and reference have incompatible dimensions");

    json out{{"samples_hash", hex64(samples.content_hash())},
             {"reference_hash", hex64(reference.content_hash())},
             {"n_samples", samples.size()},
             {"n_reference", reference.size()}};

    Vec edges = uniform_edges(cfg.metrics.hist_lo, cfg.metrics.hist_hi,
                              cfg.metrics.hist_bins);
    auto hist_csv = [&](const std::string& path, const Histogram& h) {
        std::ofstream f(path, std::ios::trunc);
        f.precision(17);
        f << "lo,hi,mass\n";
        for (size_t i = 0; i < h.masses.size(); ++i)
            f << h.bin_edges[i] << ',' << h.bin_edges[i + 1] << ',' << h.masses[i]
              << '\n';
    };

    if (reference.n_particles >= 2) {
        Histogram hs = interatomic_hist(samples, edges);
        Histogram hr = interatomic_hist(reference, edges);
        out["hr_tvd"] = tvd(hs, hr);
        out["hr_mae"] = mae_hist(hs, hr);
        hist_csv(paths.dir + "/hist_hr_samples.csv", hs);
        hist_csv(paths.dir + "/hist_hr_reference.csv", hr);

        std::vector<Bond> bonds = bonds_from_frame(
            reference.configurations.front(), reference.n_particles,
            cfg.metrics.bond_cutoff);
        long stable = 0;
        for (const Vec& c : samples.configurations)
            if (stability_check(c, bonds, cfg.metrics.stability_threshold).stable)
                ++stable;
        out["stability_fraction"] =
            samples.size() ? static_cast<double>(stable) / samples.size() : 1.0;
        out["n_bonds"] = bonds.size();
    } else {
        // single-particle systems: coordinate histograms instead of h(r)
        auto coord_hist = [&](const SampleSet& s) {
            Vec flat;
            for (const Vec& c : s.configurations)
                flat.insert(flat.end(), c.begin(), c.end());
            Histogram h;
            h.bin_edges.assign(edges.begin(), edges.end());
            h.masses.assign(edges.size() - 1, 0.0);
            double w = flat.empty() ? 0.0 : 1.0 / static_cast<double>(flat.size());
            for (double v : flat) {
                if (v < edges.front() || v >= edges.back()) {
                    if (v == edges.back())
                        h.masses.back() += w;
                    else
                        h.overflow += w;
                    continue;
                }
                size_t bin = static_cast<size_t>(
                    (v - edges.front()) / (edges[1] - edges[0]));
                bin = std::min(bin, h.masses.size() - 1);
                h.masses[bin] += w;
            }
            return h;
        };
        Histogram hs = coord_hist(samples);
        Histogram hr = coord_hist(reference);
        out["coord_tvd"] = tvd(hs, hr);
        out["coord_mae"] = mae_hist(hs, hr);
        hist_csv(paths.dir + "/hist_coord_samples.csv", hs);
        hist_csv(paths.dir + "/hist_coord_reference.csv", hr);
        if (reference.dim() == 1) {
            Vec a, b;
            for (const Vec& c : samples.configurations) a.push_back(c[0]);
            for (const Vec& c : reference.configurations) b.push_back(c[0]);
            out["w2_1d"] = wasserstein2_1d(a, b);
        }
    }

    size_t cap = static_cast<size_t>(cfg.metrics.w2_max_reference);
    size_t m = std::min({samples.size(), reference.size(), cap});
    if (m >= 2) {
        SampleSet sa = stride_subsample(samples, m);
        SampleSet sb = stride_subsample(reference, m);
        out["w2"] = wasserstein2(sa, sb);
        out["w2_subsample"] = m;
    }

    if (cfg.system.analytic()) {
        std::unique_ptr<PotentialSystem> system = cfg.system.make();
        double lo, hi;
        if (!reference.energies.empty()) {
            auto [mn, mx] = std::minmax_element(reference.energies.begin(),
                                                reference.energies.end());
            lo = *mn;
            hi = *mx;
        } else {
            lo = -1.0;
            hi = 1.0;
        }
        double pad = 0.05 * (hi - lo) + 1e-9;
        Vec e_edges = uniform_edges(lo - pad, hi + pad, 50);
        long skipped = 0;
        Histogram es = energy_hist(samples, *system, e_edges, &skipped);
        Histogram er = energy_hist(reference, *system, e_edges, nullptr);
        out["energy_tvd"] = tvd(es, er);
        out["energy_skipped_samples"] = skipped;
        hist_csv(paths.dir + "/hist_energy_samples.csv", es);
        hist_csv(paths.dir + "/hist_energy_reference.csv", er);
    }

    write_text(paths.metrics(), out.dump(2) + "\n");
    std::cout << "eval -> " << paths.metrics() << "\n" << out.dump(2) << "\n";
    return 0;
}

namespace {

struct CheckOutcome {
    std::string name;
    bool pass;
    double wall_ms;
    std::string detail;
};

template <typename F>
CheckOutcome run_check(const std::string& name, F&& body) {
    auto t0 = std::chrono::steady_clock::now();
    CheckOutcome out{name, false, 0.0, ""};
    try {
        out.detail = body();
        out.pass = true;
    } catch (const std::exception& e) {
        out.detail = e.what();
    }
    out.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    return out;
}

std::string check_force(const PotentialSystem& sys, int n_configs, double spread,
                        std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed, 0x666f726365ull);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    int done = 0;
    for (int c = 0; c < n_configs * 10 && done < n_configs; ++c) {
        Vec x(sys.dim());
        for (double& v : x) v = spread * normal(rng);
        if (!sys.in_domain(x)) continue;
        try {
            worst = std::max(worst, check_force_consistency(sys, x, 1e-5));
            ++done;
        } catch (const std::domain_error&) {
            // clashing draw, retry
        }
    }
    if (done < n_configs)
        throw NumericError("could not draw enough valid configurations");
    if (worst > 1e-4)
        throw NumericError("force mismatch " + std::to_string(worst));
    return "max relative error " + std::to_string(worst) + " over " +
           std::to_string(done) + " configs";
}

} // namespace

int cmd_check(const RunConfig& cfg) {
    RunPaths paths = prepare_run(cfg, "check");
    std::vector<CheckOutcome> results;

    results.push_back(run_check("force_consistency_gauss", [&] {
        GaussianWell g(3, 0.7, {0.1, -0.2, 0.3});
        return check_force(g, 20, 1.0, cfg.seed);
    }));
    results.push_back(run_check("force_consistency_quartic1d", [&] {
        QuarticToy q(1);
        return check_force(q, 20, 0.6, cfg.seed);
    }));
    results.push_back(run_check("force_consistency_quartic2d", [&] {
        QuarticToy q(2);
        return check_force(q, 20, 0.5, cfg.seed);
    }));
    results.push_back(run_check("force_consistency_lj13", [&] {
        LennardJonesCluster lj(13);
        Vec base = default_init(lj);
        std::mt19937_64 rng = make_rng(cfg.seed, 0x6c6aull);
        std::normal_distribution<double> normal(0.0, 0.03);
        double worst = 0.0;
        for (int c = 0; c < 20; ++c) {
            Vec x = base;
            for (double& v : x) v += normal(rng);
            worst = std::max(worst, check_force_consistency(lj, x, 1e-5));
        }
        if (worst > 1e-4) throw NumericError("force mismatch " + std::to_string(worst));
        return "max relative error " + std::to_string(worst);
    }));

    results.push_back(run_check("gaussian_posterior_closed_form", [&] {
        PosteriorParams p = gaussian_posterior({0.0, 1.0}, 1.0, 1.0);
        if (std::abs(p.variance - 0.5) > 1e-12 || std::abs(p.mean_coeff - 0.5) > 1e-12)
            throw NumericError("posterior closed form mismatch");
        return std::string("variance 0.5, mean coefficient 0.5");
    }));

    results.push_back(run_check("posterior_force_identity_mc", [&] {
        NoiseSchedule ve = NoiseSchedule::ve(0.1, 5.0);
        double worst = 0.0;
        for (double t : {0.1, 0.5, 0.9})
            for (double x_t : {-1.0, 0.0, 1.0}) {
                McCheck c = psm_label_mc_check({0.0, 1.0}, ve, t, x_t, 100000,
                                               cfg.seed);
                worst = std::max(worst, c.abs_error);
            }
        if (worst > 1e-2) throw NumericError("MC error " + std::to_string(worst));
        return "max |mc - analytic| " + std::to_string(worst);
    }));

    results.push_back(run_check("target_variance_formulas", [&] {
        TargetVariance tv = target_variance({0.0, 1.0}, 1.0, 0.1, 1);
        if (std::abs(tv.dsm_var - 99.0099) > 1e-3 ||
            std::abs(tv.psm_var - 0.009901) > 1e-5)
            throw NumericError("closed-form values off");
        TargetVariance eq = target_variance({0.0, 1.0}, 1.0, 1.0, 1);
        if (std::abs(eq.dsm_var - eq.psm_var) > 1e-12)
            throw NumericError("variances should cross at sigma_t = alpha sigma_tar");
        return std::string("dsm 99.0099 / psm 0.009901 at sigma_t=0.1; crossing ok");
    }));

    results.push_back(run_check("marginal_score_quadrature_gauss", [&] {
        GaussianWell g(1, 1.0);
        NoiseSchedule ve = NoiseSchedule::ve(0.1, 5.0);
        QuadratureGrid grid;
        double worst = 0.0;
        for (double t : {0.1, 0.5})
            for (double x_t : {-1.0, 0.5}) {
                double sigma = ve.coeffs(t).sigma;
                double analytic = -x_t / (1.0 + sigma * sigma);
                Vec s = marginal_score_quadrature(g, ve, t, Vec{x_t}, grid);
                worst = std::max(worst, std::abs(s[0] - analytic));
            }
        if (worst > 1e-6) throw NumericError("quadrature error " + std::to_string(worst));
        return "max |quadrature - analytic| " + std::to_string(worst);
    }));

    results.push_back(run_check("posterior_gap_inequality", [&] {
        NoiseSchedule ve = NoiseSchedule::ve(0.1, 5.0);
        Density1D p = gaussian_density(0.0, 1.0);
        Density1D q = gaussian_density(0.5, 1.0);
        QuadratureGrid grid;
        for (double t : {0.005, 0.02})
            for (double x_t : {-1.0, 0.0, 1.0}) {
                Theorem2Result r = theorem2_check(p, q, ve, t, x_t, grid);
                if (r.norm_I1_sq > r.norm_I2_sq + 1e-12)
                    throw NumericError("|I1|^2 > |I2|^2 at t=" + std::to_string(t) +
                                       " x_t=" + std::to_string(x_t));
            }
        return std::string("|I1|^2 <= |I2|^2 on the spot-check grid");
    }));

    results.push_back(run_check("net_gradient_finite_difference", [&] {
        ScoreNet net = ScoreNet::create(2, {8, 8}, 8, cfg.seed);
        std::mt19937_64 rng = make_rng(cfg.seed, 0x6772616400ull);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<Vec> xs(4, Vec(2));
        std::vector<Vec> ys(4, Vec(2));
        Vec ts(4), ws(4, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int i = 0; i < 4; ++i) {
            for (double& v : xs[i]) v = normal(rng);
            for (double& v : ys[i]) v = normal(rng);
            ts[i] = unif(rng);
        }
        GradResult g = net_grad(net, xs, ts, ys, ws);
        Vec params = net.get_params();
        std::uniform_int_distribution<size_t> pick(0, params.size() - 1);
        double worst = 0.0;
        for (int k = 0; k < 20; ++k) {
            size_t i = pick(rng);
            double h = 1e-6;
            Vec pp = params, pm = params;
            pp[i] += h;
            pm[i] -= h;
            ScoreNet n2 = net;
            n2.set_params(pp);
            double lp = net_grad(n2, xs, ts, ys, ws).loss;
            n2.set_params(pm);
            double lm = net_grad(n2, xs, ts, ys, ws).loss;
            double fd = (lp - lm) / (2 * h);
            double rel = std::abs(fd - g.grads[i]) / (1.0 + std::abs(g.grads[i]));
            worst = std::max(worst, rel);
        }
        if (worst > 1e-4) throw NumericError("gradient mismatch " + std::to_string(worst));
        return "max relative error " + std::to_string(worst) + " over 20 coordinates";
    }));

    json report = json::array();
    bool all_pass = true;
    for (const CheckOutcome& r : results) {
        all_pass = all_pass && r.pass;
        report.push_back({{"name", r.name},
                          {"pass", r.pass},
                          {"wall_ms", r.wall_ms},
                          {"detail", r.detail}});
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  ("
                  << r.wall_ms << " ms)  " << r.detail << "\n";
    }
    write_text(paths.check_report(), report.dump(2) + "\n");
    std::cout << (all_pass ? "all checks passed" : "some checks FAILED") << "\n";
    return all_pass ? 0 : 1;
}

} // namespace psm
