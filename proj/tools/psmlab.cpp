// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "CLI11.hpp"
#include "psmlab/commands.hpp"

namespace {

struct Cli {
    std::string config_path;
    std::string preset;
    std::string out_dir;
    std::string resume;
    std::int64_t seed = -1;
    bool strict = false;
    bool force = false;
};

void add_common(CLI::App* cmd, Cli& cli) {
    cmd->add_option("--config", cli.config_path, "JSON config file");
    cmd->add_option("--preset", cli.preset, "named preset")
        ->check(CLI::IsMember(psm::preset_names()));
    cmd->add_option("--seed", cli.seed, "override every seed in the config");
    cmd->add_option("--out", cli.out_dir, "output directory");
    cmd->add_flag("--strict", cli.strict, "treat warnings as failures");
    cmd->add_flag("--force", cli.force, "override provenance hash checks");
}

psm::RunConfig build_config(const Cli& cli) {
    psm::RunConfig cfg = psm::load_run_config(cli.config_path, cli.preset);
    if (cli.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(cli.seed);
        cfg.mala.seed = cfg.seed;
        cfg.sampler.seed = cfg.seed;
        cfg.split.seed = cfg.seed;
    }
    if (!cli.out_dir.empty()) cfg.output_dir = cli.out_dir;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"potential score matching laboratory"};
    app.require_subcommand(1);

    Cli cli;
    CLI::App* ref = app.add_subcommand(
        "reference", "generate a MALA reference trajectory with labels");
    CLI::App* train = app.add_subcommand("train", "train the noise-prediction net");
    train->add_option("--resume", cli.resume, "checkpoint to continue from");
    CLI::App* sample =
        app.add_subcommand("sample", "draw configurations from a checkpoint");
    CLI::App* eval =
        app.add_subcommand("eval", "compare samples against the reference");
    CLI::App* check = app.add_subcommand("check", "run the self-check suite");
    for (CLI::App* c : {ref, train, sample, eval, check}) add_common(c, cli);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2; // bad flags/values are config errors
    }

    try {
        psm::RunConfig cfg = build_config(cli);
        if (ref->parsed()) return psm::cmd_reference(cfg, cli.strict);
        if (train->parsed()) return psm::cmd_train(cfg, cli.resume);
        if (sample->parsed()) return psm::cmd_sample(cfg, cli.force);
        if (eval->parsed()) return psm::cmd_eval(cfg);
        if (check->parsed()) return psm::cmd_check(cfg);
    } catch (const psm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const psm::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const psm::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
