#include "infotime/cli/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "infotime/cli/runconfig.hpp"
#include "infotime/eval/experiments.hpp"
#include "infotime/numcore/checkpoint.hpp"

namespace infotime::cli {

namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc | std::ios::binary);
        if (!os) throw std::runtime_error("cannot open " + tmp.string());
        os << content;
        if (!os) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string copy_file_text(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides; // key=value
    std::string seed;
    std::string jobs;
    bool timing = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run configuration file (key = value lines)");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "master seed (overrides the config key)");
    cmd->add_option("--set", args.overrides, "override any config key, e.g. --set beta=100")
        ->take_all();
    cmd->add_option("--jobs", args.jobs, "worker pool size for experiment runners");
    cmd->add_flag("--timing", args.timing, "record real wall time in run.csv (non-reproducible)");
}

/// Defaults < config file < command-line flags.
RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg;
    if (!args.config_path.empty()) cfg.load_file(args.config_path);
    for (const std::string& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got \"" + kv + "\"");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!args.seed.empty()) cfg.set("seed", args.seed);
    if (!args.jobs.empty()) cfg.set("jobs", args.jobs);
    if (!args.out_dir.empty()) cfg.set("out", args.out_dir);
    if (args.timing) cfg.set("timing", "true");
    return cfg;
}

fs::path prepare_out_dir(const RunConfig& cfg, const CommonArgs& args) {
    const std::string out = cfg.get("out");
    if (out.empty()) throw ConfigError("an output directory is required (--out or out = ...)");
    fs::path dir(out);
    fs::create_directories(dir);
    write_text(dir / "config.cfg", cfg.echo());
    if (!args.config_path.empty())
        write_text(dir / "config_input.cfg", copy_file_text(args.config_path));
    return dir;
}

/// Dataset from disk, or the synthetic generator when no path is set.
/// Synthetic covariates are advanced by the horizon when requested, and
/// the target channels default to the generator's target columns.
data::SeriesFrame load_frame(RunConfig& cfg) {
    const std::string& path = cfg.get("dataset");
    if (!path.empty()) return data::load_csv(path);
    data::SyntheticSpec spec = cfg.to_synthetic_spec();
    data::SeriesFrame frame = data::generate_synthetic(spec);
    std::vector<std::size_t> targets;
    for (std::size_t t = 0; t < spec.num_targets; ++t) targets.push_back(spec.target_channel(t));
    if (cfg.get_bool("covariate_lead"))
        frame = eval::lead_covariates(frame, targets, cfg.get_size("horizon"));
    if (cfg.get("target_channels").empty()) {
        std::string joined;
        for (std::size_t t : targets) joined += (joined.empty() ? "" : ",") + std::to_string(t);
        cfg.set("target_channels", joined);
    }
    return frame;
}

std::string dataset_label(const RunConfig& cfg) {
    const std::string& path = cfg.get("dataset");
    if (path.empty()) return "synthetic";
    return fs::path(path).stem().string();
}

std::string metrics_report_csv(const RunConfig& cfg, const train::FitResult& fit) {
    std::ostringstream os;
    char buf[32];
    os << "dataset,arm,horizon,seed,mse,mae\n";
    os << dataset_label(cfg) << ',' << cfg.get("arm") << ',' << cfg.get("horizon") << ','
       << cfg.get("seed");
    std::snprintf(buf, sizeof(buf), "%.9g", fit.test_mse);
    os << ',' << buf;
    std::snprintf(buf, sizeof(buf), "%.9g", fit.test_mae);
    os << ',' << buf << '\n';
    return os.str();
}

int cmd_train(const CommonArgs& args) {
    RunConfig cfg = resolve_config(args);
    data::SeriesFrame frame = load_frame(cfg);
    const fs::path dir = prepare_out_dir(cfg, args);
    train::TrainConfig tc = cfg.to_train_config();

    std::ostringstream steps;
    steps << "step," << cdam::LossBreakdown::csv_header(tc.arm == train::Arm::kOriginal
                                                            ? 0
                                                            : tc.tam.n_levels)
          << '\n';
    train::FitHooks hooks;
    hooks.on_step = [&](std::size_t step, const cdam::LossBreakdown& b) {
        steps << step << ',' << b.csv_row() << '\n';
    };
    hooks.on_epoch = [&](const train::EpochRow& row) {
        std::fprintf(stderr, "epoch %zu | train %.6f | val %.6f | test %.6f | %.1fs\n", row.epoch,
                     row.train.l_total, row.val_mse, row.test_mse, row.seconds);
    };

    train::Trainer trainer(tc, frame);
    train::FitResult fit = trainer.fit(&hooks);

    write_text(dir / "run.csv", fit.log.csv(cfg.get_bool("timing")));
    write_text(dir / "steps.csv", steps.str());
    numcore::save_checkpoint(dir / "checkpoint.bin", fit.best_params);
    write_text(dir / "report.csv", metrics_report_csv(cfg, fit));
    std::printf("best_epoch=%zu val_mse=%.6f test_mse=%.6f test_mae=%.6f\n", fit.log.best_epoch,
                fit.val_mse, fit.test_mse, fit.test_mae);
    return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& checkpoint) {
    CommonArgs local = args;
    if (local.config_path.empty()) {
        const fs::path sibling = fs::path(checkpoint).parent_path() / "config.cfg";
        if (!fs::exists(sibling))
            throw ConfigError("eval: --config required (no config.cfg next to the checkpoint)");
        local.config_path = sibling.string();
    }
    RunConfig cfg = resolve_config(local);
    data::SeriesFrame frame = load_frame(cfg);
    train::TrainConfig tc = cfg.to_train_config();
    train::Trainer trainer(tc, frame);
    numcore::ParamList params = trainer.bundle().all_params();
    numcore::load_checkpoint(checkpoint, params);
    train::Metrics test = trainer.evaluate_test();
    std::printf("test_mse=%.6f test_mae=%.6f\n", test.mse, test.mae);
    if (!cfg.get("out").empty()) {
        const fs::path dir = prepare_out_dir(cfg, local);
        std::ostringstream os;
        char buf[32];
        os << "dataset,arm,horizon,seed,mse,mae\n"
           << dataset_label(cfg) << ',' << cfg.get("arm") << ',' << cfg.get("horizon") << ','
           << cfg.get("seed");
        std::snprintf(buf, sizeof(buf), "%.9g", test.mse);
        os << ',' << buf;
        std::snprintf(buf, sizeof(buf), "%.9g", test.mae);
        os << ',' << buf << '\n';
        write_text(dir / "report.csv", os.str());
    }
    return 0;
}

int cmd_synth(const CommonArgs& args) {
    RunConfig cfg = resolve_config(args);
    const fs::path dir = prepare_out_dir(cfg, args);
    data::SeriesFrame frame = data::generate_synthetic(cfg.to_synthetic_spec());
    data::write_csv(frame, dir / "data.csv");
    std::printf("wrote %zu rows x %zu channels to %s\n", frame.rows, frame.cols,
                (dir / "data.csv").string().c_str());
    return 0;
}

int cmd_ablate(const CommonArgs& args) {
    RunConfig cfg = resolve_config(args);
    const std::string experiment = cfg.get("experiment");
    const fs::path dir = prepare_out_dir(cfg, args);

    if (experiment == "synthetic") {
        eval::SynthExperimentSpec spec;
        spec.data = cfg.to_synthetic_spec();
        spec.base = cfg.to_train_config();
        spec.base.backbone = train::Backbone::kMlp;
        spec.sigma_test_grid = cfg.get_double_list("sigma_grid");
        spec.seeds = cfg.get_u64_list("seeds");
        spec.cdam_beta = cfg.get_double("beta");
        spec.cdam_recon_weight = cfg.get_double("recon_weight");
        spec.covariate_lead = cfg.get_bool("covariate_lead");
        spec.jobs = cfg.get_size("jobs");
        eval::SynthExperimentResult result = eval::run_synthetic_experiment(spec);
        write_text(dir / "synth_report.csv", result.csv());
        std::fputs(result.csv().c_str(), stdout);
        return 0;
    }
    if (experiment != "ablation")
        throw ConfigError("experiment must be ablation | synthetic");

    eval::AblationSpec spec;
    spec.dataset_name = dataset_label(cfg);
    spec.frame = load_frame(cfg);
    spec.base = cfg.to_train_config();
    spec.horizons = cfg.get_size_list("horizons");
    for (const std::string& name : [&] {
             std::vector<std::string> names;
             std::string item;
             std::istringstream ss(cfg.get("arms"));
             while (std::getline(ss, item, ',')) names.push_back(item);
             return names;
         }())
        spec.arms.push_back(train::parse_arm(name));
    spec.seeds = cfg.get_u64_list("seeds");
    spec.jobs = cfg.get_size("jobs");

    eval::AblationResult result = eval::run_ablation(spec);
    write_text(dir / "report.csv", result.report_csv());
    write_text(dir / "summary.csv", result.summary_csv());
    write_text(dir / "table.txt", result.table_text());
    std::fputs(result.table_text().c_str(), stdout);
    if (result.any_failed) {
        std::fprintf(stderr, "ablate: some runs failed (see summary.csv)\n");
        return 1;
    }
    return 0;
}

int cmd_sweep(const CommonArgs& args) {
    RunConfig cfg = resolve_config(args);
    const fs::path dir = prepare_out_dir(cfg, args);
    eval::SweepSpec spec;
    const std::string& param = cfg.get("sweep_param");
    if (param == "beta")
        spec.param = eval::SweepSpec::Param::kBeta;
    else if (param == "lambda")
        spec.param = eval::SweepSpec::Param::kLambda;
    else
        throw ConfigError("sweep_param must be beta | lambda");
    spec.grid = cfg.get_double_list("sweep_grid");
    spec.dataset_name = dataset_label(cfg);
    spec.frame = load_frame(cfg);
    spec.base = cfg.to_train_config();
    spec.seeds = cfg.get_u64_list("seeds");
    spec.jobs = cfg.get_size("jobs");
    eval::SweepResult result = eval::run_sweep(spec);
    write_text(dir / "sweep.csv", result.csv());
    std::fputs(result.csv().c_str(), stdout);
    return 0;
}

} // namespace

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"InfoTime forecasting toolkit: cross-variable bottleneck (CDAM) and "
                 "multi-resolution temporal (TAM) training for small MLP forecasters"};
    app.require_subcommand(1);

    CommonArgs train_args, eval_args, synth_args, ablate_args, sweep_args;
    std::string checkpoint;

    CLI::App* train_cmd = app.add_subcommand("train", "train one model, write run artifacts");
    add_common(train_cmd, train_args);
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    eval_cmd->add_option("checkpoint", checkpoint, "checkpoint file")->required();
    add_common(eval_cmd, eval_args);
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset CSV");
    add_common(synth_cmd, synth_args);
    CLI::App* ablate_cmd =
        app.add_subcommand("ablate", "arm x horizon x seed ablation, or the synthetic "
                                      "noise-robustness experiment (experiment = synthetic)");
    add_common(ablate_cmd, ablate_args);
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "beta or lambda grid sweep");
    add_common(sweep_cmd, sweep_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(train_args);
        if (eval_cmd->parsed()) return cmd_eval(eval_args, checkpoint);
        if (synth_cmd->parsed()) return cmd_synth(synth_args);
        if (ablate_cmd->parsed()) return cmd_ablate(ablate_args);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_args);
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

} // namespace infotime::cli
