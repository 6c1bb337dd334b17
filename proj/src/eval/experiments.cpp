#include "infotime/eval/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <thread>

namespace infotime::eval {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w)
        pool.emplace_back([&]() {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

const AblationCell* AblationResult::cell(train::Arm arm, std::size_t horizon) const {
    for (const auto& c : cells)
        if (c.arm == arm && c.horizon == horizon) return &c;
    return nullptr;
}

std::string AblationResult::report_csv() const {
    std::ostringstream os;
    os << "dataset,arm,horizon,seed,mse,mae\n";
    for (const auto& r : rows)
        os << r.dataset << ',' << r.arm << ',' << r.horizon << ',' << r.seed << ',' << fmt(r.mse)
           << ',' << fmt(r.mae) << '\n';
    return os.str();
}

std::string AblationResult::summary_csv() const {
    std::ostringstream os;
    os << "arm,horizon,mean_mse,mean_mae,status\n";
    for (const auto& c : cells)
        os << train::arm_name(c.arm) << ',' << c.horizon << ',' << fmt(c.mean_mse) << ','
           << fmt(c.mean_mae) << ',' << (c.failed ? "FAILED" : "ok") << '\n';
    return os.str();
}

std::string AblationResult::table_text() const {
    std::vector<std::size_t> horizons;
    std::vector<train::Arm> arms;
    for (const auto& c : cells) {
        if (std::find(horizons.begin(), horizons.end(), c.horizon) == horizons.end())
            horizons.push_back(c.horizon);
        if (std::find(arms.begin(), arms.end(), c.arm) == arms.end()) arms.push_back(c.arm);
    }
    std::ostringstream os;
    os << std::left << std::setw(10) << "horizon";
    for (train::Arm a : arms) os << std::setw(22) << train::arm_name(a);
    os << "\n";
    for (std::size_t h : horizons) {
        os << std::left << std::setw(10) << h;
        for (train::Arm a : arms) {
            const AblationCell* c = cell(a, h);
            std::ostringstream cellText;
            if (!c)
                cellText << "-";
            else if (c->failed)
                cellText << "FAILED";
            else
                cellText << std::fixed << std::setprecision(4) << c->mean_mse << "/"
                         << std::setprecision(4) << c->mean_mae;
            os << std::setw(22) << cellText.str();
        }
        os << "\n";
    }
    return os.str();
}

AblationResult run_ablation(const AblationSpec& spec) {
    if (spec.horizons.empty() || spec.arms.empty() || spec.seeds.empty())
        throw ConfigError("ablation: horizons, arms and seeds must be nonempty");

    struct Run {
        train::Arm arm = train::Arm::kOriginal;
        std::size_t horizon = 0;
        std::uint64_t seed = 0;
        double mse = 0.0, mae = 0.0;
        bool failed = false;
        std::string error{};
    };
    std::vector<Run> runs;
    for (train::Arm arm : spec.arms)
        for (std::size_t horizon : spec.horizons)
            for (std::uint64_t seed : spec.seeds) {
                Run run;
                run.arm = arm;
                run.horizon = horizon;
                run.seed = seed;
                runs.push_back(run);
            }

    parallel_for(runs.size(), spec.jobs, [&](std::size_t i) {
        Run& run = runs[i];
        try {
            train::TrainConfig cfg = spec.base;
            cfg.arm = run.arm;
            cfg.model.horizon = run.horizon;
            cfg.seed = run.seed;
            train::Trainer trainer(cfg, spec.frame);
            train::FitResult fit = trainer.fit();
            run.mse = fit.test_mse;
            run.mae = fit.test_mae;
        } catch (const std::exception& e) {
            run.failed = true;
            run.error = e.what();
        }
    });

    AblationResult out;
    for (const Run& run : runs) {
        if (!run.failed)
            out.rows.push_back({spec.dataset_name, train::arm_name(run.arm), run.horizon,
                                run.seed, run.mse, run.mae});
    }
    for (train::Arm arm : spec.arms)
        for (std::size_t horizon : spec.horizons) {
            AblationCell cell;
            cell.arm = arm;
            cell.horizon = horizon;
            std::size_t n = 0;
            for (const Run& run : runs) {
                if (run.arm != arm || run.horizon != horizon) continue;
                if (run.failed) {
                    cell.failed = true;
                    cell.error = run.error;
                } else {
                    cell.mean_mse += run.mse;
                    cell.mean_mae += run.mae;
                    ++n;
                }
            }
            if (n > 0) {
                cell.mean_mse /= static_cast<double>(n);
                cell.mean_mae /= static_cast<double>(n);
            }
            out.any_failed = out.any_failed || cell.failed;
            out.cells.push_back(cell);
        }
    return out;
}

data::SeriesFrame lead_covariates(const data::SeriesFrame& frame,
                                  std::span<const std::size_t> target_channels,
                                  std::size_t lead) {
    if (lead == 0) return frame;
    if (frame.rows <= lead) throw ConfigError("lead_covariates: frame shorter than the lead");
    std::vector<bool> is_target(frame.cols, false);
    for (std::size_t c : target_channels) is_target.at(c) = true;
    data::SeriesFrame out;
    out.rows = frame.rows - lead;
    out.cols = frame.cols;
    out.channel_names = frame.channel_names;
    out.values.resize(out.rows * out.cols);
    if (frame.timestamps.size() >= out.rows)
        out.timestamps.assign(frame.timestamps.begin(),
                              frame.timestamps.begin() + static_cast<std::ptrdiff_t>(out.rows));
    for (std::size_t r = 0; r < out.rows; ++r)
        for (std::size_t c = 0; c < out.cols; ++c)
            out.values[r * out.cols + c] = frame.at(is_target[c] ? r : r + lead, c);
    return out;
}

const SynthArmResult* SynthExperimentResult::arm(const std::string& name) const {
    for (const auto& a : arms)
        if (a.arm == name) return &a;
    return nullptr;
}

std::string SynthExperimentResult::csv() const {
    std::ostringstream os;
    os << "arm,sigma_test,mean_mse,mean_ratio\n";
    for (const auto& a : arms)
        for (std::size_t g = 0; g < sigma_grid.size(); ++g)
            os << a.arm << ',' << fmt(sigma_grid[g]) << ',' << fmt(a.mse_per_sigma[g]) << ','
               << fmt(a.ratio_per_sigma[g]) << '\n';
    return os.str();
}

SynthExperimentResult run_synthetic_experiment(const SynthExperimentSpec& spec) {
    if (spec.sigma_test_grid.empty() || spec.seeds.empty())
        throw ConfigError("synthetic experiment: sigma grid and seeds must be nonempty");

    struct ArmDef {
        std::string name;
        models::ChannelMode mode;
        train::Arm arm;
    };
    const ArmDef defs[] = {
        {"channel_mixing", models::ChannelMode::kMixing, train::Arm::kOriginal},
        {"channel_independence", models::ChannelMode::kIndependence, train::Arm::kOriginal},
        {"cdam", models::ChannelMode::kMixing, train::Arm::kInfoTime},
    };

    struct Task {
        std::size_t arm_index;
        std::uint64_t seed;
        std::vector<double> mse_per_sigma;
        double matched_mse = 0.0;
    };
    std::vector<Task> tasks;
    for (std::size_t a = 0; a < 3; ++a)
        for (std::uint64_t seed : spec.seeds) tasks.push_back({a, seed, {}, 0.0});

    std::vector<std::string> task_errors(tasks.size());
    parallel_for(tasks.size(), spec.jobs, [&](std::size_t i) {
      try {
        Task& task = tasks[i];
        const ArmDef& def = defs[task.arm_index];

        data::SyntheticSpec data_spec = spec.data;
        data_spec.seed = derive_seed(spec.data.seed, task.seed);
        data_spec.sigma_test = data_spec.sigma_train; // matched noise for training
        std::vector<std::size_t> target_cols;
        for (std::size_t t = 0; t < data_spec.num_targets; ++t)
            target_cols.push_back(data_spec.target_channel(t));
        const std::size_t lead = spec.covariate_lead ? spec.base.model.horizon : 0;
        data::SeriesFrame train_frame =
            lead_covariates(data::generate_synthetic(data_spec), target_cols, lead);

        train::TrainConfig cfg = spec.base;
        cfg.backbone = train::Backbone::kMlp;
        cfg.model.mode = def.mode;
        cfg.arm = def.arm;
        cfg.seed = task.seed;
        if (def.arm == train::Arm::kInfoTime) {
            cfg.tam.n_levels = 0;
            cfg.tam.blend_lambda = 0.0;
            cfg.ib.beta = spec.cdam_beta;
            cfg.ib.recon_weight = spec.cdam_recon_weight;
        } else {
            cfg.tam.n_levels = 0;
            cfg.tam.blend_lambda = 0.0;
        }
        cfg.target_channels = target_cols;

        train::Trainer trainer(cfg, train_frame);
        trainer.fit();
        task.matched_mse = trainer.evaluate_test().mse;
        task.mse_per_sigma.reserve(spec.sigma_test_grid.size());
        for (double sigma : spec.sigma_test_grid) {
            data::SyntheticSpec eval_spec = data_spec;
            eval_spec.sigma_test = sigma;
            data::SeriesFrame eval_frame =
                lead_covariates(data::generate_synthetic(eval_spec), target_cols, lead);
            task.mse_per_sigma.push_back(trainer.evaluate_test_on(eval_frame).mse);
        }
      } catch (const std::exception& e) {
        task_errors[i] = e.what();
      }
    });
    for (const std::string& err : task_errors)
        if (!err.empty())
            throw std::runtime_error("synthetic experiment: run failed: " + err);

    SynthExperimentResult out;
    out.sigma_grid = spec.sigma_test_grid;
    const double inv_seeds = 1.0 / static_cast<double>(spec.seeds.size());
    for (std::size_t a = 0; a < 3; ++a) {
        SynthArmResult arm;
        arm.arm = defs[a].name;
        arm.mse_per_sigma.assign(spec.sigma_test_grid.size(), 0.0);
        arm.ratio_per_sigma.assign(spec.sigma_test_grid.size(), 0.0);
        for (const Task& task : tasks) {
            if (task.arm_index != a) continue;
            arm.matched_mse += task.matched_mse * inv_seeds;
            for (std::size_t g = 0; g < spec.sigma_test_grid.size(); ++g) {
                arm.mse_per_sigma[g] += task.mse_per_sigma[g] * inv_seeds;
                arm.ratio_per_sigma[g] += task.mse_per_sigma[g] / task.matched_mse * inv_seeds;
            }
        }
        out.arms.push_back(std::move(arm));
    }
    return out;
}

std::string SweepResult::csv() const {
    std::ostringstream os;
    os << "value,mean_mse\n";
    for (std::size_t i = 0; i < values.size(); ++i)
        os << fmt(values[i]) << ',' << fmt(mean_mse[i]) << '\n';
    os << "value,seed,mse,mae\n";
    for (const auto& r : rows)
        os << r.arm << ',' << r.seed << ',' << fmt(r.mse) << ',' << fmt(r.mae) << '\n';
    return os.str();
}

SweepResult run_sweep(const SweepSpec& spec) {
    if (spec.grid.empty()) throw ConfigError("sweep: empty grid");
    if (!std::is_sorted(spec.grid.begin(), spec.grid.end()))
        throw ConfigError("sweep: grid must be sorted ascending");
    if (spec.seeds.empty()) throw ConfigError("sweep: seeds must be nonempty");

    struct Run {
        std::size_t value_index = 0;
        std::uint64_t seed = 0;
        double mse = 0.0, mae = 0.0;
        bool failed = false;
        std::string error{};
    };
    std::vector<Run> runs;
    for (std::size_t v = 0; v < spec.grid.size(); ++v)
        for (std::uint64_t seed : spec.seeds) {
            Run run;
            run.value_index = v;
            run.seed = seed;
            runs.push_back(run);
        }

    parallel_for(runs.size(), spec.jobs, [&](std::size_t i) {
        Run& run = runs[i];
        try {
            train::TrainConfig cfg = spec.base;
            cfg.seed = run.seed;
            if (spec.param == SweepSpec::Param::kBeta)
                cfg.ib.beta = spec.grid[run.value_index];
            else
                cfg.tam.blend_lambda = spec.grid[run.value_index];
            train::Trainer trainer(cfg, spec.frame);
            train::FitResult fit = trainer.fit();
            run.mse = fit.test_mse;
            run.mae = fit.test_mae;
        } catch (const std::exception& e) {
            run.failed = true;
            run.error = e.what();
        }
    });

    SweepResult out;
    out.values = spec.grid;
    out.mean_mse.assign(spec.grid.size(), 0.0);
    std::vector<std::size_t> counts(spec.grid.size(), 0);
    for (const Run& run : runs) {
        if (run.failed)
            throw std::runtime_error("sweep: run failed (value " +
                                     std::to_string(spec.grid[run.value_index]) + ", seed " +
                                     std::to_string(run.seed) + "): " + run.error);
        out.mean_mse[run.value_index] += run.mse;
        ++counts[run.value_index];
        out.rows.push_back({spec.dataset_name, fmt(spec.grid[run.value_index]), spec.base.model.horizon,
                            run.seed, run.mse, run.mae});
    }
    for (std::size_t v = 0; v < out.mean_mse.size(); ++v)
        out.mean_mse[v] /= static_cast<double>(counts[v]);
    return out;
}

} // namespace infotime::eval
