#pragma once

#include <vector>

#include "infotime/data/synthetic.hpp"
#include "infotime/eval/metrics.hpp"
#include "infotime/train/trainer.hpp"

namespace infotime::eval {

/// Cross product of (arm, horizon, seed) runs over one dataset, mirroring
/// the ablation-table layout: one row per run plus per-cell means.
struct AblationSpec {
    std::string dataset_name;
    data::SeriesFrame frame;
    train::TrainConfig base;
    std::vector<std::size_t> horizons;
    std::vector<train::Arm> arms;
    std::vector<std::uint64_t> seeds;
    std::size_t jobs = 1;
};

struct AblationCell {
    train::Arm arm = train::Arm::kOriginal;
    std::size_t horizon = 0;
    double mean_mse = 0.0;
    double mean_mae = 0.0;
    bool failed = false;
    std::string error;
};

struct AblationResult {
    std::vector<MetricReport> rows;
    std::vector<AblationCell> cells;
    bool any_failed = false;

    const AblationCell* cell(train::Arm arm, std::size_t horizon) const;
    std::string report_csv() const;  // one row per run
    std::string summary_csv() const; // one row per (arm, horizon)
    std::string table_text() const;  // aligned text, horizons x arms
};

AblationResult run_ablation(const AblationSpec& spec);

/// The noise-robustness experiment: train channel-mixing,
/// channel-independence and CDAM arms on sigma_train data, then evaluate
/// each against test splits regenerated under every sigma_test in the
/// grid. The degradation ratio is MSE(sigma_test) / MSE(matched), with
/// the matched run evaluated at sigma_test == sigma_train.
struct SynthExperimentSpec {
    data::SyntheticSpec data;
    train::TrainConfig base; // backbone/arm/mode fields are set per arm
    std::vector<double> sigma_test_grid;
    std::vector<std::uint64_t> seeds;
    double cdam_beta = 1.0;
    double cdam_recon_weight = 1.0;
    /// Advance driver channels by the horizon so the lookback window
    /// carries the covariates of the target steps (they are known future
    /// inputs in this experiment). Requires lookback >= horizon.
    bool covariate_lead = true;
    std::size_t jobs = 1;
};

/// Shift every non-target channel `lead` rows into the future (row r
/// takes the value of row r+lead) and drop the last `lead` rows.
data::SeriesFrame lead_covariates(const data::SeriesFrame& frame,
                                  std::span<const std::size_t> target_channels,
                                  std::size_t lead);

struct SynthArmResult {
    std::string arm; // "channel_mixing" | "channel_independence" | "cdam"
    double matched_mse = 0.0;                 // seed mean at sigma_test == sigma_train
    std::vector<double> mse_per_sigma;        // seed means, one per grid value
    std::vector<double> ratio_per_sigma;      // mean over seeds of per-seed ratios
};

struct SynthExperimentResult {
    std::vector<double> sigma_grid;
    std::vector<SynthArmResult> arms;

    const SynthArmResult* arm(const std::string& name) const;
    std::string csv() const; // arm,sigma_test,mean_mse,mean_ratio
};

SynthExperimentResult run_synthetic_experiment(const SynthExperimentSpec& spec);

/// One fit per grid value of beta or lambda, shared seeds.
struct SweepSpec {
    enum class Param { kBeta, kLambda };
    Param param = Param::kBeta;
    std::vector<double> grid;
    std::string dataset_name;
    data::SeriesFrame frame;
    train::TrainConfig base;
    std::vector<std::uint64_t> seeds;
    std::size_t jobs = 1;
};

struct SweepResult {
    std::vector<double> values;
    std::vector<double> mean_mse; // aligned with values
    std::vector<MetricReport> rows;

    std::string csv() const; // value,mean_mse plus per-seed rows
};

SweepResult run_sweep(const SweepSpec& spec);

/// Run `fn(i)` for i in [0, n) on up to `jobs` threads. Tasks must be
/// independent; results must be written to disjoint slots.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

} // namespace infotime::eval
