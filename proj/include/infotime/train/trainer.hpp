#pragma once

#include <functional>
#include <optional>

#include "infotime/cdam/cdam.hpp"
#include "infotime/data/windows.hpp"
#include "infotime/models/networks.hpp"
#include "infotime/numcore/adam.hpp"
#include "infotime/tam/tam.hpp"

namespace infotime::train {

/// Ablation arm: Original trains the backbone with plain MSE; +TAM adds
/// the adjacent-sub-sequence losses and the blended forecast; +InfoTime
/// adds the information-bottleneck terms on top.
enum class Arm { kOriginal, kTam, kInfoTime };

/// Which forecasting head carries the run. kRmlp is the
/// channel-independence baseline; kMlp is the channel-mixing (or
/// channel-independence) encoder + single-step forecaster. An +InfoTime
/// arm always uses the encoder + forecaster head, with the latent
/// concatenated into the final head's input.
enum class Backbone { kRmlp, kMlp };

const char* arm_name(Arm arm);
Arm parse_arm(const std::string& name);

struct TrainConfig {
    models::ModelConfig model;
    cdam::IBConfig ib;
    tam::TamConfig tam;
    Arm arm = Arm::kOriginal;
    Backbone backbone = Backbone::kRmlp;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    double q_lr = 1e-3;
    std::size_t patience = 3;
    std::size_t stride = 1;
    /// Global gradient-norm clip for both optimizers; 0 disables. Keeps
    /// the alternating vCLUB updates bounded under extreme beta.
    double grad_clip = 10.0;
    std::uint64_t seed = 0;
    data::SplitSpec split;
    /// Channels whose forecasts are trained and scored; empty = all.
    std::vector<std::size_t> target_channels;

    void validate() const;
    std::vector<std::size_t> targets() const;
    /// Downsampling levels active under this arm.
    std::size_t active_levels() const { return arm == Arm::kOriginal ? 0 : tam.n_levels; }
};

/// The networks one run owns. Only the arm's components are constructed;
/// an Original arm never instantiates the posterior, decoder or adjacent
/// predictors.
struct ModelBundle {
    std::optional<models::Rmlp> rmlp;
    std::optional<models::Encoder> encoder;
    std::optional<models::Forecaster> forecaster;
    std::optional<models::Decoder> decoder;
    std::vector<models::Posterior> posteriors; // one per target channel
    std::optional<models::AdjacentPredictors> predictors;
    std::vector<std::size_t> target_channels;

    static ModelBundle build(const TrainConfig& cfg, Rng& rng);
    numcore::ParamList main_params() const;
    numcore::ParamList posterior_params() const;
    numcore::ParamList all_params() const;
};

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
};

struct EpochRow {
    std::size_t epoch = 0; // 1-based
    cdam::LossBreakdown train;
    double val_mse = 0.0, val_mae = 0.0;
    double test_mse = 0.0, test_mae = 0.0;
    double seconds = 0.0;
};

/// Per-epoch log plus the early-stopping marker.
struct RunLog {
    std::vector<EpochRow> rows;
    std::size_t best_epoch = 0; // 1-based index into rows

    /// "epoch,train_total,...,seconds". Timing is zeroed unless
    /// `include_timing` so artifacts stay byte-reproducible.
    std::string csv(bool include_timing = false) const;
};

struct FitResult {
    RunLog log;
    numcore::ParamList best_params; // deep copies
    double val_mse = 0.0;
    double test_mse = 0.0;
    double test_mae = 0.0;
};

/// Optional observers for streaming step/epoch rows to disk.
struct FitHooks {
    std::function<void(std::size_t step, const cdam::LossBreakdown&)> on_step;
    std::function<void(const EpochRow&)> on_epoch;
};

/// One training run: owns the standardized data, windows, model bundle
/// and optimizer state. Deterministic given (config, frame): every random
/// stream derives from the master seed.
class Trainer {
public:
    struct ChannelForward {
        numcore::Tensor final_forecast; // [B x P], standardized scale
        numcore::Tensor direct;
        numcore::Tensor pred_nll;
        numcore::Tensor recon_nll;
        numcore::Tensor vclub;
        numcore::Tensor l_p;
    };
    struct BatchForward {
        std::vector<ChannelForward> channels; // one per target
        std::vector<numcore::Tensor> level_losses;
        numcore::Tensor loss;
        cdam::LossBreakdown breakdown;
    };

    Trainer(TrainConfig cfg, const data::SeriesFrame& raw_frame);

    /// Full loop with early stopping on validation MSE; restores the
    /// best-validation weights before returning.
    FitResult fit(const FitHooks* hooks = nullptr);

    /// One pass over the shuffled train windows; returns the epoch-mean
    /// loss breakdown. Exposed for tests.
    cdam::LossBreakdown train_epoch(std::size_t epoch_index, const FitHooks* hooks = nullptr);

    Metrics evaluate(std::span<const std::size_t> offsets);
    Metrics evaluate_val() { return evaluate(val_offsets_); }
    Metrics evaluate_test() { return evaluate(test_offsets_); }

    /// Final forecasts (blended when TAM is active) for every target
    /// channel of a batch, standardized scale. Pure given the weights.
    std::vector<numcore::Tensor> forecast_batch(const data::WindowBatch& batch);

    /// Test metrics on a replacement frame with the same layout (e.g. the
    /// same synthetic series regenerated under a different noise level).
    /// The frame is standardized with this run's training statistics.
    Metrics evaluate_test_on(const data::SeriesFrame& raw_frame);

    ModelBundle& bundle() { return bundle_; }
    const TrainConfig& config() const { return cfg_; }
    const data::NormStats& norm_stats() const { return norm_; }
    const data::SeriesFrame& standardized_frame() const { return frame_; }
    std::size_t train_window_count() const { return train_offsets_.size(); }

    /// The arm's full loss on one batch with no parameter updates;
    /// vCLUB negatives are drawn from `neg_rng`. Reseeding the generator
    /// identically makes repeated calls bit-reproducible, which is what
    /// the finite-difference acceptance checks rely on.
    BatchForward loss_forward(const data::WindowBatch& batch, Rng& neg_rng) {
        return forward(batch, false, neg_rng);
    }

    /// Batch assembly helper (instance-normalizes when configured).
    data::WindowBatch prepare_batch(std::span<const std::size_t> offsets) const {
        return make_batch(offsets);
    }
    std::span<const std::size_t> test_offsets() const { return test_offsets_; }

private:
    data::WindowBatch make_batch(std::span<const std::size_t> offsets) const;
    data::WindowBatch make_batch_from(const data::SeriesFrame& frame,
                                      std::span<const std::size_t> offsets) const;
    /// Full loss forward. When `training` and the arm has a posterior,
    /// runs one posterior fit step per channel on the detached latents
    /// before the bottleneck terms are evaluated.
    BatchForward forward(const data::WindowBatch& batch, bool training, Rng& neg_rng);

    TrainConfig cfg_;
    data::NormStats norm_;
    data::SeriesFrame frame_; // standardized
    data::SplitRanges splits_;
    std::vector<std::size_t> train_offsets_, val_offsets_, test_offsets_;
    ModelBundle bundle_;
    numcore::Adam opt_main_;
    numcore::Adam opt_q_;
    numcore::ParamList main_param_list_;
    std::size_t global_step_ = 0;
};

numcore::ParamList clone_params(const numcore::ParamList& params);
void restore_params(const numcore::ParamList& saved, numcore::ParamList target);

} // namespace infotime::train
