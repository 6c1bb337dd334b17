#pragma once

#include <vector>

#include "infotime/data/series.hpp"
#include "infotime/numcore/tensor.hpp"

namespace infotime::data {

/// One batch of sliding windows: X is B x T x C history, Y the contiguous
/// B x P x C target. Y starts exactly where X ends. When instance
/// normalization is on, X has been z-scored per (window, channel) over the
/// T axis and the affine statistics are retained for denormalization.
struct WindowBatch {
    std::size_t batch = 0, lookback = 0, horizon = 0, channels = 0;
    std::vector<double> x; // batch * lookback * channels
    std::vector<double> y; // batch * horizon * channels
    std::vector<double> inst_mean; // batch * channels
    std::vector<double> inst_std;  // batch * channels
    bool instance_normalized = false;

    double x_at(std::size_t b, std::size_t t, std::size_t c) const {
        return x[(b * lookback + t) * channels + c];
    }
    double y_at(std::size_t b, std::size_t t, std::size_t c) const {
        return y[(b * horizon + t) * channels + c];
    }
};

/// Window start offsets within [range.begin, range.end): range.begin,
/// +stride, ... while the target still fits. Empty when nothing fits.
std::vector<std::size_t> make_windows(const RowRange& range, std::size_t lookback,
                                      std::size_t horizon, std::size_t stride);

/// Copy the windows at the given start offsets out of the frame.
WindowBatch materialize_batch(const SeriesFrame& frame, std::span<const std::size_t> offsets,
                              std::size_t lookback, std::size_t horizon);

/// Per-window, per-channel z-scoring of X over the T axis (population
/// statistics, std floored at 1e-5). Mutates the batch in place.
void instance_normalize(WindowBatch& batch);

/// Inverse affine for any B x L x C value buffer laid out like the batch.
std::vector<double> instance_denormalize(const WindowBatch& batch,
                                         std::span<const double> values, std::size_t length);

// Batch-to-tensor assembly (leaf tensors, no gradient links).

/// [B, T] history of one channel.
numcore::Tensor channel_history(const WindowBatch& batch, std::size_t channel);
/// [B, P] target of one channel.
numcore::Tensor channel_target(const WindowBatch& batch, std::size_t channel);
/// [B, (C-1)*T] flattened history of all channels except `channel`.
numcore::Tensor others_history(const WindowBatch& batch, std::size_t channel);
/// [B] per-window instance mean / std for one channel.
numcore::Tensor channel_inst_mean(const WindowBatch& batch, std::size_t channel);
numcore::Tensor channel_inst_std(const WindowBatch& batch, std::size_t channel);

} // namespace infotime::data
