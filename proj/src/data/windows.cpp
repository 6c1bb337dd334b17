#include "infotime/data/windows.hpp"

#include <cmath>

namespace infotime::data {

using numcore::Tensor;

std::vector<std::size_t> make_windows(const RowRange& range, std::size_t lookback,
                                      std::size_t horizon, std::size_t stride) {
    if (lookback == 0 || horizon == 0) throw ConfigError("windows: T and P must be >= 1");
    if (stride == 0) throw ConfigError("windows: stride must be >= 1");
    std::vector<std::size_t> offsets;
    if (range.empty()) return offsets;
    const std::size_t window = lookback + horizon;
    for (std::size_t start = range.begin; start + window <= range.end; start += stride)
        offsets.push_back(start);
    return offsets;
}

WindowBatch materialize_batch(const SeriesFrame& frame, std::span<const std::size_t> offsets,
                              std::size_t lookback, std::size_t horizon) {
    WindowBatch batch;
    batch.batch = offsets.size();
    batch.lookback = lookback;
    batch.horizon = horizon;
    batch.channels = frame.cols;
    batch.x.resize(batch.batch * lookback * frame.cols);
    batch.y.resize(batch.batch * horizon * frame.cols);
    for (std::size_t b = 0; b < offsets.size(); ++b) {
        const std::size_t start = offsets[b];
        if (start + lookback + horizon > frame.rows)
            throw ContractError("windows: offset " + std::to_string(start) + " out of range");
        std::copy(frame.values.begin() + static_cast<std::ptrdiff_t>(start * frame.cols),
                  frame.values.begin() + static_cast<std::ptrdiff_t>((start + lookback) * frame.cols),
                  batch.x.begin() + static_cast<std::ptrdiff_t>(b * lookback * frame.cols));
        std::copy(frame.values.begin() + static_cast<std::ptrdiff_t>((start + lookback) * frame.cols),
                  frame.values.begin() +
                      static_cast<std::ptrdiff_t>((start + lookback + horizon) * frame.cols),
                  batch.y.begin() + static_cast<std::ptrdiff_t>(b * horizon * frame.cols));
    }
    return batch;
}

void instance_normalize(WindowBatch& batch) {
    if (batch.lookback < 2) throw ConfigError("instance norm: needs T >= 2");
    const double floor = 1e-5;
    const std::size_t B = batch.batch, T = batch.lookback, C = batch.channels;
    batch.inst_mean.assign(B * C, 0.0);
    batch.inst_std.assign(B * C, 0.0);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c) {
            double mean = 0.0;
            for (std::size_t t = 0; t < T; ++t) mean += batch.x_at(b, t, c);
            mean /= static_cast<double>(T);
            double var = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
                const double d = batch.x_at(b, t, c) - mean;
                var += d * d;
            }
            const double sd = std::max(std::sqrt(var / static_cast<double>(T)), floor);
            batch.inst_mean[b * C + c] = mean;
            batch.inst_std[b * C + c] = sd;
            for (std::size_t t = 0; t < T; ++t)
                batch.x[(b * T + t) * C + c] = (batch.x_at(b, t, c) - mean) / sd;
        }
    batch.instance_normalized = true;
}

std::vector<double> instance_denormalize(const WindowBatch& batch,
                                         std::span<const double> values, std::size_t length) {
    if (!batch.instance_normalized)
        throw ContractError("instance denorm: batch was not instance-normalized");
    const std::size_t B = batch.batch, C = batch.channels;
    if (values.size() != B * length * C)
        throw ShapeError("instance denorm: value buffer size mismatch");
    std::vector<double> out(values.size());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < length; ++t)
            for (std::size_t c = 0; c < C; ++c) {
                const std::size_t i = (b * length + t) * C + c;
                out[i] = values[i] * batch.inst_std[b * C + c] + batch.inst_mean[b * C + c];
            }
    return out;
}

Tensor channel_history(const WindowBatch& batch, std::size_t channel) {
    const std::size_t B = batch.batch, T = batch.lookback, C = batch.channels;
    std::vector<double> v(B * T);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t) v[b * T + t] = batch.x[(b * T + t) * C + channel];
    return Tensor::from({B, T}, std::move(v));
}

Tensor channel_target(const WindowBatch& batch, std::size_t channel) {
    const std::size_t B = batch.batch, P = batch.horizon, C = batch.channels;
    std::vector<double> v(B * P);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < P; ++t) v[b * P + t] = batch.y[(b * P + t) * C + channel];
    return Tensor::from({B, P}, std::move(v));
}

Tensor others_history(const WindowBatch& batch, std::size_t channel) {
    const std::size_t B = batch.batch, T = batch.lookback, C = batch.channels;
    if (C < 2) throw ContractError("others_history: needs at least two channels");
    std::vector<double> v(B * T * (C - 1));
    for (std::size_t b = 0; b < B; ++b) {
        std::size_t k = 0;
        for (std::size_t c = 0; c < C; ++c) {
            if (c == channel) continue;
            for (std::size_t t = 0; t < T; ++t)
                v[b * T * (C - 1) + k * T + t] = batch.x[(b * T + t) * C + c];
            ++k;
        }
    }
    return Tensor::from({B, T * (C - 1)}, std::move(v));
}

Tensor channel_inst_mean(const WindowBatch& batch, std::size_t channel) {
    const std::size_t B = batch.batch, C = batch.channels;
    std::vector<double> v(B);
    for (std::size_t b = 0; b < B; ++b) v[b] = batch.inst_mean[b * C + channel];
    return Tensor::from({B}, std::move(v));
}

Tensor channel_inst_std(const WindowBatch& batch, std::size_t channel) {
    const std::size_t B = batch.batch, C = batch.channels;
    std::vector<double> v(B);
    for (std::size_t b = 0; b < B; ++b) v[b] = batch.inst_std[b * C + channel];
    return Tensor::from({B}, std::move(v));
}

} // namespace infotime::data
