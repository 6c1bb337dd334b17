#pragma once

#include <span>
#include <vector>

#include "infotime/models/mlp.hpp"

namespace infotime::models {

enum class ChannelMode { kMixing, kIndependence };

/// Shared dimensions of all networks in one run.
struct ModelConfig {
    std::size_t lookback = 96;  // T
    std::size_t horizon = 96;   // P
    std::size_t channels = 1;   // C
    std::size_t latent = 64;    // d
    std::size_t hidden = 256;   // h
    ChannelMode mode = ChannelMode::kMixing;
    bool instance_norm = false;

    void validate() const;
};

/// Diagonal Gaussian over a latent: mean and logvar, both [B x d].
/// logvar is clamped to [-10, 10] by the producing network.
struct GaussianParams {
    Tensor mean;
    Tensor logvar;
};

/// Per-channel history embedding plus (in mixing mode) a two-layer MLP
/// across the channel axis, so each latent can read every channel.
/// In independence mode the mixing stage is skipped and Z^i depends only
/// on X^i.
class Encoder {
public:
    Encoder(const ModelConfig& cfg, Rng& rng);

    /// C tensors [B x T] in, C tensors [B x d] out.
    std::vector<Tensor> encode(std::span<const Tensor> x_channels) const;
    void collect(numcore::ParamList& out, const std::string& prefix = "encoder") const;

private:
    ModelConfig cfg_;
    Mlp time_; // T -> h -> h -> d
    Mlp mix_;  // C*d -> h -> C*d, mixing mode only
};

/// Single-step forecaster: all P future steps in one pass from
/// concat(x_i, z_i), interpreted as the mean of unit-variance Gaussians.
class Forecaster {
public:
    Forecaster(const ModelConfig& cfg, Rng& rng);

    Tensor operator()(const Tensor& x_i, const Tensor& z_i) const;
    void collect(numcore::ParamList& out, const std::string& prefix = "forecaster") const;

private:
    Mlp net_; // T+d -> h -> P
};

/// Reconstruction head x_hat = g(z_i), mean of a unit-variance Gaussian
/// over the history steps.
class Decoder {
public:
    Decoder(const ModelConfig& cfg, Rng& rng);

    Tensor operator()(const Tensor& z_i) const;
    void collect(numcore::ParamList& out, const std::string& prefix = "decoder") const;

private:
    Mlp net_; // d -> h -> T
};

/// Variational posterior q(z^i | x^o) for one channel: a shared trunk on
/// the flattened other-channel history and two linear heads. The logvar
/// head starts at zero, so q begins as a unit Gaussian.
class Posterior {
public:
    Posterior(const ModelConfig& cfg, Rng& rng);

    GaussianParams operator()(const Tensor& x_others) const;
    void collect(numcore::ParamList& out, const std::string& prefix) const;

private:
    Mlp trunk_; // (C-1)*T -> h -> h -> h
    Linear mean_head_;
    Linear logvar_head_;
};

enum class Direction { kLeft, kRight };

/// Adjacent sub-sequence predictors for every downsampling level: one
/// two-layer MLP per (level, direction), shared across sub-sequence
/// positions and channels. Histories enter through one learned linear
/// embedding of width d, so predictor input sizes depend only on the
/// level.
class AdjacentPredictors {
public:
    AdjacentPredictors(const ModelConfig& cfg, std::size_t n_levels, Rng& rng);

    std::size_t levels() const { return left_.size(); }
    /// [B x T] -> [B x d] shared context embedding.
    Tensor embed_history(const Tensor& x_i) const;
    /// Predict the neighbour of a [B x P/2^level] sub-sequence. kLeft
    /// emits a candidate for position j-1, kRight for position j+1.
    Tensor predict(const Tensor& sub_seq, const Tensor& x_embedded, Direction dir,
                   std::size_t level) const;
    /// Convenience wrapper taking the raw history.
    Tensor predict_adjacent(const Tensor& sub_seq, const Tensor& x_i, Direction dir,
                            std::size_t level) const;
    void collect(numcore::ParamList& out, const std::string& prefix = "tam") const;

private:
    std::size_t horizon_;
    Linear embed_;           // T -> d
    std::vector<Mlp> left_;  // level n at index n-1: P/2^n + d -> h -> P/2^n
    std::vector<Mlp> right_;
};

/// Channel-independence baseline: linear(T->h), ReLU, linear(h->P), the
/// same weights applied to every channel.
class Rmlp {
public:
    Rmlp(const ModelConfig& cfg, Rng& rng);

    Tensor operator()(const Tensor& x_i) const;
    void collect(numcore::ParamList& out, const std::string& prefix = "rmlp") const;

private:
    Mlp net_; // T -> h -> P
};

} // namespace infotime::models
