#include "infotime/models/networks.hpp"

namespace infotime::models {

namespace nc = numcore;

void ModelConfig::validate() const {
    if (lookback < 1 || horizon < 1 || channels < 1 || latent < 1 || hidden < 1)
        throw ConfigError("model: all dimensions must be >= 1");
}

Encoder::Encoder(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg.validate();
    time_ = Mlp({cfg.lookback, cfg.hidden, cfg.hidden, cfg.latent}, rng);
    if (cfg.mode == ChannelMode::kMixing)
        mix_ = Mlp({cfg.channels * cfg.latent, cfg.hidden, cfg.channels * cfg.latent}, rng);
}

std::vector<Tensor> Encoder::encode(std::span<const Tensor> x_channels) const {
    if (x_channels.size() != cfg_.channels)
        throw ShapeError("encoder: expected " + std::to_string(cfg_.channels) + " channels, got " +
                         std::to_string(x_channels.size()));
    std::vector<Tensor> embedded;
    embedded.reserve(cfg_.channels);
    for (const Tensor& x : x_channels) {
        if (x.rank() != 2 || x.dim(1) != cfg_.lookback)
            throw ShapeError("encoder: channel history must be [B x " +
                             std::to_string(cfg_.lookback) + "], got " + nc::shape_str(x.shape()));
        embedded.push_back(time_(x));
    }
    if (cfg_.mode == ChannelMode::kIndependence) return embedded;

    Tensor mixed = mix_(nc::concat_cols(embedded));
    std::vector<Tensor> out;
    out.reserve(cfg_.channels);
    for (std::size_t c = 0; c < cfg_.channels; ++c)
        out.push_back(nc::slice_cols(mixed, c * cfg_.latent, cfg_.latent));
    return out;
}

void Encoder::collect(nc::ParamList& out, const std::string& prefix) const {
    time_.collect(out, prefix + ".time");
    if (cfg_.mode == ChannelMode::kMixing) mix_.collect(out, prefix + ".mix");
}

Forecaster::Forecaster(const ModelConfig& cfg, Rng& rng)
    : net_({cfg.lookback + cfg.latent, cfg.hidden, cfg.horizon}, rng) {}

Tensor Forecaster::operator()(const Tensor& x_i, const Tensor& z_i) const {
    return net_(nc::concat_cols(x_i, z_i));
}

void Forecaster::collect(nc::ParamList& out, const std::string& prefix) const {
    net_.collect(out, prefix);
}

Decoder::Decoder(const ModelConfig& cfg, Rng& rng)
    : net_({cfg.latent, cfg.hidden, cfg.lookback}, rng) {}

Tensor Decoder::operator()(const Tensor& z_i) const { return net_(z_i); }

void Decoder::collect(nc::ParamList& out, const std::string& prefix) const {
    net_.collect(out, prefix);
}

Posterior::Posterior(const ModelConfig& cfg, Rng& rng) {
    if (cfg.channels < 2) throw ConfigError("posterior: needs at least two channels");
    const std::size_t in = (cfg.channels - 1) * cfg.lookback;
    trunk_ = Mlp({in, cfg.hidden, cfg.hidden, cfg.hidden}, rng);
    mean_head_ = Linear(cfg.hidden, cfg.latent, rng);
    logvar_head_ = Linear(cfg.hidden, cfg.latent, rng);
    logvar_head_.zero_init();
}

GaussianParams Posterior::operator()(const Tensor& x_others) const {
    Tensor features = nc::relu(trunk_(x_others));
    return {mean_head_(features), nc::clamp(logvar_head_(features), -10.0, 10.0)};
}

void Posterior::collect(nc::ParamList& out, const std::string& prefix) const {
    trunk_.collect(out, prefix + ".trunk");
    mean_head_.collect(out, prefix + ".mean");
    logvar_head_.collect(out, prefix + ".logvar");
}

AdjacentPredictors::AdjacentPredictors(const ModelConfig& cfg, std::size_t n_levels, Rng& rng)
    : horizon_(cfg.horizon), embed_(cfg.lookback, cfg.latent, rng) {
    if (n_levels > 0 && cfg.horizon % (1u << n_levels) != 0)
        throw ConfigError("tam predictors: P=" + std::to_string(cfg.horizon) +
                          " is not divisible by 2^" + std::to_string(n_levels));
    for (std::size_t n = 1; n <= n_levels; ++n) {
        const std::size_t sub = cfg.horizon >> n;
        left_.emplace_back(std::vector<std::size_t>{sub + cfg.latent, cfg.hidden, sub}, rng);
        right_.emplace_back(std::vector<std::size_t>{sub + cfg.latent, cfg.hidden, sub}, rng);
    }
}

Tensor AdjacentPredictors::embed_history(const Tensor& x_i) const { return embed_(x_i); }

Tensor AdjacentPredictors::predict(const Tensor& sub_seq, const Tensor& x_embedded, Direction dir,
                                   std::size_t level) const {
    if (level < 1 || level > left_.size())
        throw ContractError("tam predictors: level " + std::to_string(level) + " out of range");
    const std::size_t expected = horizon_ >> level;
    if (sub_seq.rank() != 2 || sub_seq.dim(1) != expected)
        throw ShapeError("tam predictors: level " + std::to_string(level) +
                         " expects sub-sequences of length " + std::to_string(expected) +
                         ", got " + nc::shape_str(sub_seq.shape()));
    const Mlp& net = dir == Direction::kLeft ? left_[level - 1] : right_[level - 1];
    return net(nc::concat_cols(sub_seq, x_embedded));
}

Tensor AdjacentPredictors::predict_adjacent(const Tensor& sub_seq, const Tensor& x_i,
                                            Direction dir, std::size_t level) const {
    return predict(sub_seq, embed_history(x_i), dir, level);
}

void AdjacentPredictors::collect(nc::ParamList& out, const std::string& prefix) const {
    embed_.collect(out, prefix + ".embed");
    for (std::size_t n = 0; n < left_.size(); ++n) {
        left_[n].collect(out, prefix + ".left." + std::to_string(n + 1));
        right_[n].collect(out, prefix + ".right." + std::to_string(n + 1));
    }
}

Rmlp::Rmlp(const ModelConfig& cfg, Rng& rng)
    : net_({cfg.lookback, cfg.hidden, cfg.horizon}, rng) {}

Tensor Rmlp::operator()(const Tensor& x_i) const { return net_(x_i); }

void Rmlp::collect(nc::ParamList& out, const std::string& prefix) const {
    net_.collect(out, prefix);
}

} // namespace infotime::models
