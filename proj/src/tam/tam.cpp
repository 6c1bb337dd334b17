#include "infotime/tam/tam.hpp"

#include <cmath>

namespace infotime::tam {

namespace nc = numcore;

void TamConfig::validate(std::size_t horizon) const {
    if (blend_lambda < 0.0 || blend_lambda > 1.0)
        throw ConfigError("tam: lambda must lie in [0, 1]");
    if (n_levels > 0 && horizon % (1u << n_levels) != 0)
        throw ConfigError("tam: P=" + std::to_string(horizon) + " is not divisible by 2^" +
                          std::to_string(n_levels));
    if (n_levels == 0 && blend_lambda != 0.0)
        throw ConfigError("tam: lambda must be 0 when no downsampling levels are active");
}

SubSequenceSet downsample(const Tensor& series, std::size_t level) {
    if (series.rank() != 2) throw ShapeError("downsample: expected a [B x P] series");
    if (level == 0) throw ContractError("downsample: level must be >= 1");
    const std::size_t m = 1u << level;
    if (series.dim(1) % m != 0)
        throw ConfigError("downsample: length " + std::to_string(series.dim(1)) +
                          " is not divisible by 2^" + std::to_string(level));
    SubSequenceSet set;
    set.level = level;
    set.sub_seqs.reserve(m);
    for (std::size_t j = 0; j < m; ++j)
        set.sub_seqs.push_back(nc::slice_cols_strided(series, j, m));
    return set;
}

Tensor inverse_interleave(const SubSequenceSet& set) {
    if (set.sub_seqs.empty()) throw ContractError("inverse_interleave: empty set");
    if (set.sub_seqs.size() != (1u << set.level))
        throw ContractError("inverse_interleave: expected 2^level sub-sequences");
    return nc::interleave_cols(set.sub_seqs);
}

AdjacentPredictions predict_level(const models::AdjacentPredictors& nets,
                                  const SubSequenceSet& forecast_subs, const Tensor& x_embedded) {
    const std::size_t m = forecast_subs.sub_seqs.size();
    if (m < 2) throw ContractError("predict_level: need at least two sub-sequences");
    AdjacentPredictions preds;
    preds.level = forecast_subs.level;
    preds.from_left.reserve(m - 1);
    preds.from_right.reserve(m - 1);
    for (std::size_t j = 0; j + 1 < m; ++j)
        preds.from_left.push_back(nets.predict(forecast_subs.sub_seqs[j], x_embedded,
                                               models::Direction::kRight, forecast_subs.level));
    for (std::size_t j = 1; j < m; ++j)
        preds.from_right.push_back(nets.predict(forecast_subs.sub_seqs[j], x_embedded,
                                                models::Direction::kLeft, forecast_subs.level));
    return preds;
}

Tensor level_loss(const AdjacentPredictions& preds, const SubSequenceSet& targets) {
    if (preds.level != targets.level)
        throw ContractError("level_loss: prediction/target level mismatch");
    const std::size_t m = targets.sub_seqs.size();
    if (preds.from_left.size() != m - 1 || preds.from_right.size() != m - 1)
        throw ContractError("level_loss: expected 2*(m-1) predictions");
    Tensor acc;
    for (std::size_t k = 0; k + 1 < m; ++k) {
        Tensor left_term = nc::mse_loss(preds.from_left[k], targets.sub_seqs[k + 1]);
        Tensor right_term = nc::mse_loss(preds.from_right[k], targets.sub_seqs[k]);
        Tensor pair = nc::add(left_term, right_term);
        acc = k == 0 ? pair : nc::add(acc, pair);
    }
    return nc::mul_scalar(acc, 1.0 / static_cast<double>(m));
}

SpliceResult splice_predictions(const AdjacentPredictions& preds) {
    const std::size_t m = preds.from_left.size() + 1;
    if (preds.from_right.size() + 1 != m)
        throw ContractError("splice: expected 2*(m-1) predictions");
    SubSequenceSet slots;
    slots.level = preds.level;
    slots.sub_seqs.reserve(m);
    SpliceResult out;
    out.provenance.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        if (j == 0) {
            slots.sub_seqs.push_back(preds.from_right[0]);
            out.provenance.push_back(SliceSource::kRightOnly);
        } else if (j == m - 1) {
            slots.sub_seqs.push_back(preds.from_left[m - 2]);
            out.provenance.push_back(SliceSource::kLeftOnly);
        } else {
            slots.sub_seqs.push_back(
                nc::mul_scalar(nc::add(preds.from_left[j - 1], preds.from_right[j]), 0.5));
            out.provenance.push_back(SliceSource::kAveraged);
        }
    }
    out.series = inverse_interleave(slots);
    return out;
}

std::pair<Tensor, Tensor> blend_and_lp(const Tensor& direct, std::span<const Tensor> spliced,
                                       const Tensor& target, double blend_lambda) {
    if (blend_lambda < 0.0 || blend_lambda > 1.0)
        throw ConfigError("blend: lambda must lie in [0, 1]");
    Tensor final_series;
    if (spliced.empty()) {
        if (blend_lambda != 0.0)
            throw ConfigError("blend: lambda must be 0 without spliced series");
        final_series = direct;
    } else {
        Tensor acc = spliced[0];
        for (std::size_t n = 1; n < spliced.size(); ++n) acc = nc::add(acc, spliced[n]);
        Tensor spliced_mean = nc::mul_scalar(acc, 1.0 / static_cast<double>(spliced.size()));
        final_series = nc::add(nc::mul_scalar(spliced_mean, blend_lambda),
                               nc::mul_scalar(direct, 1.0 - blend_lambda));
    }
    return {final_series, nc::mse_loss(final_series, target)};
}

Tensor total_loss(const Tensor& l_ib, std::span<const Tensor> l_levels, const Tensor& l_p) {
    auto require_finite = [](const Tensor& t, const std::string& name) {
        if (!std::isfinite(t.item()))
            throw NumericError("total_loss: term " + name + " is not finite");
    };
    require_finite(l_ib, "l_ib");
    for (std::size_t n = 0; n < l_levels.size(); ++n)
        require_finite(l_levels[n], "l_" + std::to_string(n + 1));
    require_finite(l_p, "l_p");
    Tensor total = nc::add(l_ib, l_p);
    for (const Tensor& l : l_levels) total = nc::add(total, l);
    return total;
}

} // namespace infotime::tam
