#pragma once

#include <span>
#include <utility>
#include <vector>

#include "infotime/models/networks.hpp"

namespace infotime::tam {

using numcore::Tensor;

/// Downsampling depth N and the blend weight between the spliced
/// auxiliary forecasts and the direct forecast.
struct TamConfig {
    std::size_t n_levels = 2;
    double blend_lambda = 0.8;

    void validate(std::size_t horizon) const;
};

/// The m = 2^n interleaved sub-sequences of a [B x P] series at level n;
/// sub_seqs[j] holds positions j, j+m, j+2m, ... Lossless:
/// inverse_interleave(downsample(s, n)) == s bit-exactly.
struct SubSequenceSet {
    std::size_t level = 0;
    std::vector<Tensor> sub_seqs;
};

SubSequenceSet downsample(const Tensor& series, std::size_t level);
Tensor inverse_interleave(const SubSequenceSet& set);

/// All 2*(2^n - 1) neighbour predictions at one level, one channel.
/// from_left[k] is the candidate for slot k+1 emitted by slot k
/// (direction right); from_right[k] is the candidate for slot k emitted
/// by slot k+1 (direction left). Both vectors have m-1 entries.
struct AdjacentPredictions {
    std::size_t level = 0;
    std::vector<Tensor> from_left;
    std::vector<Tensor> from_right;

    std::size_t term_count() const { return from_left.size() + from_right.size(); }
};

/// Run the level-n predictors over every forecast sub-sequence.
AdjacentPredictions predict_level(const models::AdjacentPredictors& nets,
                                  const SubSequenceSet& forecast_subs, const Tensor& x_embedded);

/// L_n for one channel: unit-variance Gaussian NLL == MSE of every
/// neighbour prediction against its target sub-sequence, summed over the
/// 2*(2^n - 1) terms and divided by m. The caller averages over channels.
Tensor level_loss(const AdjacentPredictions& preds, const SubSequenceSet& targets);

/// How each slot of a spliced series was filled.
enum class SliceSource { kRightOnly, kLeftOnly, kAveraged };

/// Y_hat_n for one channel: slot 1 takes its right-neighbour prediction,
/// slot m its left-neighbour prediction, interior slots the average of
/// both; the slots are then re-interleaved to full length.
struct SpliceResult {
    Tensor series; // [B x P]
    std::vector<SliceSource> provenance;
};

SpliceResult splice_predictions(const AdjacentPredictions& preds);

/// Blend the N spliced series with the direct forecast,
///   final = lambda * mean(spliced) + (1 - lambda) * direct,
/// and score it: L_p = MSE(target, final). With no levels lambda must be
/// 0 and the blend degenerates to the direct forecast.
std::pair<Tensor, Tensor> blend_and_lp(const Tensor& direct, std::span<const Tensor> spliced,
                                       const Tensor& target, double blend_lambda);

/// L_total = L_IB + sum_n L_n + L_p. A non-finite term is reported by
/// name.
Tensor total_loss(const Tensor& l_ib, std::span<const Tensor> l_levels, const Tensor& l_p);

} // namespace infotime::tam
