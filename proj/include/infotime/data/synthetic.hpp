#pragma once

#include <cstdint>
#include <span>

#include "infotime/data/series.hpp"

namespace infotime::data {

/// Configuration for the sum-of-sinusoids generator. Each target channel
/// is y = sum_j A_j * sin(w_j * x + p_j) over J components, with x the
/// position in [0,1] and A ~ U(0,1), w ~ U(0,pi), p ~ U(0,pi). The
/// parameters drift: they are resampled at knots every `segment_length`
/// steps and linearly interpolated in between (or held piecewise-constant
/// when `interpolate` is off). Gaussian noise is added to y only:
/// sigma_train before the trailing test_fraction of rows, sigma_test
/// after. Optional pure-noise channels carry i.i.d. N(0,1) values that are
/// irrelevant to every target.
struct SyntheticSpec {
    std::size_t components = 5; // J
    std::size_t num_targets = 1;
    std::size_t length = 10000;
    std::size_t segment_length = 64;
    bool interpolate = true;
    double sigma_train = 0.0;
    double sigma_test = 0.0;
    double test_fraction = 0.2;
    std::size_t noise_channels = 0;
    std::uint64_t seed = 0;

    void validate() const;
    /// Channels per target block: y plus 3*J covariates.
    std::size_t block_size() const { return 1 + 3 * components; }
    std::size_t total_channels() const {
        return num_targets * block_size() + 1 + noise_channels;
    }
    /// Frame column of target i's y channel.
    std::size_t target_channel(std::size_t i) const { return i * block_size(); }
};

/// sum_j A_j * sin(w_j * x + p_j); shared by the generator and the tests
/// that recompute y from the covariate channels.
double sum_of_sinusoids(std::span<const double> amplitude, std::span<const double> frequency,
                        std::span<const double> phase, double x);

/// Deterministic in `spec.seed`: identical specs give bit-identical
/// frames, and changing only the sigmas rescales the same noise draws.
/// Channel layout per target i: y{i}, then A{i}_{j}, w{i}_{j}, p{i}_{j}
/// for each component j; after all targets the position channel x, then
/// noise channels n{k}.
SeriesFrame generate_synthetic(const SyntheticSpec& spec);

} // namespace infotime::data
