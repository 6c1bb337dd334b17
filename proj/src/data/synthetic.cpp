#include "infotime/data/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "infotime/rng.hpp"

namespace infotime::data {

void SyntheticSpec::validate() const {
    if (components < 1) throw ConfigError("synthetic: J must be >= 1");
    if (num_targets < 1) throw ConfigError("synthetic: need at least one target channel");
    if (length < 2) throw ConfigError("synthetic: series length must be >= 2");
    if (segment_length < 2) throw ConfigError("synthetic: segment_length must be >= 2");
    if (sigma_train < 0 || sigma_test < 0) throw ConfigError("synthetic: sigma must be >= 0");
    if (test_fraction < 0 || test_fraction > 1)
        throw ConfigError("synthetic: test_fraction must lie in [0,1]");
}

double sum_of_sinusoids(std::span<const double> amplitude, std::span<const double> frequency,
                        std::span<const double> phase, double x) {
    double y = 0.0;
    for (std::size_t j = 0; j < amplitude.size(); ++j)
        y += amplitude[j] * std::sin(frequency[j] * x + phase[j]);
    return y;
}

SeriesFrame generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t L = spec.length;
    const std::size_t J = spec.components;
    const std::size_t C = spec.total_channels();
    const std::size_t knots = (L - 1) / spec.segment_length + 2;

    // Independent streams so that e.g. changing the noise level never
    // perturbs the sinusoid parameters.
    Rng param_rng = make_rng(spec.seed, 1);
    Rng noise_rng = make_rng(spec.seed, 2);
    Rng channel_rng = make_rng(spec.seed, 3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // knot values: [target][component][knot] for A, w, p
    const std::size_t per_target = 3 * J * knots;
    std::vector<double> knot_values(spec.num_targets * per_target);
    for (std::size_t i = 0; i < spec.num_targets; ++i)
        for (std::size_t k = 0; k < knots; ++k)
            for (std::size_t j = 0; j < J; ++j) {
                const std::size_t base = i * per_target + (k * J + j) * 3;
                knot_values[base + 0] = unit(param_rng);  // A
                knot_values[base + 1] = angle(param_rng); // w
                knot_values[base + 2] = angle(param_rng); // p
            }

    auto knot_at = [&](std::size_t target, std::size_t knot, std::size_t j, std::size_t which) {
        return knot_values[target * per_target + (knot * J + j) * 3 + which];
    };
    auto param_at = [&](std::size_t target, std::size_t t, std::size_t j, std::size_t which) {
        const std::size_t k = t / spec.segment_length;
        if (!spec.interpolate) return knot_at(target, k, j, which);
        const double frac = static_cast<double>(t - k * spec.segment_length) /
                            static_cast<double>(spec.segment_length);
        return (1.0 - frac) * knot_at(target, k, j, which) + frac * knot_at(target, k + 1, j, which);
    };

    SeriesFrame frame;
    frame.rows = L;
    frame.cols = C;
    frame.values.assign(L * C, 0.0);
    frame.timestamps.reserve(L);
    for (std::size_t r = 0; r < L; ++r) frame.timestamps.push_back(std::to_string(r));

    frame.channel_names.reserve(C);
    for (std::size_t i = 0; i < spec.num_targets; ++i) {
        frame.channel_names.push_back("y" + std::to_string(i));
        for (std::size_t j = 0; j < J; ++j) {
            frame.channel_names.push_back("A" + std::to_string(i) + "_" + std::to_string(j));
            frame.channel_names.push_back("w" + std::to_string(i) + "_" + std::to_string(j));
            frame.channel_names.push_back("p" + std::to_string(i) + "_" + std::to_string(j));
        }
    }
    frame.channel_names.push_back("x");
    for (std::size_t k = 0; k < spec.noise_channels; ++k)
        frame.channel_names.push_back("n" + std::to_string(k));

    const std::size_t x_col = spec.num_targets * spec.block_size();
    const std::size_t test_begin = L - static_cast<std::size_t>(std::floor(
                                           static_cast<double>(L) * spec.test_fraction));

    std::vector<double> a(J), w(J), p(J);
    for (std::size_t i = 0; i < spec.num_targets; ++i) {
        const std::size_t block = spec.target_channel(i);
        for (std::size_t t = 0; t < L; ++t) {
            const double x = static_cast<double>(t) / static_cast<double>(L - 1);
            for (std::size_t j = 0; j < J; ++j) {
                a[j] = param_at(i, t, j, 0);
                w[j] = param_at(i, t, j, 1);
                p[j] = param_at(i, t, j, 2);
                frame.at(t, block + 1 + 3 * j + 0) = a[j];
                frame.at(t, block + 1 + 3 * j + 1) = w[j];
                frame.at(t, block + 1 + 3 * j + 2) = p[j];
            }
            frame.at(t, block) = sum_of_sinusoids(a, w, p, x);
        }
    }
    // noise draws happen in a fixed (target, t) order regardless of sigma
    for (std::size_t i = 0; i < spec.num_targets; ++i) {
        const std::size_t block = spec.target_channel(i);
        for (std::size_t t = 0; t < L; ++t) {
            const double eta = gauss(noise_rng);
            const double sigma = t < test_begin ? spec.sigma_train : spec.sigma_test;
            frame.at(t, block) += sigma * eta;
        }
    }
    for (std::size_t t = 0; t < L; ++t)
        frame.at(t, x_col) = static_cast<double>(t) / static_cast<double>(L - 1);
    for (std::size_t k = 0; k < spec.noise_channels; ++k)
        for (std::size_t t = 0; t < L; ++t) frame.at(t, x_col + 1 + k) = gauss(channel_rng);

    return frame;
}

} // namespace infotime::data
