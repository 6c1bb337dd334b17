#pragma once

#include <span>
#include <string>

#include "infotime/numcore/tensor.hpp"

namespace infotime::eval {

/// Mean of squared / absolute elementwise differences.
double mse(std::span<const double> forecast, std::span<const double> target);
double mae(std::span<const double> forecast, std::span<const double> target);
double mse(const numcore::Tensor& forecast, const numcore::Tensor& target);
double mae(const numcore::Tensor& forecast, const numcore::Tensor& target);

/// One run's test-set scores, standardized scale.
struct MetricReport {
    std::string dataset;
    std::string arm;
    std::size_t horizon = 0;
    std::uint64_t seed = 0;
    double mse = 0.0;
    double mae = 0.0;
};

} // namespace infotime::eval
