#include "infotime/eval/metrics.hpp"

#include <cmath>

#include "infotime/errors.hpp"

namespace infotime::eval {

double mse(std::span<const double> forecast, std::span<const double> target) {
    if (forecast.size() != target.size() || forecast.empty())
        throw ShapeError("mse: size mismatch or empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < forecast.size(); ++i) {
        const double d = forecast[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(forecast.size());
}

double mae(std::span<const double> forecast, std::span<const double> target) {
    if (forecast.size() != target.size() || forecast.empty())
        throw ShapeError("mae: size mismatch or empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < forecast.size(); ++i) acc += std::abs(forecast[i] - target[i]);
    return acc / static_cast<double>(forecast.size());
}

double mse(const numcore::Tensor& forecast, const numcore::Tensor& target) {
    if (forecast.shape() != target.shape()) throw ShapeError("mse: tensor shapes differ");
    return mse(forecast.values(), target.values());
}

double mae(const numcore::Tensor& forecast, const numcore::Tensor& target) {
    if (forecast.shape() != target.shape()) throw ShapeError("mae: tensor shapes differ");
    return mae(forecast.values(), target.values());
}

} // namespace infotime::eval
