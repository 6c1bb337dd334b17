#pragma once

#include <string>
#include <vector>

#include "infotime/numcore/checkpoint.hpp"
#include "infotime/numcore/ops.hpp"
#include "infotime/rng.hpp"

namespace infotime::models {

using numcore::Tensor;

/// Fully-connected layer, y = x.W + b, W is [in x out].
/// Weights and biases start at uniform(-1/sqrt(in), +1/sqrt(in)).
struct Linear {
    Tensor w, b;

    Linear() = default;
    Linear(std::size_t in, std::size_t out, Rng& rng);

    Tensor operator()(const Tensor& x) const { return numcore::add(numcore::matmul(x, w), b); }
    void collect(numcore::ParamList& out, const std::string& prefix) const;
    void zero_init();
};

/// Stack of Linear layers with ReLU between them (none after the last).
/// dims = {in, hidden..., out}; dims.size()-1 weight layers.
struct Mlp {
    std::vector<Linear> layers;

    Mlp() = default;
    Mlp(const std::vector<std::size_t>& dims, Rng& rng);

    Tensor operator()(Tensor x) const;
    void collect(numcore::ParamList& out, const std::string& prefix) const;
};

} // namespace infotime::models
