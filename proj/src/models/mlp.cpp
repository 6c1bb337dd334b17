#include "infotime/models/mlp.hpp"

#include <cmath>
#include <random>

namespace infotime::models {

Linear::Linear(std::size_t in, std::size_t out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> wv(in * out), bv(out);
    for (double& v : wv) v = dist(rng);
    for (double& v : bv) v = dist(rng);
    w = Tensor::param({in, out}, std::move(wv));
    b = Tensor::param({out}, std::move(bv));
}

void Linear::collect(numcore::ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".w", w});
    out.push_back({prefix + ".b", b});
}

void Linear::zero_init() {
    std::fill(w.values().begin(), w.values().end(), 0.0);
    std::fill(b.values().begin(), b.values().end(), 0.0);
}

Mlp::Mlp(const std::vector<std::size_t>& dims, Rng& rng) {
    if (dims.size() < 2) throw ContractError("mlp: need at least an input and output size");
    layers.reserve(dims.size() - 1);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
        layers.emplace_back(dims[i], dims[i + 1], rng);
}

Tensor Mlp::operator()(Tensor x) const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        x = layers[i](x);
        if (i + 1 < layers.size()) x = numcore::relu(x);
    }
    return x;
}

void Mlp::collect(numcore::ParamList& out, const std::string& prefix) const {
    for (std::size_t i = 0; i < layers.size(); ++i)
        layers[i].collect(out, prefix + "." + std::to_string(i));
}

} // namespace infotime::models
