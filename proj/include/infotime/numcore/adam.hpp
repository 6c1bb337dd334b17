#pragma once

#include <cstdint>
#include <vector>

#include "infotime/numcore/tensor.hpp"

namespace infotime::numcore {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction over a fixed parameter list. Gradients are
/// read from each parameter's grad buffer and left untouched; the caller
/// zeroes them between steps.
class Adam {
public:
    Adam() = default;
    explicit Adam(std::vector<Tensor> params, AdamConfig cfg = {});

    /// One update. Every parameter must have a populated gradient buffer.
    void step();

    std::uint64_t steps() const { return t_; }
    const std::vector<Tensor>& params() const { return params_; }
    void zero_grad();

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::uint64_t t_ = 0;
    AdamConfig cfg_;
};

} // namespace infotime::numcore
