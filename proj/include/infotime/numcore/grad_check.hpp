#pragma once

#include <functional>
#include <span>

#include "infotime/numcore/tensor.hpp"

namespace infotime::numcore {

/// Compare tape gradients of a scalar loss against central finite
/// differences, elementwise over every parameter. Returns the maximum of
///   |analytic - (f(p+h) - f(p-h)) / 2h| / max(1e-8, |analytic|).
/// `loss_fn` must be deterministic for fixed parameters (reuse any sampled
/// indices); this is verified with a repeated base evaluation.
double grad_check(const std::function<Tensor()>& loss_fn, std::span<Tensor> params,
                  double h = 1e-5);

} // namespace infotime::numcore
