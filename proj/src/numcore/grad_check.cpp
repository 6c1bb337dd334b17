#include "infotime/numcore/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace infotime::numcore {

double grad_check(const std::function<Tensor()>& loss_fn, std::span<Tensor> params, double h) {
    // analytic pass
    std::vector<std::vector<double>> analytic;
    {
        for (Tensor& p : params) p.zero_grad();
        TapeScope scope;
        Tensor loss = loss_fn();
        scope.tape().backward(loss);
        for (Tensor& p : params)
            analytic.emplace_back(p.grad_view().begin(), p.grad_view().end());
        for (Tensor& p : params) p.clear_grad();
    }

    auto eval = [&]() {
        NoGradScope no_grad;
        return loss_fn().item();
    };
    const double base = eval();
    if (eval() != base)
        throw ContractError("grad_check: loss function is not deterministic");

    double max_err = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto vals = params[k].values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double saved = vals[i];
            vals[i] = saved + h;
            const double up = eval();
            vals[i] = saved - h;
            const double down = eval();
            vals[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double a = analytic[k][i];
            const double err = std::abs(a - fd) / std::max(1e-8, std::abs(a));
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

} // namespace infotime::numcore
