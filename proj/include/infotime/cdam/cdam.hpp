#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "infotime/models/networks.hpp"
#include "infotime/numcore/adam.hpp"

namespace infotime::cdam {

using numcore::Tensor;

/// Information-bottleneck trade-off. The constraint level I_c of the
/// constrained objective is represented implicitly through the Lagrange
/// multiplier beta: larger beta squeezes more other-channel information
/// out of the latent.
struct IBConfig {
    double beta = 1.0;
    double recon_weight = 1.0;

    void validate() const;
};

/// Named scalar terms of one training step (or epoch mean). l_total must
/// always equal l_ib + sum(l_levels) + l_p.
struct LossBreakdown {
    double pred_nll = 0.0;
    double recon_nll = 0.0;
    double vclub = 0.0;
    double l_ib = 0.0;
    std::vector<double> l_levels; // L_1 .. L_N
    double l_p = 0.0;
    double l_total = 0.0;

    double levels_sum() const;
    void accumulate(const LossBreakdown& other);
    void scale(double factor);
    static std::string csv_header(std::size_t n_levels);
    std::string csv_row() const;
};

/// Variational lower-bound terms for one channel with unit-variance
/// Gaussian heads: the negative bound reduces to MSE for both the
/// prediction and the reconstruction (additive constants dropped).
/// Returned as minimization terms.
std::pair<Tensor, Tensor> lower_bound_loss(const Tensor& y_hat, const Tensor& y,
                                           const Tensor& x_hat, const Tensor& x);

/// Sampled vCLUB upper bound on I(X^o; Z^i) for one channel:
///   (1/B) * sum_n [ log q(z_n | x_n^o) - log q(z_n | x_{k'_n}^o) ],
/// with k' the given negative indices (uniform over the batch, self pairs
/// allowed). q is evaluated frozen; the gradient flows only through z.
Tensor vclub_estimate(const Tensor& z, const Tensor& x_others, const models::Posterior& q,
                      std::span<const std::size_t> neg_idx);

/// One maximum-likelihood step for q on a detached latent batch. Returns
/// the pre-step mean log-likelihood (nats per sample). A positive
/// max_grad_norm clips the update's global gradient norm.
double posterior_fit_step(const Tensor& z_detached, const Tensor& x_others,
                          const models::Posterior& q, numcore::Adam& optimizer,
                          double max_grad_norm = 0.0);

/// L_IB = mean over channels of pred + recon_weight*recon + beta*vclub.
Tensor ib_loss(std::span<const Tensor> pred_nll, std::span<const Tensor> recon_nll,
               std::span<const Tensor> vclub, const IBConfig& cfg);

} // namespace infotime::cdam
