#include "infotime/cdam/cdam.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace infotime::cdam {

namespace nc = numcore;

void IBConfig::validate() const {
    if (beta < 0) throw ConfigError("ib: beta must be >= 0");
    if (recon_weight < 0) throw ConfigError("ib: recon_weight must be >= 0");
}

double LossBreakdown::levels_sum() const {
    double s = 0.0;
    for (double l : l_levels) s += l;
    return s;
}

void LossBreakdown::accumulate(const LossBreakdown& other) {
    pred_nll += other.pred_nll;
    recon_nll += other.recon_nll;
    vclub += other.vclub;
    l_ib += other.l_ib;
    if (l_levels.size() < other.l_levels.size()) l_levels.resize(other.l_levels.size(), 0.0);
    for (std::size_t i = 0; i < other.l_levels.size(); ++i) l_levels[i] += other.l_levels[i];
    l_p += other.l_p;
    l_total += other.l_total;
}

void LossBreakdown::scale(double factor) {
    pred_nll *= factor;
    recon_nll *= factor;
    vclub *= factor;
    l_ib *= factor;
    for (double& l : l_levels) l *= factor;
    l_p *= factor;
    l_total *= factor;
}

std::string LossBreakdown::csv_header(std::size_t n_levels) {
    std::string h = "pred_nll,recon_nll,vclub,l_ib";
    for (std::size_t n = 1; n <= n_levels; ++n) h += ",l_" + std::to_string(n);
    h += ",l_p,l_total";
    return h;
}

std::string LossBreakdown::csv_row() const {
    char buf[32];
    std::ostringstream os;
    auto put = [&](double v, bool lead_comma = true) {
        std::snprintf(buf, sizeof(buf), "%.9g", v);
        if (lead_comma) os << ',';
        os << buf;
    };
    put(pred_nll, false);
    put(recon_nll);
    put(vclub);
    put(l_ib);
    for (double l : l_levels) put(l);
    put(l_p);
    put(l_total);
    return os.str();
}

std::pair<Tensor, Tensor> lower_bound_loss(const Tensor& y_hat, const Tensor& y,
                                           const Tensor& x_hat, const Tensor& x) {
    return {nc::mse_loss(y_hat, y), nc::mse_loss(x_hat, x)};
}

Tensor vclub_estimate(const Tensor& z, const Tensor& x_others, const models::Posterior& q,
                      std::span<const std::size_t> neg_idx) {
    const std::size_t batch = z.dim(0);
    if (batch == 0) throw ContractError("vclub: empty batch");
    if (neg_idx.size() != batch)
        throw ContractError("vclub: need one negative index per sample");

    models::GaussianParams frozen;
    {
        nc::NoGradScope no_grad;
        models::GaussianParams g = q(x_others);
        frozen.mean = g.mean.detach();
        frozen.logvar = g.logvar.detach();
    }
    Tensor neg_mean = nc::gather_rows(frozen.mean, neg_idx);
    Tensor neg_logvar = nc::gather_rows(frozen.logvar, neg_idx);
    Tensor positive = nc::sum_all(nc::gaussian_log_density(z, frozen.mean, frozen.logvar));
    Tensor negative = nc::sum_all(nc::gaussian_log_density(z, neg_mean, neg_logvar));
    return nc::mul_scalar(nc::sub(positive, negative), 1.0 / static_cast<double>(batch));
}

double posterior_fit_step(const Tensor& z_detached, const Tensor& x_others,
                          const models::Posterior& q, numcore::Adam& optimizer,
                          double max_grad_norm) {
    if (z_detached.needs_grad())
        throw ContractError("posterior fit: z must be detached from the encoder");
    optimizer.zero_grad();
    double before = 0.0;
    {
        nc::TapeScope scope;
        models::GaussianParams g = q(x_others);
        Tensor log_lik = nc::mul_scalar(nc::sum_all(nc::gaussian_log_density(z_detached, g.mean, g.logvar)),
                                        1.0 / static_cast<double>(z_detached.dim(0)));
        before = log_lik.item();
        Tensor loss = nc::mul_scalar(log_lik, -1.0);
        scope.tape().backward(loss);
    }
    if (max_grad_norm > 0) {
        double sq = 0.0;
        for (const Tensor& p : optimizer.params())
            for (double gv : p.grad_view()) sq += gv * gv;
        const double norm = std::sqrt(sq);
        if (norm > max_grad_norm) {
            const double scale = max_grad_norm / norm;
            for (const Tensor& p : optimizer.params()) {
                auto g = p.grad();
                for (double& v : g) v *= scale;
            }
        }
    }
    optimizer.step();
    return before;
}

Tensor ib_loss(std::span<const Tensor> pred_nll, std::span<const Tensor> recon_nll,
               std::span<const Tensor> vclub, const IBConfig& cfg) {
    cfg.validate();
    if (pred_nll.empty() || pred_nll.size() != recon_nll.size() ||
        pred_nll.size() != vclub.size())
        throw ContractError("ib_loss: per-channel term lists must align");
    Tensor acc;
    for (std::size_t c = 0; c < pred_nll.size(); ++c) {
        Tensor term = nc::add(pred_nll[c], nc::add(nc::mul_scalar(recon_nll[c], cfg.recon_weight),
                                                   nc::mul_scalar(vclub[c], cfg.beta)));
        acc = c == 0 ? term : nc::add(acc, term);
    }
    return nc::mul_scalar(acc, 1.0 / static_cast<double>(pred_nll.size()));
}

} // namespace infotime::cdam
