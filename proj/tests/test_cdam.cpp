#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "infotime/cdam/cdam.hpp"
#include "infotime/numcore/grad_check.hpp"
#include "infotime/rng.hpp"
#include "support/oracles.hpp"

using namespace infotime;
using namespace infotime::cdam;
namespace nc = infotime::numcore;

namespace {

models::ModelConfig q_config(std::size_t lookback, std::size_t channels, std::size_t latent,
                             std::size_t hidden) {
    models::ModelConfig cfg;
    cfg.lookback = lookback;
    cfg.channels = channels;
    cfg.latent = latent;
    cfg.hidden = hidden;
    return cfg;
}

Tensor random_tensor(nc::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(nc::shape_numel(shape));
    for (double& x : v) x = dist(rng);
    return Tensor::from(std::move(shape), std::move(v));
}

void zero_all(const nc::ParamList& params) {
    for (const auto& [name, t] : params) std::fill(t.values().begin(), t.values().end(), 0.0);
}

} // namespace

TEST_CASE("lower_bound_loss reduces to the MSE terms") {
    Rng rng = make_rng(1);
    Tensor y = random_tensor({3, 4}, rng);
    Tensor x = random_tensor({3, 6}, rng);
    auto [pred0, recon0] = lower_bound_loss(y, y, x, x);
    CHECK(pred0.item() == 0.0);
    CHECK(recon0.item() == 0.0);

    Tensor y_off = nc::add_scalar(y, 1.0);
    auto [pred1, recon1] = lower_bound_loss(y_off, y, x, x);
    CHECK(pred1.item() == doctest::Approx(1.0).epsilon(1e-12));

    Tensor y_hat = random_tensor({3, 4}, rng);
    Tensor x_hat = random_tensor({3, 6}, rng);
    auto [pred, recon] = lower_bound_loss(y_hat, y, x_hat, x);
    CHECK(std::abs(pred.item() - oracles::loop_mse(y_hat.values(), y.values())) < 1e-12);
    CHECK(std::abs(recon.item() - oracles::loop_mse(x_hat.values(), x.values())) < 1e-12);
}

TEST_CASE("vclub is exactly zero when q ignores its input") {
    auto cfg = q_config(4, 3, 2, 8);
    Rng rng = make_rng(2);
    models::Posterior q(cfg, rng);
    nc::ParamList params;
    q.collect(params, "q");
    zero_all(params); // constant mean and logvar regardless of x^o

    Tensor z = random_tensor({5, 2}, rng);
    Tensor x_o = random_tensor({5, 8}, rng);
    const std::size_t neg[] = {3, 3, 0, 1, 2};
    CHECK(vclub_estimate(z, x_o, q, neg).item() == 0.0);
}

TEST_CASE("vclub self-pair with batch of one is exactly zero") {
    auto cfg = q_config(4, 2, 2, 8);
    Rng rng = make_rng(3);
    models::Posterior q(cfg, rng);
    Tensor z = random_tensor({1, 2}, rng);
    Tensor x_o = random_tensor({1, 4}, rng);
    const std::size_t neg[] = {0};
    CHECK(vclub_estimate(z, x_o, q, neg).item() == 0.0);
}

TEST_CASE("vclub combination arithmetic") {
    // positives [-1, -2], negatives [-3, -2] -> ((-1+3) + (-2+2)) / 2 = 1
    const double pos[] = {-1.0, -2.0};
    const double neg[] = {-3.0, -2.0};
    double mean = 0.0;
    for (int i = 0; i < 2; ++i) mean += pos[i] - neg[i];
    mean /= 2.0;
    CHECK(mean == 1.0);
}

TEST_CASE("vclub matches a hand-rolled density computation") {
    auto cfg = q_config(3, 3, 2, 16);
    Rng rng = make_rng(4);
    models::Posterior q(cfg, rng);
    const std::size_t B = 6;
    Tensor z = random_tensor({B, 2}, rng);
    Tensor x_o = random_tensor({B, 6}, rng);
    const std::size_t neg[] = {2, 0, 5, 5, 1, 3};

    models::GaussianParams g = q(x_o);
    auto log_density_row = [&](std::size_t zi, std::size_t qi) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 2; ++k) {
            const double d = z.values()[zi * 2 + k] - g.mean.values()[qi * 2 + k];
            const double lv = g.logvar.values()[qi * 2 + k];
            acc += -0.5 * (d * d * std::exp(-lv) + lv + std::log(2.0 * 3.14159265358979323846));
        }
        return acc;
    };
    double expected = 0.0;
    for (std::size_t i = 0; i < B; ++i)
        expected += log_density_row(i, i) - log_density_row(i, neg[i]);
    expected /= static_cast<double>(B);
    CHECK(vclub_estimate(z, x_o, q, neg).item() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("vclub gradient flows into z with q frozen") {
    auto cfg = q_config(3, 2, 2, 8);
    Rng rng = make_rng(5);
    models::Posterior q(cfg, rng);
    Tensor z = random_tensor({4, 2}, rng);
    Tensor z_param = Tensor::param({4, 2},
                                   std::vector<double>(z.values().begin(), z.values().end()));
    Tensor x_o = random_tensor({4, 3}, rng);
    const std::size_t neg[] = {1, 3, 0, 2};
    Tensor params[] = {z_param};
    auto loss_fn = [&]() { return vclub_estimate(z_param, x_o, q, neg); };
    CHECK(nc::grad_check(loss_fn, params) < 1e-4);

    // and q's parameters receive no gradient from the estimate
    nc::ParamList q_params;
    q.collect(q_params, "q");
    for (auto& [name, t] : q_params) t.zero_grad();
    {
        nc::TapeScope scope;
        Tensor est = vclub_estimate(z_param, x_o, q, neg);
        scope.tape().backward(est);
    }
    for (auto& [name, t] : q_params)
        for (double gv : t.grad_view()) CHECK(gv == 0.0);
}

TEST_CASE("posterior_fit_step improves the likelihood and respects lr=0") {
    auto cfg = q_config(3, 2, 2, 16);
    Rng rng = make_rng(6);
    models::Posterior q(cfg, rng);
    nc::ParamList params;
    q.collect(params, "q");
    std::vector<Tensor> tensors;
    for (auto& [name, t] : params) tensors.push_back(t);

    const std::size_t B = 64;
    Tensor x_o = random_tensor({B, 3}, rng);
    // z depends linearly on x_o so there is something to fit
    std::vector<double> zv(B * 2);
    for (std::size_t i = 0; i < B; ++i) {
        zv[i * 2 + 0] = 0.8 * x_o.values()[i * 3 + 0] - 0.2 * x_o.values()[i * 3 + 2];
        zv[i * 2 + 1] = 0.5 * x_o.values()[i * 3 + 1];
    }
    Tensor z = Tensor::from({B, 2}, std::move(zv));

    nc::Adam opt(tensors);
    std::vector<double> lls;
    for (int step = 0; step < 130; ++step) lls.push_back(posterior_fit_step(z, x_o, q, opt));
    for (std::size_t i = 0; i + 50 < lls.size(); ++i) CHECK(lls[i + 50] > lls[i]);

    // run to convergence: the mean head recovers the generating linear map
    for (int step = 0; step < 1200; ++step) posterior_fit_step(z, x_o, q, opt);
    models::GaussianParams g = q(x_o);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < B * 2; ++i) {
        num += (g.mean.values()[i] - z.values()[i]) * (g.mean.values()[i] - z.values()[i]);
        den += z.values()[i] * z.values()[i];
    }
    CHECK(std::sqrt(num / den) < 0.05);

    nc::AdamConfig frozen_cfg;
    frozen_cfg.lr = 0.0;
    nc::Adam frozen(tensors, frozen_cfg);
    std::vector<double> before;
    for (auto& [name, t] : params)
        before.insert(before.end(), t.values().begin(), t.values().end());
    const double ll1 = posterior_fit_step(z, x_o, q, frozen);
    const double ll2 = posterior_fit_step(z, x_o, q, frozen);
    CHECK(ll1 == ll2);
    std::vector<double> after;
    for (auto& [name, t] : params)
        after.insert(after.end(), t.values().begin(), t.values().end());
    CHECK(before == after);
}

TEST_CASE("posterior_fit_step rejects a grad-connected z") {
    auto cfg = q_config(3, 2, 2, 8);
    Rng rng = make_rng(7);
    models::Posterior q(cfg, rng);
    nc::ParamList params;
    q.collect(params, "q");
    std::vector<Tensor> tensors;
    for (auto& [name, t] : params) tensors.push_back(t);
    nc::Adam opt(tensors);
    Tensor z = Tensor::param({2, 2}, {0.1, 0.2, 0.3, 0.4});
    Tensor x_o = Tensor::full({2, 3}, 0.5);
    CHECK_THROWS_AS(posterior_fit_step(z, x_o, q, opt), ContractError);
}

TEST_CASE("ib_loss combinations") {
    IBConfig cfg;
    cfg.beta = 0.0;
    Tensor pred[] = {Tensor::scalar(0.5)};
    Tensor recon[] = {Tensor::scalar(0.2)};
    Tensor vclub[] = {Tensor::scalar(0.1)};
    CHECK(ib_loss(pred, recon, vclub, cfg).item() == doctest::Approx(0.7).epsilon(1e-12));

    cfg.beta = 2.0;
    CHECK(ib_loss(pred, recon, vclub, cfg).item() == doctest::Approx(0.9).epsilon(1e-12));

    Tensor zero[] = {Tensor::scalar(0.0)};
    CHECK(ib_loss(zero, zero, zero, cfg).item() == 0.0);

    // monotone nondecreasing in beta for fixed terms
    double last = -1.0;
    for (double beta : {0.0, 0.5, 1.0, 10.0, 100.0}) {
        cfg.beta = beta;
        const double v = ib_loss(pred, recon, vclub, cfg).item();
        CHECK(v >= last);
        last = v;
    }

    cfg.beta = -1.0;
    CHECK_THROWS_AS(ib_loss(pred, recon, vclub, cfg), ConfigError);
}

TEST_CASE("loss breakdown csv layout and accumulation") {
    LossBreakdown b;
    b.pred_nll = 0.5;
    b.recon_nll = 0.25;
    b.vclub = 0.1;
    b.l_ib = 0.85;
    b.l_levels = {0.3, 0.2};
    b.l_p = 0.4;
    b.l_total = 1.75;
    CHECK(LossBreakdown::csv_header(2) == "pred_nll,recon_nll,vclub,l_ib,l_1,l_2,l_p,l_total");
    CHECK(b.csv_row() == "0.5,0.25,0.1,0.85,0.3,0.2,0.4,1.75");
    CHECK(b.levels_sum() == doctest::Approx(0.5));
    CHECK(std::abs(b.l_total - (b.l_ib + b.levels_sum() + b.l_p)) < 1e-10);

    LossBreakdown sum;
    sum.accumulate(b);
    sum.accumulate(b);
    sum.scale(0.5);
    CHECK(sum.l_total == doctest::Approx(b.l_total).epsilon(1e-12));
    CHECK(sum.l_levels[1] == doctest::Approx(b.l_levels[1]).epsilon(1e-12));
}

TEST_CASE("fitted vclub tracks mutual information on a Gaussian pair (smoke)") {
    // Correlated pair: z = rho*x + sqrt(1-rho^2)*eta. The fitted sampled
    // vCLUB must come out clearly positive under correlation and near zero
    // under independence. The full-scale bound check with B=4096 runs in
    // the acceptance suite.
    auto run = [&](double rho) {
        auto cfg = q_config(1, 2, 1, 32);
        Rng rng = make_rng(8);
        models::Posterior q(cfg, rng);
        nc::ParamList params;
        q.collect(params, "q");
        std::vector<Tensor> tensors;
        for (auto& [name, t] : params) tensors.push_back(t);

        const std::size_t B = 1024;
        Rng data_rng = make_rng(9);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> xv(B), zv(B);
        for (std::size_t i = 0; i < B; ++i) {
            xv[i] = gauss(data_rng);
            zv[i] = rho * xv[i] + std::sqrt(1.0 - rho * rho) * gauss(data_rng);
        }
        Tensor x = Tensor::from({B, 1}, std::move(xv));
        Tensor z = Tensor::from({B, 1}, std::move(zv));

        nc::AdamConfig ac;
        ac.lr = 3e-3;
        nc::Adam opt(tensors, ac);
        for (int step = 0; step < 500; ++step) posterior_fit_step(z, x, q, opt);

        std::vector<std::size_t> neg(B);
        Rng neg_rng = make_rng(10);
        for (auto& n : neg) n = neg_rng() % B;
        return vclub_estimate(z, x, q, neg).item();
    };
    CHECK(run(0.8) > 0.3);
    CHECK(std::abs(run(0.0)) < 0.15);
}
