#include "infotime/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace infotime::train {

namespace nc = numcore;
using data::WindowBatch;
using nc::Tensor;

const char* arm_name(Arm arm) {
    switch (arm) {
        case Arm::kOriginal: return "original";
        case Arm::kTam: return "tam";
        case Arm::kInfoTime: return "infotime";
    }
    return "?";
}

Arm parse_arm(const std::string& name) {
    if (name == "original" || name == "Original") return Arm::kOriginal;
    if (name == "tam" || name == "+TAM" || name == "+tam") return Arm::kTam;
    if (name == "infotime" || name == "+InfoTime" || name == "+infotime") return Arm::kInfoTime;
    throw ConfigError("unknown arm \"" + name + "\" (original | tam | infotime)");
}

void TrainConfig::validate() const {
    model.validate();
    ib.validate();
    if (arm != Arm::kOriginal) tam.validate(model.horizon);
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
    if (patience < 1) throw ConfigError("train: patience must be >= 1");
    if (stride < 1) throw ConfigError("train: stride must be >= 1");
    if (lr < 0 || q_lr < 0) throw ConfigError("train: learning rates must be >= 0");
    for (std::size_t c : target_channels)
        if (c >= model.channels)
            throw ConfigError("train: target channel " + std::to_string(c) + " out of range");
    if (arm == Arm::kInfoTime && model.channels < 2)
        throw ConfigError("train: the bottleneck arm needs at least two channels");
}

std::vector<std::size_t> TrainConfig::targets() const {
    if (!target_channels.empty()) return target_channels;
    std::vector<std::size_t> all(model.channels);
    std::iota(all.begin(), all.end(), 0);
    return all;
}

ModelBundle ModelBundle::build(const TrainConfig& cfg, Rng& rng) {
    ModelBundle b;
    b.target_channels = cfg.targets();
    const bool with_latent = cfg.backbone == Backbone::kMlp || cfg.arm == Arm::kInfoTime;
    if (with_latent) {
        b.encoder.emplace(cfg.model, rng);
        b.forecaster.emplace(cfg.model, rng);
    } else {
        b.rmlp.emplace(cfg.model, rng);
    }
    if (cfg.arm == Arm::kInfoTime) {
        b.decoder.emplace(cfg.model, rng);
        for (std::size_t i = 0; i < b.target_channels.size(); ++i)
            b.posteriors.emplace_back(cfg.model, rng);
    }
    if (cfg.arm != Arm::kOriginal && cfg.tam.n_levels > 0)
        b.predictors.emplace(cfg.model, cfg.tam.n_levels, rng);
    return b;
}

nc::ParamList ModelBundle::main_params() const {
    nc::ParamList out;
    if (rmlp) rmlp->collect(out);
    if (encoder) encoder->collect(out);
    if (forecaster) forecaster->collect(out);
    if (decoder) decoder->collect(out);
    if (predictors) predictors->collect(out);
    return out;
}

nc::ParamList ModelBundle::posterior_params() const {
    nc::ParamList out;
    for (std::size_t i = 0; i < posteriors.size(); ++i)
        posteriors[i].collect(out, "posterior." + std::to_string(target_channels[i]));
    return out;
}

nc::ParamList ModelBundle::all_params() const {
    nc::ParamList out = main_params();
    nc::ParamList q = posterior_params();
    out.insert(out.end(), q.begin(), q.end());
    return out;
}

std::string RunLog::csv(bool include_timing) const {
    std::ostringstream os;
    os << "epoch,train_total,pred_nll,recon_nll,vclub,l_tam,l_p,val_mse,val_mae,test_mse,"
          "test_mae,seconds\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.9g", v);
        os << ',' << buf;
    };
    for (const EpochRow& r : rows) {
        os << r.epoch;
        put(r.train.l_total);
        put(r.train.pred_nll);
        put(r.train.recon_nll);
        put(r.train.vclub);
        put(r.train.levels_sum());
        put(r.train.l_p);
        put(r.val_mse);
        put(r.val_mae);
        put(r.test_mse);
        put(r.test_mae);
        put(include_timing ? r.seconds : 0.0);
        os << '\n';
    }
    return os.str();
}

nc::ParamList clone_params(const nc::ParamList& params) {
    nc::ParamList out;
    out.reserve(params.size());
    for (const auto& [name, t] : params)
        out.push_back({name, Tensor::from(t.shape(), std::vector<double>(t.values().begin(),
                                                                         t.values().end()))});
    return out;
}

void restore_params(const nc::ParamList& saved, nc::ParamList target) {
    if (saved.size() != target.size())
        throw ContractError("restore: parameter list size mismatch");
    for (std::size_t i = 0; i < saved.size(); ++i) {
        if (saved[i].name != target[i].name)
            throw ContractError("restore: parameter order mismatch at " + saved[i].name);
        std::copy(saved[i].tensor.values().begin(), saved[i].tensor.values().end(),
                  target[i].tensor.values().begin());
    }
}

namespace {

void clip_gradients(const nc::ParamList& params, double max_norm) {
    if (max_norm <= 0) return;
    double sq = 0.0;
    for (const auto& [name, t] : params)
        for (double g : t.grad_view()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double scale = max_norm / norm;
    for (const auto& [name, t] : params) {
        auto g = t.grad();
        for (double& v : g) v *= scale;
    }
}

} // namespace

Trainer::Trainer(TrainConfig cfg, const data::SeriesFrame& raw_frame) : cfg_(std::move(cfg)) {
    cfg_.model.channels = raw_frame.cols;
    cfg_.validate();
    splits_ = data::split_chronological(raw_frame.rows, cfg_.split, cfg_.model.lookback,
                                        cfg_.model.horizon);
    norm_ = data::fit_standardizer(raw_frame, 0, splits_.train_rows_end);
    frame_ = norm_.apply(raw_frame);
    train_offsets_ = data::make_windows(splits_.train, cfg_.model.lookback, cfg_.model.horizon,
                                        cfg_.stride);
    val_offsets_ = data::make_windows(splits_.val, cfg_.model.lookback, cfg_.model.horizon,
                                      cfg_.stride);
    test_offsets_ = data::make_windows(splits_.test, cfg_.model.lookback, cfg_.model.horizon,
                                       cfg_.stride);
    if (train_offsets_.empty()) throw ConfigError("train: no training windows");

    Rng init_rng = make_rng(cfg_.seed, 1);
    bundle_ = ModelBundle::build(cfg_, init_rng);
    auto tensors_of = [](const nc::ParamList& list) {
        std::vector<Tensor> out;
        out.reserve(list.size());
        for (const auto& [name, t] : list) out.push_back(t);
        return out;
    };
    nc::AdamConfig main_cfg;
    main_cfg.lr = cfg_.lr;
    opt_main_ = nc::Adam(tensors_of(bundle_.main_params()), main_cfg);
    nc::AdamConfig q_cfg;
    q_cfg.lr = cfg_.q_lr;
    opt_q_ = nc::Adam(tensors_of(bundle_.posterior_params()), q_cfg);
    main_param_list_ = bundle_.main_params();
}

WindowBatch Trainer::make_batch(std::span<const std::size_t> offsets) const {
    return make_batch_from(frame_, offsets);
}

WindowBatch Trainer::make_batch_from(const data::SeriesFrame& frame,
                                     std::span<const std::size_t> offsets) const {
    WindowBatch batch = data::materialize_batch(frame, offsets, cfg_.model.lookback,
                                                cfg_.model.horizon);
    if (cfg_.model.instance_norm) data::instance_normalize(batch);
    return batch;
}

Metrics Trainer::evaluate_test_on(const data::SeriesFrame& raw_frame) {
    if (raw_frame.rows != frame_.rows || raw_frame.cols != frame_.cols)
        throw ContractError("evaluate_test_on: frame layout differs from the training frame");
    data::SeriesFrame standardized = norm_.apply(raw_frame);
    Metrics m;
    if (test_offsets_.empty()) return m;
    const auto targets = bundle_.target_channels;
    double se = 0.0, ae = 0.0;
    std::size_t count = 0;
    std::span<const std::size_t> offsets(test_offsets_);
    for (std::size_t begin = 0; begin < offsets.size(); begin += cfg_.batch_size) {
        const std::size_t end = std::min(begin + cfg_.batch_size, offsets.size());
        WindowBatch batch = make_batch_from(standardized, offsets.subspan(begin, end - begin));
        std::vector<Tensor> forecasts = forecast_batch(batch);
        for (std::size_t ti = 0; ti < targets.size(); ++ti) {
            Tensor y = data::channel_target(batch, targets[ti]);
            auto yv = y.values();
            auto fv = forecasts[ti].values();
            for (std::size_t i = 0; i < yv.size(); ++i) {
                const double d = fv[i] - yv[i];
                se += d * d;
                ae += std::abs(d);
            }
            count += yv.size();
        }
    }
    m.mse = se / static_cast<double>(count);
    m.mae = ae / static_cast<double>(count);
    return m;
}

Trainer::BatchForward Trainer::forward(const WindowBatch& batch, bool training, Rng& neg_rng) {
    const auto targets = bundle_.target_channels;
    const std::size_t n_levels = cfg_.active_levels();

    std::vector<Tensor> xs;
    xs.reserve(cfg_.model.channels);
    for (std::size_t c = 0; c < cfg_.model.channels; ++c)
        xs.push_back(data::channel_history(batch, c));

    std::vector<Tensor> zs;
    if (bundle_.encoder) zs = bundle_.encoder->encode(xs);

    if (training && !bundle_.posteriors.empty()) {
        for (std::size_t ti = 0; ti < targets.size(); ++ti) {
            Tensor z_det = zs[targets[ti]].detach();
            Tensor x_o = data::others_history(batch, targets[ti]);
            cdam::posterior_fit_step(z_det, x_o, bundle_.posteriors[ti], opt_q_, cfg_.grad_clip);
        }
    }

    BatchForward out;
    std::vector<Tensor> pred_terms, recon_terms, vclub_terms, lp_terms;
    std::vector<Tensor> level_sums(n_levels);
    std::uniform_int_distribution<std::size_t> neg_dist(0, batch.batch - 1);

    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        const std::size_t c = targets[ti];
        ChannelForward cf;
        Tensor y = data::channel_target(batch, c);
        Tensor direct = bundle_.rmlp ? (*bundle_.rmlp)(xs[c]) : (*bundle_.forecaster)(xs[c], zs[c]);
        if (cfg_.model.instance_norm)
            direct = nc::shift_rows(nc::scale_rows(direct, data::channel_inst_std(batch, c)),
                                    data::channel_inst_mean(batch, c));
        cf.direct = direct;
        cf.pred_nll = nc::mse_loss(direct, y);
        pred_terms.push_back(cf.pred_nll);

        if (bundle_.decoder) {
            cf.recon_nll = nc::mse_loss((*bundle_.decoder)(zs[c]), xs[c]);
            recon_terms.push_back(cf.recon_nll);
        }
        if (!bundle_.posteriors.empty()) {
            std::vector<std::size_t> neg(batch.batch);
            for (auto& k : neg) k = neg_dist(neg_rng);
            Tensor x_o = data::others_history(batch, c);
            cf.vclub = cdam::vclub_estimate(zs[c], x_o, bundle_.posteriors[ti], neg);
            vclub_terms.push_back(cf.vclub);
        }
        if (n_levels > 0) {
            Tensor x_embed = bundle_.predictors->embed_history(xs[c]);
            std::vector<Tensor> spliced;
            for (std::size_t n = 1; n <= n_levels; ++n) {
                auto forecast_subs = tam::downsample(direct, n);
                auto target_subs = tam::downsample(y, n);
                auto preds = tam::predict_level(*bundle_.predictors, forecast_subs, x_embed);
                Tensor ll = tam::level_loss(preds, target_subs);
                level_sums[n - 1] =
                    level_sums[n - 1].defined() ? nc::add(level_sums[n - 1], ll) : ll;
                spliced.push_back(tam::splice_predictions(preds).series);
            }
            auto [blended, lp] = tam::blend_and_lp(direct, spliced, y, cfg_.tam.blend_lambda);
            cf.final_forecast = blended;
            cf.l_p = lp;
        } else {
            cf.final_forecast = direct;
            cf.l_p = cf.pred_nll;
        }
        lp_terms.push_back(cf.l_p);
        out.channels.push_back(std::move(cf));
    }

    const double inv_targets = 1.0 / static_cast<double>(targets.size());
    auto channel_mean = [&](std::span<const Tensor> terms) {
        Tensor acc = terms[0];
        for (std::size_t i = 1; i < terms.size(); ++i) acc = nc::add(acc, terms[i]);
        return nc::mul_scalar(acc, inv_targets);
    };

    Tensor l_p = channel_mean(lp_terms);
    for (std::size_t n = 0; n < n_levels; ++n)
        out.level_losses.push_back(nc::mul_scalar(level_sums[n], inv_targets));

    cdam::LossBreakdown& bd = out.breakdown;
    bd.pred_nll = channel_mean(pred_terms).item();
    switch (cfg_.arm) {
        case Arm::kOriginal: {
            out.loss = l_p;
            break;
        }
        case Arm::kTam: {
            out.loss = tam::total_loss(Tensor::scalar(0.0), out.level_losses, l_p);
            break;
        }
        case Arm::kInfoTime: {
            Tensor l_ib = cdam::ib_loss(pred_terms, recon_terms, vclub_terms, cfg_.ib);
            bd.recon_nll = channel_mean(recon_terms).item();
            bd.vclub = channel_mean(vclub_terms).item();
            bd.l_ib = l_ib.item();
            out.loss = tam::total_loss(l_ib, out.level_losses, l_p);
            break;
        }
    }
    for (const Tensor& ll : out.level_losses) bd.l_levels.push_back(ll.item());
    bd.l_p = l_p.item();
    bd.l_total = out.loss.item();
    return out;
}

cdam::LossBreakdown Trainer::train_epoch(std::size_t epoch_index, const FitHooks* hooks) {
    Rng shuffle_rng = make_rng(cfg_.seed, 1000 + epoch_index);
    Rng neg_rng = make_rng(cfg_.seed, 2000 + epoch_index);
    std::vector<std::size_t> offsets = train_offsets_;
    std::shuffle(offsets.begin(), offsets.end(), shuffle_rng);

    cdam::LossBreakdown epoch_sum;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < offsets.size(); begin += cfg_.batch_size) {
        const std::size_t end = std::min(begin + cfg_.batch_size, offsets.size());
        WindowBatch batch = make_batch(std::span(offsets).subspan(begin, end - begin));
        try {
            nc::TapeScope scope;
            BatchForward f = forward(batch, true, neg_rng);
            if (!std::isfinite(f.loss.item())) throw NumericError("non-finite loss");
            opt_main_.zero_grad();
            scope.tape().backward(f.loss);
            clip_gradients(main_param_list_, cfg_.grad_clip);
            opt_main_.step();
            epoch_sum.accumulate(f.breakdown);
            if (hooks && hooks->on_step) hooks->on_step(global_step_, f.breakdown);
            ++global_step_;
            ++batches;
        } catch (const NumericError& e) {
            throw NumericError("train: epoch " + std::to_string(epoch_index) + ", batch " +
                               std::to_string(batches) + ": " + e.what());
        }
    }
    if (batches > 0) epoch_sum.scale(1.0 / static_cast<double>(batches));
    return epoch_sum;
}

std::vector<Tensor> Trainer::forecast_batch(const WindowBatch& batch) {
    nc::NoGradScope no_grad;
    const auto targets = bundle_.target_channels;
    const std::size_t n_levels = cfg_.active_levels();

    std::vector<Tensor> xs;
    xs.reserve(cfg_.model.channels);
    for (std::size_t c = 0; c < cfg_.model.channels; ++c)
        xs.push_back(data::channel_history(batch, c));
    std::vector<Tensor> zs;
    if (bundle_.encoder) zs = bundle_.encoder->encode(xs);

    std::vector<Tensor> out;
    out.reserve(targets.size());
    for (std::size_t c : targets) {
        Tensor direct = bundle_.rmlp ? (*bundle_.rmlp)(xs[c]) : (*bundle_.forecaster)(xs[c], zs[c]);
        if (cfg_.model.instance_norm)
            direct = nc::shift_rows(nc::scale_rows(direct, data::channel_inst_std(batch, c)),
                                    data::channel_inst_mean(batch, c));
        if (n_levels > 0) {
            Tensor x_embed = bundle_.predictors->embed_history(xs[c]);
            std::vector<Tensor> spliced;
            for (std::size_t n = 1; n <= n_levels; ++n) {
                auto preds = tam::predict_level(*bundle_.predictors, tam::downsample(direct, n),
                                                x_embed);
                spliced.push_back(tam::splice_predictions(preds).series);
            }
            Tensor acc = spliced[0];
            for (std::size_t n = 1; n < spliced.size(); ++n) acc = nc::add(acc, spliced[n]);
            Tensor spliced_mean = nc::mul_scalar(acc, 1.0 / static_cast<double>(spliced.size()));
            direct = nc::add(nc::mul_scalar(spliced_mean, cfg_.tam.blend_lambda),
                             nc::mul_scalar(direct, 1.0 - cfg_.tam.blend_lambda));
        }
        out.push_back(direct);
    }
    return out;
}

Metrics Trainer::evaluate(std::span<const std::size_t> offsets) {
    Metrics m;
    if (offsets.empty()) return m;
    const auto targets = bundle_.target_channels;
    double se = 0.0, ae = 0.0;
    std::size_t count = 0;
    for (std::size_t begin = 0; begin < offsets.size(); begin += cfg_.batch_size) {
        const std::size_t end = std::min(begin + cfg_.batch_size, offsets.size());
        WindowBatch batch = make_batch(offsets.subspan(begin, end - begin));
        std::vector<Tensor> forecasts = forecast_batch(batch);
        for (std::size_t ti = 0; ti < targets.size(); ++ti) {
            Tensor y = data::channel_target(batch, targets[ti]);
            auto yv = y.values();
            auto fv = forecasts[ti].values();
            for (std::size_t i = 0; i < yv.size(); ++i) {
                const double d = fv[i] - yv[i];
                se += d * d;
                ae += std::abs(d);
            }
            count += yv.size();
        }
    }
    m.mse = se / static_cast<double>(count);
    m.mae = ae / static_cast<double>(count);
    return m;
}

FitResult Trainer::fit(const FitHooks* hooks) {
    FitResult res;
    nc::ParamList all = bundle_.all_params();
    const bool has_val = !val_offsets_.empty();
    double best_val = std::numeric_limits<double>::infinity();
    nc::ParamList best = clone_params(all);
    std::size_t best_epoch = 0;
    std::size_t bad_epochs = 0;

    for (std::size_t epoch = 1; epoch <= cfg_.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        cdam::LossBreakdown train_bd = train_epoch(epoch, hooks);
        Metrics val = has_val ? evaluate_val() : Metrics{};
        Metrics test = evaluate_test();
        EpochRow row;
        row.epoch = epoch;
        row.train = train_bd;
        row.val_mse = val.mse;
        row.val_mae = val.mae;
        row.test_mse = test.mse;
        row.test_mae = test.mae;
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.log.rows.push_back(row);
        if (hooks && hooks->on_epoch) hooks->on_epoch(row);

        if (!has_val || val.mse < best_val) {
            best_val = has_val ? val.mse : 0.0;
            best = clone_params(all);
            best_epoch = epoch;
            bad_epochs = 0;
        } else {
            ++bad_epochs;
            if (bad_epochs >= cfg_.patience) break;
        }
    }

    restore_params(best, all);
    res.log.best_epoch = best_epoch;
    res.best_params = std::move(best);
    res.val_mse = has_val ? best_val : 0.0;
    res.test_mse = res.log.rows[best_epoch - 1].test_mse;
    res.test_mae = res.log.rows[best_epoch - 1].test_mae;
    return res;
}

} // namespace infotime::train
