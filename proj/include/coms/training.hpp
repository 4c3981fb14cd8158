#pragma once

// Contrastive-divergence training of the COMs objective
//
//   minimize  mean 1/2 (y - f(x))^2 + alpha * (mean f(x') - mean f(x))
//
// where x' are negatives obtained by running a short chain from each data
// point. Negatives are constants: no gradient flows through the chain.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coms/data.hpp"
#include "coms/error.hpp"
#include "coms/nnet.hpp"
#include "coms/rng.hpp"
#include "coms/sampling.hpp"

namespace coms {

enum class Variant {
    original,     // gradient-ascent negatives
    stochastic,   // Langevin negatives
    oracle_only,  // plain regression, alpha = 0
};

inline std::string to_string(Variant v) {
    switch (v) {
        case Variant::original: return "original";
        case Variant::stochastic: return "stochastic";
        case Variant::oracle_only: return "oracle";
    }
    return "?";
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "original") return Variant::original;
    if (s == "stochastic") return Variant::stochastic;
    if (s == "oracle" || s == "oracle_only") return Variant::oracle_only;
    throw ConfigError("unknown variant '" + s + "'");
}

struct TrainConfig {
    Variant variant = Variant::stochastic;
    double alpha = 0.0;
    std::size_t cd_steps = 100;
    double neg_schedule_start = 0.02;  // stochastic negatives
    double neg_schedule_end = 0.001;
    double neg_eps = 0.01;  // original negatives
    std::size_t epochs = 500;
    std::size_t batch_size = 64;
    std::size_t hidden_dim = 256;
    AdamConfig optimizer;
    double clip_norm = 100.0;
    std::uint64_t seed = 0;

    bool uses_regularizer() const noexcept { return variant != Variant::oracle_only && alpha > 0.0; }

    void validate() const {
        if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
        if (variant == Variant::oracle_only && alpha != 0.0) throw ConfigError("oracle variant requires alpha = 0");
        if (uses_regularizer() && cd_steps < 1) throw ConfigError("cd_steps must be >= 1 when alpha > 0");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
        if (!(neg_eps > 0.0)) throw ConfigError("neg_eps must be positive");
        if (!(neg_schedule_start > 0.0) || !(neg_schedule_end > 0.0))
            throw ConfigError("negative schedule endpoints must be positive");
        if (cd_steps == 1 && neg_schedule_start != neg_schedule_end)
            throw ConfigError("a single CD step needs neg_schedule_start == neg_schedule_end");
        if (!(optimizer.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
        if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
    }
};

struct LossBreakdown {
    double mse_term = 0.0;
    double reg_term = 0.0;
    double total = 0.0;
};

/// Loss (to minimize) and its parameter gradient on one batch.
inline std::pair<LossBreakdown, ParamGrad> com_loss_and_grad(const MlpField& field, std::span<const LabeledPoint> batch,
                                                             std::span<const Vec2> negatives, double alpha) {
    if (batch.empty()) throw UsageError("empty training batch");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
    if (alpha > 0.0 && negatives.size() != batch.size())
        throw UsageError("need one negative per batch point when alpha > 0");

    const auto n = static_cast<double>(batch.size());
    ParamGrad grad(field.shape());
    LossBreakdown loss;
    double mean_pos = 0.0;
    for (const auto& p : batch) {
        const double f = field.value(p.x);
        const double r = p.y - f;
        loss.mse_term += 0.5 * r * r;
        mean_pos += f;
        field.accumulate_param_gradient(p.x, -r / n, grad);
    }
    loss.mse_term /= n;
    mean_pos /= n;

    if (!negatives.empty()) {
        double mean_neg = 0.0;
        for (const auto& x : negatives) mean_neg += field.value(x);
        mean_neg /= static_cast<double>(negatives.size());
        loss.reg_term = mean_neg - mean_pos;
    }
    if (alpha > 0.0) {
        const double m = static_cast<double>(negatives.size());
        for (const auto& x : negatives) field.accumulate_param_gradient(x, alpha / m, grad);
        for (const auto& p : batch) field.accumulate_param_gradient(p.x, -alpha / n, grad);
    }
    loss.total = loss.mse_term + alpha * loss.reg_term;
    return {loss, std::move(grad)};
}

/// One chain per batch point, started at that point. `step` is the optimizer
/// step counter; together with the seed it fixes every chain's noise.
inline std::vector<Vec2> make_negatives(const MlpField& field, std::span<const Vec2> batch_x, const TrainConfig& config,
                                        std::uint64_t step) {
    if (config.variant == Variant::oracle_only) throw UsageError("oracle variant draws no negatives");
    std::vector<Vec2> out(batch_x.begin(), batch_x.end());
    if (config.cd_steps == 0) return out;

    if (config.variant == Variant::original) {
        for (auto& x : out) x = gradient_ascent_chain(field, x, config.neg_eps, config.cd_steps);
        return out;
    }
    const GeometricSchedule schedule(config.neg_schedule_start, config.neg_schedule_end, config.cd_steps);
    for (std::size_t i = 0; i < out.size(); ++i) {
        Rng rng(derive_seed(config.seed, {step, i, 3}));
        try {
            out[i] = langevin_chain(field, out[i], schedule.values(), rng);
        } catch (const SamplerDiverged& e) {
            throw e.with_chain(i);
        }
    }
    return out;
}

struct EpochRecord {
    std::size_t epoch = 0;
    LossBreakdown loss;
    std::size_t clip_events = 0;
    const MlpField* field = nullptr;  // parameters after this epoch
};

struct Checkpoint {
    MlpField field;
    TrainConfig config;
    std::vector<LossBreakdown> history;
    std::uint64_t steps_trained = 0;
    std::size_t clip_events = 0;
};

using EpochObserver = std::function<void(const EpochRecord&)>;

inline Checkpoint train_com(const TrainConfig& config, const Dataset& dataset, const EpochObserver& observer = {}) {
    config.validate();
    if (dataset.empty()) throw UsageError("training dataset is empty");

    Checkpoint ckpt{mlp_init(2, config.hidden_dim, config.seed), config, {}, 0, 0};
    AdamState adam(ckpt.field.size(), config.optimizer);
    const double alpha = config.variant == Variant::oracle_only ? 0.0 : config.alpha;

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<LabeledPoint> batch;
    std::vector<Vec2> batch_x;
    batch.reserve(config.batch_size);
    batch_x.reserve(config.batch_size);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(config.seed, {epoch, 7}));
        std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

        double mse_sum = 0.0;
        double reg_sum = 0.0;
        std::size_t clips = 0;
        std::size_t batch_index = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            batch.clear();
            batch_x.clear();
            for (std::size_t i = begin; i < end; ++i) {
                batch.push_back(dataset[order[i]]);
                batch_x.push_back(dataset[order[i]].x);
            }

            std::vector<Vec2> negatives;
            if (config.uses_regularizer()) {
                try {
                    negatives = make_negatives(ckpt.field, batch_x, config, ckpt.steps_trained);
                } catch (const SamplerDiverged& e) {
                    throw TrainingDiverged(e, epoch, batch_index);
                }
            }
            auto [loss, grad] = com_loss_and_grad(ckpt.field, batch, negatives, alpha);

            const double gnorm = grad.norm();
            if (gnorm > config.clip_norm) {
                grad *= config.clip_norm / gnorm;
                ++clips;
            }
            optimizer_step(ckpt.field, adam, grad);
            ++ckpt.steps_trained;

            const auto weight = static_cast<double>(end - begin);
            mse_sum += weight * loss.mse_term;
            reg_sum += weight * loss.reg_term;
        }

        const auto n = static_cast<double>(dataset.size());
        LossBreakdown epoch_loss{mse_sum / n, reg_sum / n, 0.0};
        epoch_loss.total = epoch_loss.mse_term + alpha * epoch_loss.reg_term;
        ckpt.history.push_back(epoch_loss);
        ckpt.clip_events += clips;
        if (observer) observer({epoch, epoch_loss, clips, &ckpt.field});
    }
    if (!ckpt.field.all_finite()) throw Error("training produced non-finite weights");
    return ckpt;
}

/// Plain regression model f_omega: train_com with the regularizer disabled.
inline Checkpoint train_oracle(TrainConfig config, const Dataset& dataset, const EpochObserver& observer = {}) {
    config.variant = Variant::oracle_only;
    config.alpha = 0.0;
    return train_com(config, dataset, observer);
}

}  // namespace coms
