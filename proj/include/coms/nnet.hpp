#pragma once

// One-hidden-layer tanh network f(x) = w2 . tanh(W1 x + b1) + b2 with
// closed-form gradients with respect to its input and its parameters.
// The same type serves as the energy model (E = -f) and the reward oracle.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "coms/error.hpp"
#include "coms/rng.hpp"
#include "coms/vec2.hpp"

namespace coms {

/// Anything the samplers can climb: a scalar value and its input gradient.
template <class F>
concept ScalarField = requires(const F& f, const Vec2& x) {
    { f.value(x) } -> std::convertible_to<double>;
    { f.gradient(x) } -> std::same_as<Vec2>;
};

struct MlpShape {
    std::size_t input_dim = 2;
    std::size_t hidden_dim = 256;

    constexpr std::size_t param_count() const noexcept { return hidden_dim * input_dim + 2 * hidden_dim + 1; }
    friend constexpr bool operator==(const MlpShape&, const MlpShape&) = default;
};

enum class Activation { tanh };

/// Flat parameter storage laid out as [w1 (row-major hidden x input) | b1 | w2 | b2].
class ParamVector {
public:
    explicit ParamVector(MlpShape shape) : shape_(shape), values_(shape.param_count(), 0.0) {}

    const MlpShape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    std::span<double> w1() noexcept { return values().subspan(0, w1_size()); }
    std::span<const double> w1() const noexcept { return values().subspan(0, w1_size()); }
    std::span<double> b1() noexcept { return values().subspan(w1_size(), shape_.hidden_dim); }
    std::span<const double> b1() const noexcept { return values().subspan(w1_size(), shape_.hidden_dim); }
    std::span<double> w2() noexcept { return values().subspan(w1_size() + shape_.hidden_dim, shape_.hidden_dim); }
    std::span<const double> w2() const noexcept {
        return values().subspan(w1_size() + shape_.hidden_dim, shape_.hidden_dim);
    }
    double& b2() noexcept { return values_.back(); }
    double b2() const noexcept { return values_.back(); }

    bool all_finite() const noexcept {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

protected:
    std::size_t w1_size() const noexcept { return shape_.hidden_dim * shape_.input_dim; }

    MlpShape shape_;
    std::vector<double> values_;
};

/// Gradient of a scalar loss with respect to every MlpField parameter.
class ParamGrad : public ParamVector {
public:
    using ParamVector::ParamVector;

    ParamGrad& operator+=(const ParamGrad& other) {
        if (other.shape() != shape_) throw InternalError("ParamGrad shape mismatch");
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
        return *this;
    }

    ParamGrad& operator*=(double s) noexcept {
        for (double& v : values_) v *= s;
        return *this;
    }

    double norm() const noexcept {
        double sq = 0.0;
        for (double v : values_) sq += v * v;
        return std::sqrt(sq);
    }

    friend bool operator==(const ParamGrad& a, const ParamGrad& b) {
        return a.shape_ == b.shape_ && a.values_ == b.values_;
    }
};

class MlpField : public ParamVector {
public:
    using ParamVector::ParamVector;

    Activation activation() const noexcept { return Activation::tanh; }

    double value(std::span<const double> x) const {
        check_input(x);
        const std::size_t d = shape_.input_dim;
        const auto w1v = w1();
        const auto b1v = b1();
        const auto w2v = w2();
        double out = b2();
        for (std::size_t j = 0; j < shape_.hidden_dim; ++j) {
            double a = b1v[j];
            for (std::size_t k = 0; k < d; ++k) a += w1v[j * d + k] * x[k];
            out += w2v[j] * std::tanh(a);
        }
        return out;
    }

    double value(const Vec2& x) const {
        const auto xs = x.as_array();
        return value(std::span<const double>(xs));
    }

    /// d f / d x, written into `out` (size input_dim).
    void gradient(std::span<const double> x, std::span<double> out) const {
        check_input(x);
        if (out.size() != shape_.input_dim) throw InternalError("gradient output has wrong size");
        const std::size_t d = shape_.input_dim;
        const auto w1v = w1();
        const auto b1v = b1();
        const auto w2v = w2();
        for (double& o : out) o = 0.0;
        for (std::size_t j = 0; j < shape_.hidden_dim; ++j) {
            double a = b1v[j];
            for (std::size_t k = 0; k < d; ++k) a += w1v[j * d + k] * x[k];
            const double t = std::tanh(a);
            const double delta = w2v[j] * (1.0 - t * t);
            for (std::size_t k = 0; k < d; ++k) out[k] += delta * w1v[j * d + k];
        }
    }

    Vec2 gradient(const Vec2& x) const {
        if (shape_.input_dim != 2) throw ConfigError("Vec2 gradient needs a 2D field");
        if (!is_finite(x)) throw InputError("non-finite input to field");
        const auto w1v = w1();
        const auto b1v = b1();
        const auto w2v = w2();
        Vec2 g;
        for (std::size_t j = 0; j < shape_.hidden_dim; ++j) {
            const double a = w1v[2 * j] * x.x + w1v[2 * j + 1] * x.y + b1v[j];
            const double t = std::tanh(a);
            const double delta = w2v[j] * (1.0 - t * t);
            g.x += delta * w1v[2 * j];
            g.y += delta * w1v[2 * j + 1];
        }
        return g;
    }

    /// upstream * d f(x) / d theta.
    ParamGrad param_gradient(std::span<const double> x, double upstream) const {
        check_input(x);
        if (!std::isfinite(upstream)) throw InputError("non-finite upstream gradient");
        ParamGrad g(shape_);
        accumulate_param_gradient(x, upstream, g);
        return g;
    }

    ParamGrad param_gradient(const Vec2& x, double upstream) const {
        const auto xs = x.as_array();
        return param_gradient(std::span<const double>(xs), upstream);
    }

    /// Adds upstream * d f(x) / d theta into `acc` without allocating.
    void accumulate_param_gradient(std::span<const double> x, double upstream, ParamGrad& acc) const {
        if (acc.shape() != shape_) throw InternalError("ParamGrad shape mismatch");
        const std::size_t d = shape_.input_dim;
        const auto w1v = w1();
        const auto b1v = b1();
        const auto w2v = w2();
        auto gw1 = acc.w1();
        auto gb1 = acc.b1();
        auto gw2 = acc.w2();
        for (std::size_t j = 0; j < shape_.hidden_dim; ++j) {
            double a = b1v[j];
            for (std::size_t k = 0; k < d; ++k) a += w1v[j * d + k] * x[k];
            const double t = std::tanh(a);
            const double delta = upstream * w2v[j] * (1.0 - t * t);
            gw2[j] += upstream * t;
            gb1[j] += delta;
            for (std::size_t k = 0; k < d; ++k) gw1[j * d + k] += delta * x[k];
        }
        acc.b2() += upstream;
    }

    void accumulate_param_gradient(const Vec2& x, double upstream, ParamGrad& acc) const {
        const auto xs = x.as_array();
        accumulate_param_gradient(std::span<const double>(xs), upstream, acc);
    }

    friend bool operator==(const MlpField& a, const MlpField& b) {
        return a.shape_ == b.shape_ && a.values_ == b.values_;
    }

private:
    void check_input(std::span<const double> x) const {
        if (x.size() != shape_.input_dim) throw InputError("input has wrong dimension");
        for (double v : x)
            if (!std::isfinite(v)) throw InputError("non-finite input to field");
    }
};

static_assert(ScalarField<MlpField>);

/// Glorot-uniform weights, zero biases. Deterministic in `seed`.
inline MlpField mlp_init(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed) {
    if (input_dim < 1 || hidden_dim < 1) throw ConfigError("mlp dimensions must be >= 1");
    MlpField field(MlpShape{input_dim, hidden_dim});
    Rng rng(seed);
    const double hidden_bound = std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim));
    for (double& w : field.w1()) w = rng.uniform(-hidden_bound, hidden_bound);
    const double out_bound = std::sqrt(6.0 / static_cast<double>(hidden_dim + 1));
    for (double& w : field.w2()) w = rng.uniform(-out_bound, out_bound);
    return field;
}

inline double forward(const MlpField& field, const Vec2& x) { return field.value(x); }

/// E(x) = -f(x).
inline double energy(const MlpField& field, const Vec2& x) { return -field.value(x); }

inline Vec2 grad_input(const MlpField& field, const Vec2& x) { return field.gradient(x); }

inline ParamGrad grad_params(const MlpField& field, const Vec2& x, double upstream) {
    return field.param_gradient(x, upstream);
}

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class AdamState {
public:
    AdamState(std::size_t param_count, AdamConfig config = {})
        : config_(config), first_(param_count, 0.0), second_(param_count, 0.0) {}

    const AdamConfig& config() const noexcept { return config_; }
    std::uint64_t step() const noexcept { return step_; }
    std::size_t size() const noexcept { return first_.size(); }
    std::span<const double> first_moment() const noexcept { return first_; }
    std::span<const double> second_moment() const noexcept { return second_; }

    /// One bias-corrected Adam step on `params`, descending along `grad`.
    void update(std::span<double> params, std::span<const double> grad) {
        if (params.size() != first_.size() || grad.size() != first_.size())
            throw InternalError("optimizer state and gradient shapes differ");
        ++step_;
        const auto t = static_cast<double>(step_);
        const double correction1 = 1.0 - std::pow(config_.beta1, t);
        const double correction2 = 1.0 - std::pow(config_.beta2, t);
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grad[i];
            first_[i] = config_.beta1 * first_[i] + (1.0 - config_.beta1) * g;
            second_[i] = config_.beta2 * second_[i] + (1.0 - config_.beta2) * g * g;
            const double m_hat = first_[i] / correction1;
            const double v_hat = second_[i] / correction2;
            params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
    }

private:
    AdamConfig config_;
    std::vector<double> first_;
    std::vector<double> second_;
    std::uint64_t step_ = 0;
};

inline void optimizer_step(MlpField& field, AdamState& state, const ParamGrad& grad) {
    if (grad.shape() != field.shape()) throw InternalError("gradient shape does not match field");
    state.update(field.values(), grad.values());
}

}  // namespace coms
