#pragma once

// Chains over scalar fields: noiseless gradient ascent, Langevin MCMC, and
// Langevin on the reward-tilted density p(x) exp(w f_oracle(x)).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "coms/data.hpp"
#include "coms/error.hpp"
#include "coms/nnet.hpp"
#include "coms/rng.hpp"
#include "coms/vec2.hpp"

namespace coms {

/// s_i = start * (end / start)^(i / (steps - 1)), endpoints pinned exactly.
class GeometricSchedule {
public:
    GeometricSchedule(double start, double end, std::size_t steps) : start_(start), end_(end) {
        if (!(start > 0.0) || !(end > 0.0)) throw ConfigError("geometric schedule endpoints must be positive");
        if (steps < 1) throw ConfigError("geometric schedule needs at least one step");
        if (steps == 1 && start != end) throw ConfigError("single-step schedule requires start == end");
        values_.resize(steps);
        const double log_ratio = std::log(end / start);
        const double denom = static_cast<double>(steps - 1);
        for (std::size_t i = 0; i < steps; ++i)
            values_[i] = start * std::exp(log_ratio * (static_cast<double>(i) / std::max(denom, 1.0)));
        values_.front() = start;
        values_.back() = end;
    }

    double start() const noexcept { return start_; }
    double end() const noexcept { return end_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }

private:
    double start_;
    double end_;
    std::vector<double> values_;
};

inline GeometricSchedule geomspace(double start, double end, std::size_t steps) {
    return GeometricSchedule(start, end, steps);
}

// ---------------------------------------------------------------------------
// Single chains

/// x <- x + eps * grad f(x), `steps` times. No noise.
template <ScalarField Field>
Vec2 gradient_ascent_chain(const Field& field, Vec2 x, double eps, std::size_t steps) {
    if (!(eps > 0.0)) throw ConfigError("gradient ascent step size must be positive");
    for (std::size_t t = 0; t < steps; ++t) {
        x += eps * field.gradient(x);
        if (!is_finite(x)) throw SamplerDiverged(t);
    }
    return x;
}

namespace detail {

template <class Drift>
Vec2 run_langevin(Drift&& drift, Vec2 x, std::span<const double> schedule, Rng& rng) {
    for (std::size_t t = 0; t < schedule.size(); ++t) {
        const double eps = schedule[t];
        const Vec2 g = drift(x);
        const double zx = rng.normal();
        const double zy = rng.normal();
        x += (0.5 * eps * eps) * g;
        x += eps * Vec2{zx, zy};
        if (!is_finite(x)) throw SamplerDiverged(t);
    }
    return x;
}

}  // namespace detail

/// x <- x + (eps_t^2 / 2) grad f(x) + eps_t z, z ~ N(0, I), one step per
/// schedule entry.
template <ScalarField Field>
Vec2 langevin_chain(const Field& field, Vec2 x0, std::span<const double> schedule, Rng& rng) {
    return detail::run_langevin([&](const Vec2& x) { return field.gradient(x); }, x0, schedule, rng);
}

/// Langevin on log p_energy(x) + w f_oracle(x). With w == 0 the oracle is never
/// evaluated, so the trajectory equals langevin_chain's bit for bit.
template <ScalarField Energy, ScalarField Oracle>
Vec2 tilted_langevin_chain(const Energy& energy, const Oracle& oracle, double w, Vec2 x0,
                           std::span<const double> schedule, Rng& rng) {
    if (!(w >= 0.0)) throw ConfigError("tilt weight must be non-negative");
    if (w == 0.0) return langevin_chain(energy, x0, schedule, rng);
    return detail::run_langevin(
        [&](const Vec2& x) {
            Vec2 g = energy.gradient(x);
            g += w * oracle.gradient(x);
            return g;
        },
        x0, schedule, rng);
}

// ---------------------------------------------------------------------------
// Batches

enum class SamplerKind { gradient_ascent, langevin, tilted_langevin };

inline std::string to_string(SamplerKind k) {
    switch (k) {
        case SamplerKind::gradient_ascent: return "ascent";
        case SamplerKind::langevin: return "langevin";
        case SamplerKind::tilted_langevin: return "tilted";
    }
    return "?";
}

inline SamplerKind sampler_kind_from_string(const std::string& s) {
    if (s == "ascent" || s == "gradient_ascent") return SamplerKind::gradient_ascent;
    if (s == "langevin") return SamplerKind::langevin;
    if (s == "tilted" || s == "tilted_langevin") return SamplerKind::tilted_langevin;
    throw ConfigError("unknown sampler '" + s + "'");
}

struct SamplerSpec {
    SamplerKind kind = SamplerKind::langevin;
    std::size_t steps = 50000;
    double schedule_start = 0.1;  // Langevin kinds: eps_0
    double schedule_end = 1e-5;   // Langevin kinds: eps_{steps-1}
    double fixed_eps = 0.01;      // gradient ascent step size
    double tilt_weight = 0.0;
    PriorSpec prior;
    bool init_from_data = false;
    std::uint64_t seed = 0;

    void validate() const {
        prior.validate();
        if (kind == SamplerKind::gradient_ascent) {
            if (!(fixed_eps > 0.0)) throw ConfigError("fixed_eps must be positive");
        } else if (steps > 0) {
            if (!(schedule_start > 0.0) || !(schedule_end > 0.0))
                throw ConfigError("schedule endpoints must be positive");
            if (steps == 1 && schedule_start != schedule_end)
                throw ConfigError("single-step schedule requires start == end");
        }
        if (!(tilt_weight >= 0.0)) throw ConfigError("tilt weight must be non-negative");
    }

    std::vector<double> schedule() const {
        if (steps == 0) return {};
        const auto s = geomspace(schedule_start, schedule_end, steps);
        return {s.values().begin(), s.values().end()};
    }
};

inline unsigned default_thread_count() noexcept { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs `n` chains. Chain i draws its start point and noise from streams
/// derived from (spec.seed, i), so output does not depend on `threads`.
template <ScalarField Energy, ScalarField Oracle = Energy>
std::vector<Vec2> sample_batch(const SamplerSpec& spec, std::size_t n, const Energy& energy,
                               const Oracle* oracle = nullptr, std::span<const Vec2> init_data = {},
                               unsigned threads = 0) {
    spec.validate();
    if (spec.kind == SamplerKind::tilted_langevin && oracle == nullptr)
        throw UsageError("tilted sampler requires an oracle field");
    if (spec.init_from_data && init_data.empty() && n > 0)
        throw UsageError("init_from_data requires initial data points");

    std::vector<Vec2> out(n);
    if (n == 0) return out;
    const std::vector<double> schedule = spec.kind == SamplerKind::gradient_ascent ? std::vector<double>{} : spec.schedule();

    auto run_chain = [&](std::size_t i) {
        Vec2 x0;
        if (spec.init_from_data) {
            Rng pick(derive_seed(spec.seed, {i, 1}));
            x0 = init_data[pick.index(init_data.size())];
        } else {
            x0 = prior_point(spec.prior, spec.seed, i);
        }
        Rng rng(derive_seed(spec.seed, {i, 2}));
        try {
            switch (spec.kind) {
                case SamplerKind::gradient_ascent:
                    out[i] = gradient_ascent_chain(energy, x0, spec.fixed_eps, spec.steps);
                    break;
                case SamplerKind::langevin: out[i] = langevin_chain(energy, x0, schedule, rng); break;
                case SamplerKind::tilted_langevin:
                    out[i] = tilted_langevin_chain(energy, *oracle, spec.tilt_weight, x0, schedule, rng);
                    break;
            }
        } catch (const SamplerDiverged& e) {
            throw e.with_chain(i);
        }
    };

    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads == 0 ? default_thread_count() : threads, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) run_chain(i);
        return out;
    }

    // Each worker records the lowest-index failure it saw; the overall lowest
    // wins so the reported error is independent of scheduling.
    struct Failure {
        std::size_t chain = 0;
        std::exception_ptr error;
    };
    std::vector<std::optional<Failure>> failures(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < n; i += workers) {
                    try {
                        run_chain(i);
                    } catch (...) {
                        failures[w] = Failure{i, std::current_exception()};
                        return;
                    }
                }
            });
        }
    }
    const Failure* first = nullptr;
    for (const auto& f : failures)
        if (f && (first == nullptr || f->chain < first->chain)) first = &*f;
    if (first != nullptr) std::rethrow_exception(first->error);
    return out;
}

}  // namespace coms
