#pragma once

// Sample-quality statistics against the analytic benchmark: reward under the
// ground-truth oracle, validity (distance to the spiral centerline) and
// diversity (mean pairwise distance).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "coms/data.hpp"
#include "coms/error.hpp"
#include "coms/nnet.hpp"
#include "coms/vec2.hpp"

namespace coms {

/// Noise-free spiral centerline sampled on a dense t grid; distances are
/// refined locally by ternary search around the nearest grid point.
class SpiralCenterline {
public:
    static constexpr std::size_t kGridPoints = 10000;

    explicit SpiralCenterline(const SpiralSpec& spec) : spec_(spec) {
        spec_.validate();
        ts_.resize(kGridPoints);
        points_.resize(kGridPoints);
        for (std::size_t i = 0; i < kGridPoints; ++i) {
            const double frac = static_cast<double>(i) / static_cast<double>(kGridPoints - 1);
            ts_[i] = spec_.t_min + frac * (spec_.t_max - spec_.t_min);
            points_[i] = spiral_centerline(ts_[i], spec_.radius_coef);
        }
    }

    double distance(const Vec2& x) const {
        std::size_t best = 0;
        double best_sq = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const Vec2 d = x - points_[i];
            const double sq = dot(d, d);
            if (sq < best_sq) {
                best_sq = sq;
                best = i;
            }
        }
        double lo = ts_[best == 0 ? 0 : best - 1];
        double hi = ts_[std::min(best + 1, ts_.size() - 1)];
        auto dist_at = [&](double t) { return distance_between(x, spiral_centerline(t, spec_.radius_coef)); };
        for (int iter = 0; iter < 100 && hi - lo > 1e-13; ++iter) {
            const double m1 = lo + (hi - lo) / 3.0;
            const double m2 = hi - (hi - lo) / 3.0;
            if (dist_at(m1) < dist_at(m2))
                hi = m2;
            else
                lo = m1;
        }
        return std::min({std::sqrt(best_sq), dist_at(0.5 * (lo + hi))});
    }

    const SpiralSpec& spec() const noexcept { return spec_; }

private:
    static double distance_between(const Vec2& a, const Vec2& b) { return coms::distance(a, b); }

    SpiralSpec spec_;
    std::vector<double> ts_;
    std::vector<Vec2> points_;
};

inline double distance_to_spiral(const Vec2& x, const SpiralSpec& spec) { return SpiralCenterline(spec).distance(x); }

struct EvalReport {
    std::size_t n_samples = 0;
    double mean_reward = 0.0;
    double max_reward = 0.0;
    double validity_rate = 0.0;
    double mean_valid_reward = 0.0;
    double diversity = 0.0;
    double tau = 0.1;
};

/// Mean Euclidean distance over all unordered pairs; 0 for fewer than two points.
inline double mean_pairwise_distance(std::span<const Vec2> samples) {
    const std::size_t n = samples.size();
    if (n < 2) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) sum += distance(samples[i], samples[j]);
    return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

inline EvalReport evaluate(std::span<const Vec2> samples, const SpiralSpec& spec, double tau = 0.1) {
    if (samples.empty()) throw UsageError("cannot evaluate an empty sample set");
    if (!(tau > 0.0)) throw ConfigError("validity threshold must be positive");
    for (const auto& x : samples)
        if (!is_finite(x)) throw InputError("non-finite sample");

    const SpiralCenterline centerline(spec);
    EvalReport r;
    r.n_samples = samples.size();
    r.tau = tau;
    r.max_reward = -std::numeric_limits<double>::infinity();
    std::size_t valid = 0;
    double valid_reward = 0.0;
    for (const auto& x : samples) {
        const double reward = ground_truth_reward(x);
        r.mean_reward += reward;
        r.max_reward = std::max(r.max_reward, reward);
        if (centerline.distance(x) < tau) {
            ++valid;
            valid_reward += reward;
        }
    }
    const auto n = static_cast<double>(samples.size());
    r.mean_reward /= n;
    r.validity_rate = static_cast<double>(valid) / n;
    r.mean_valid_reward = valid > 0 ? valid_reward / static_cast<double>(valid) : 0.0;
    r.diversity = mean_pairwise_distance(samples);
    return r;
}

inline nlohmann::json to_json(const EvalReport& r) {
    return {{"n_samples", r.n_samples},
            {"mean_reward", r.mean_reward},
            {"max_reward", r.max_reward},
            {"validity_rate", r.validity_rate},
            {"mean_valid_reward", r.mean_valid_reward},
            {"diversity", r.diversity},
            {"tau", r.tau}};
}

// ---------------------------------------------------------------------------
// Gradient-field statistics

/// Centers of an n x n grid of square cells tiling [low, high]^2, row-major
/// from the bottom-left cell.
inline std::vector<Vec2> cell_centers(double low, double high, std::size_t n) {
    std::vector<Vec2> out;
    out.reserve(n * n);
    const double cell = (high - low) / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            out.push_back({low + (static_cast<double>(c) + 0.5) * cell, low + (static_cast<double>(r) + 0.5) * cell});
    return out;
}

/// Mean cosine similarity between grad f and the direction to the origin,
/// over the grid cells whose center lies within `radius` of the origin.
/// Cells with a zero gradient contribute 0.
template <ScalarField Field>
double center_alignment(const Field& field, double low = -1.5, double high = 2.0, std::size_t grid = 25,
                        double radius = 0.5) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& p : cell_centers(low, high, grid)) {
        const double r = norm(p);
        if (!(r < radius) || r == 0.0) continue;
        const Vec2 g = field.gradient(p);
        const double gn = norm(g);
        ++count;
        if (gn > 0.0) sum += dot(g, -1.0 * p) / (gn * r);
    }
    if (count == 0) throw ConfigError("no grid cells inside the alignment radius");
    return sum / static_cast<double>(count);
}

}  // namespace coms
