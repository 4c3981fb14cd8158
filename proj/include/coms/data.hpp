#pragma once

// Synthetic 2D spiral benchmark: the ground-truth reward, the spiral
// generator, the uniform-box sampler prior and the dataset file format.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coms/error.hpp"
#include "coms/rng.hpp"
#include "coms/vec2.hpp"

namespace coms {

struct LabeledPoint {
    Vec2 x;
    double y = 0.0;

    friend bool operator==(const LabeledPoint&, const LabeledPoint&) = default;
};

using Dataset = std::vector<LabeledPoint>;

/// Archimedean spiral r = radius_coef * t, t in [t_min, t_max], jittered
/// with isotropic Gaussian noise.
struct SpiralSpec {
    std::size_t n = 1000;
    double t_min = 2.0;
    double t_max = 12.0;
    double radius_coef = 0.15;
    double noise_std = 0.025;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(t_min <= t_max)) throw ConfigError("spiral t_min must not exceed t_max");
        if (!(radius_coef > 0.0)) throw ConfigError("spiral radius_coef must be positive");
        if (!(noise_std >= 0.0)) throw ConfigError("spiral noise_std must be non-negative");
    }

    double max_radius() const noexcept { return radius_coef * t_max; }
};

enum class PriorKind { uniform_box };

struct PriorSpec {
    PriorKind kind = PriorKind::uniform_box;
    double low = -1.5;
    double high = 2.0;
    std::size_t dim = 2;

    void validate() const {
        if (!(low < high)) throw ConfigError("prior low must be below high");
        if (dim != 2) throw ConfigError("prior must be two-dimensional");
    }

    bool contains(const Vec2& x) const noexcept { return x.x >= low && x.x <= high && x.y >= low && x.y <= high; }
};

/// f(x) = sum_i exp(-x_i^2); maximal (2.0) at the origin.
inline double ground_truth_reward(const Vec2& x) noexcept { return std::exp(-x.x * x.x) + std::exp(-x.y * x.y); }

/// Noise-free spiral centerline at parameter t.
inline Vec2 spiral_centerline(double t, double radius_coef) noexcept {
    const double r = radius_coef * t;
    return {r * std::cos(t), r * std::sin(t)};
}

inline Dataset spiral_generate(const SpiralSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    Dataset out;
    out.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const double t = spec.t_min < spec.t_max ? rng.uniform(spec.t_min, spec.t_max) : spec.t_min;
        Vec2 x = spiral_centerline(t, spec.radius_coef);
        const double nx = rng.normal();
        const double ny = rng.normal();
        x += spec.noise_std * Vec2{nx, ny};
        out.push_back({x, ground_truth_reward(x)});
    }
    return out;
}

/// Point `index` of the prior stream rooted at `seed`; each index has its own
/// stream so a point never depends on how many others were drawn.
inline Vec2 prior_point(const PriorSpec& spec, std::uint64_t seed, std::size_t index) {
    Rng rng(derive_seed(seed, {index}));
    const double a = rng.uniform(spec.low, spec.high);
    const double b = rng.uniform(spec.low, spec.high);
    return {a, b};
}

inline std::vector<Vec2> prior_sample(const PriorSpec& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    std::vector<Vec2> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(prior_point(spec, seed, i));
    return out;
}

// ---------------------------------------------------------------------------
// Dataset files: JSON array of {"x": [x1, x2], "y": y}.

inline nlohmann::json dataset_to_json(const Dataset& data) {
    auto arr = nlohmann::json::array();
    for (const auto& p : data) arr.push_back({{"x", {p.x.x, p.x.y}}, {"y", p.y}});
    return arr;
}

inline Vec2 vec2_from_json(const nlohmann::json& j, std::size_t index) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError("expected a two-component numeric array", index);
    return {j[0].get<double>(), j[1].get<double>()};
}

inline Dataset dataset_from_json(const nlohmann::json& doc) {
    if (!doc.is_array()) throw ParseError("dataset must be a JSON array");
    Dataset out;
    out.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& rec = doc[i];
        if (!rec.is_object() || !rec.contains("x") || !rec.contains("y"))
            throw ParseError("dataset record needs \"x\" and \"y\"", i);
        if (!rec["y"].is_number()) throw ParseError("dataset \"y\" must be a number", i);
        out.push_back({vec2_from_json(rec["x"], i), rec["y"].get<double>()});
    }
    return out;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

inline Dataset read_dataset(const std::filesystem::path& path) { return dataset_from_json(read_json_file(path)); }

inline void write_dataset(const std::filesystem::path& path, const Dataset& data) {
    write_json_file(path, dataset_to_json(data));
}

}  // namespace coms
