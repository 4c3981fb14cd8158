#pragma once

// JSON persistence: checkpoints, metrics logs, sample files and run configs.
// Doubles are written with round-trip precision by nlohmann::json.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coms/data.hpp"
#include "coms/error.hpp"
#include "coms/eval.hpp"
#include "coms/nnet.hpp"
#include "coms/sampling.hpp"
#include "coms/training.hpp"

namespace coms {

using nlohmann::json;

namespace detail {

inline void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    const std::set<std::string> known(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items())
        if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
void read_opt(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

inline std::vector<double> doubles(const json& j, const char* key, std::size_t expected) {
    if (!j.contains(key) || !j[key].is_array()) throw ParseError(std::string("checkpoint is missing '") + key + "'");
    const auto& arr = j[key];
    if (arr.size() != expected) throw ParseError(std::string("checkpoint '") + key + "' has wrong length");
    std::vector<double> out;
    out.reserve(expected);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) throw ParseError(std::string("checkpoint '") + key + "' holds a non-number", i);
        out.push_back(arr[i].get<double>());
    }
    return out;
}

}  // namespace detail

/// 64-bit FNV-1a, used to tag sample files with the checkpoint they came from.
inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::string file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

// ---------------------------------------------------------------------------
// Configs

inline json to_json(const SpiralSpec& s) {
    return {{"n", s.n},
            {"t_min", s.t_min},
            {"t_max", s.t_max},
            {"radius_coef", s.radius_coef},
            {"noise_std", s.noise_std},
            {"seed", s.seed}};
}

inline void apply_json(const json& j, SpiralSpec& s) {
    detail::reject_unknown_keys(j, {"n", "t_min", "t_max", "radius_coef", "noise_std", "seed"}, "spiral config");
    detail::read_opt(j, "n", s.n);
    detail::read_opt(j, "t_min", s.t_min);
    detail::read_opt(j, "t_max", s.t_max);
    detail::read_opt(j, "radius_coef", s.radius_coef);
    detail::read_opt(j, "noise_std", s.noise_std);
    detail::read_opt(j, "seed", s.seed);
}

inline json to_json(const TrainConfig& c) {
    return {{"variant", to_string(c.variant)},
            {"alpha", c.alpha},
            {"cd_steps", c.cd_steps},
            {"neg_schedule_start", c.neg_schedule_start},
            {"neg_schedule_end", c.neg_schedule_end},
            {"neg_eps", c.neg_eps},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"hidden_dim", c.hidden_dim},
            {"learning_rate", c.optimizer.learning_rate},
            {"beta1", c.optimizer.beta1},
            {"beta2", c.optimizer.beta2},
            {"adam_eps", c.optimizer.eps},
            {"clip_norm", c.clip_norm},
            {"seed", c.seed}};
}

inline void apply_json(const json& j, TrainConfig& c) {
    detail::reject_unknown_keys(j,
                                {"variant", "alpha", "cd_steps", "neg_schedule_start", "neg_schedule_end", "neg_eps",
                                 "epochs", "batch_size", "hidden_dim", "learning_rate", "beta1", "beta2", "adam_eps",
                                 "clip_norm", "seed"},
                                "train config");
    if (j.contains("variant")) {
        std::string v;
        detail::read_opt(j, "variant", v);
        c.variant = variant_from_string(v);
    }
    detail::read_opt(j, "alpha", c.alpha);
    detail::read_opt(j, "cd_steps", c.cd_steps);
    detail::read_opt(j, "neg_schedule_start", c.neg_schedule_start);
    detail::read_opt(j, "neg_schedule_end", c.neg_schedule_end);
    detail::read_opt(j, "neg_eps", c.neg_eps);
    detail::read_opt(j, "epochs", c.epochs);
    detail::read_opt(j, "batch_size", c.batch_size);
    detail::read_opt(j, "hidden_dim", c.hidden_dim);
    detail::read_opt(j, "learning_rate", c.optimizer.learning_rate);
    detail::read_opt(j, "beta1", c.optimizer.beta1);
    detail::read_opt(j, "beta2", c.optimizer.beta2);
    detail::read_opt(j, "adam_eps", c.optimizer.eps);
    detail::read_opt(j, "clip_norm", c.clip_norm);
    detail::read_opt(j, "seed", c.seed);
}

inline json to_json(const PriorSpec& p) { return {{"kind", "uniform_box"}, {"low", p.low}, {"high", p.high}, {"dim", p.dim}}; }

inline void apply_json(const json& j, PriorSpec& p) {
    detail::reject_unknown_keys(j, {"kind", "low", "high", "dim"}, "prior config");
    if (j.contains("kind") && j["kind"] != "uniform_box") throw ConfigError("only the uniform_box prior is supported");
    detail::read_opt(j, "low", p.low);
    detail::read_opt(j, "high", p.high);
    detail::read_opt(j, "dim", p.dim);
}

inline json to_json(const SamplerSpec& s) {
    return {{"kind", to_string(s.kind)},
            {"steps", s.steps},
            {"schedule_start", s.schedule_start},
            {"schedule_end", s.schedule_end},
            {"fixed_eps", s.fixed_eps},
            {"tilt_weight", s.tilt_weight},
            {"prior", to_json(s.prior)},
            {"init_from_data", s.init_from_data},
            {"seed", s.seed}};
}

inline void apply_json(const json& j, SamplerSpec& s) {
    detail::reject_unknown_keys(j,
                                {"kind", "steps", "schedule_start", "schedule_end", "fixed_eps", "tilt_weight", "prior",
                                 "init_from_data", "seed"},
                                "sampler config");
    if (j.contains("kind")) {
        std::string k;
        detail::read_opt(j, "kind", k);
        s.kind = sampler_kind_from_string(k);
    }
    detail::read_opt(j, "steps", s.steps);
    detail::read_opt(j, "schedule_start", s.schedule_start);
    detail::read_opt(j, "schedule_end", s.schedule_end);
    detail::read_opt(j, "fixed_eps", s.fixed_eps);
    detail::read_opt(j, "tilt_weight", s.tilt_weight);
    if (j.contains("prior")) apply_json(j["prior"], s.prior);
    detail::read_opt(j, "init_from_data", s.init_from_data);
    detail::read_opt(j, "seed", s.seed);
}

/// Everything a CLI run can be configured with. Sections are optional; keys
/// not listed here are rejected.
struct RunConfig {
    SpiralSpec spiral;
    TrainConfig train;
    SamplerSpec sampler;
    std::size_t sample_count = 256;
    double tau = 0.1;
};

inline json to_json(const RunConfig& c) {
    return {{"spiral", to_json(c.spiral)},
            {"train", to_json(c.train)},
            {"sampler", to_json(c.sampler)},
            {"sample_count", c.sample_count},
            {"eval", {{"tau", c.tau}}}};
}

inline void apply_json(const json& j, RunConfig& c) {
    detail::reject_unknown_keys(j, {"spiral", "train", "sampler", "sample_count", "eval"}, "run config");
    if (j.contains("spiral")) apply_json(j["spiral"], c.spiral);
    if (j.contains("train")) apply_json(j["train"], c.train);
    if (j.contains("sampler")) apply_json(j["sampler"], c.sampler);
    detail::read_opt(j, "sample_count", c.sample_count);
    if (j.contains("eval")) {
        detail::reject_unknown_keys(j["eval"], {"tau"}, "eval config");
        detail::read_opt(j["eval"], "tau", c.tau);
    }
}

// ---------------------------------------------------------------------------
// Checkpoints

inline json to_json(const Checkpoint& ckpt) {
    const auto& f = ckpt.field;
    return {{"input_dim", f.shape().input_dim},
            {"hidden_dim", f.shape().hidden_dim},
            {"activation", "tanh"},
            {"w1", std::vector<double>(f.w1().begin(), f.w1().end())},
            {"b1", std::vector<double>(f.b1().begin(), f.b1().end())},
            {"w2", std::vector<double>(f.w2().begin(), f.w2().end())},
            {"b2", f.b2()},
            {"meta",
             {{"variant", to_string(ckpt.config.variant)},
              {"alpha", ckpt.config.alpha},
              {"seed", ckpt.config.seed},
              {"steps_trained", ckpt.steps_trained},
              {"clip_events", ckpt.clip_events},
              {"train_config", to_json(ckpt.config)}}}};
}

inline Checkpoint checkpoint_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("checkpoint must be a JSON object");
    for (const char* key : {"input_dim", "hidden_dim", "b2"})
        if (!j.contains(key) || !j[key].is_number()) throw ParseError(std::string("checkpoint is missing '") + key + "'");
    if (j.value("activation", "tanh") != "tanh") throw ParseError("unsupported activation");
    const auto input_dim = j["input_dim"].get<std::size_t>();
    const auto hidden_dim = j["hidden_dim"].get<std::size_t>();
    if (input_dim < 1 || hidden_dim < 1) throw ParseError("checkpoint dimensions must be >= 1");

    MlpField field(MlpShape{input_dim, hidden_dim});
    const auto w1 = detail::doubles(j, "w1", hidden_dim * input_dim);
    const auto b1 = detail::doubles(j, "b1", hidden_dim);
    const auto w2 = detail::doubles(j, "w2", hidden_dim);
    std::copy(w1.begin(), w1.end(), field.w1().begin());
    std::copy(b1.begin(), b1.end(), field.b1().begin());
    std::copy(w2.begin(), w2.end(), field.w2().begin());
    field.b2() = j["b2"].get<double>();
    if (!field.all_finite()) throw ParseError("checkpoint holds non-finite weights");

    Checkpoint ckpt{std::move(field), {}, {}, 0, 0};
    ckpt.config.hidden_dim = hidden_dim;
    if (j.contains("meta")) {
        const auto& meta = j["meta"];
        try {
            if (meta.contains("train_config")) apply_json(meta["train_config"], ckpt.config);
            if (meta.contains("variant")) ckpt.config.variant = variant_from_string(meta["variant"].get<std::string>());
            if (meta.contains("alpha")) ckpt.config.alpha = meta["alpha"].get<double>();
            if (meta.contains("seed")) ckpt.config.seed = meta["seed"].get<std::uint64_t>();
            if (meta.contains("steps_trained")) ckpt.steps_trained = meta["steps_trained"].get<std::uint64_t>();
            if (meta.contains("clip_events")) ckpt.clip_events = meta["clip_events"].get<std::size_t>();
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad checkpoint meta: ") + e.what());
        } catch (const ConfigError& e) {
            throw ParseError(std::string("bad checkpoint meta: ") + e.what());
        }
    }
    return ckpt;
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
    return checkpoint_from_json(read_json_file(path));
}

inline void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    write_json_file(path, to_json(ckpt));
}

/// Per-epoch training metrics: [{epoch, mse_term, reg_term, total}, ...].
inline json metrics_to_json(const std::vector<LossBreakdown>& history) {
    auto arr = json::array();
    for (std::size_t e = 0; e < history.size(); ++e)
        arr.push_back({{"epoch", e},
                       {"mse_term", history[e].mse_term},
                       {"reg_term", history[e].reg_term},
                       {"total", history[e].total}});
    return arr;
}

// ---------------------------------------------------------------------------
// Sample files

struct SampleFileMeta {
    json spec = json::object();
    std::uint64_t seed = 0;
    std::string checkpoint_hash;
    std::optional<std::string> oracle_hash;
};

inline json samples_to_json(std::span<const Vec2> samples, const SampleFileMeta& meta) {
    json m = {{"spec", meta.spec}, {"seed", meta.seed}, {"checkpoint_hash", meta.checkpoint_hash}};
    if (meta.oracle_hash) m["oracle_hash"] = *meta.oracle_hash;
    auto arr = json::array();
    for (const auto& x : samples) arr.push_back({x.x, x.y});
    return {{"meta", std::move(m)}, {"samples", std::move(arr)}};
}

/// Accepts a sample file ({"meta", "samples"}), a bare array of [x1, x2]
/// pairs, or a dataset array of {"x", "y"} records.
inline std::vector<Vec2> samples_from_json(const json& doc) {
    const json* arr = &doc;
    if (doc.is_object()) {
        if (!doc.contains("samples")) throw ParseError("sample file is missing \"samples\"");
        arr = &doc["samples"];
    }
    if (!arr->is_array()) throw ParseError("samples must be a JSON array");
    std::vector<Vec2> out;
    out.reserve(arr->size());
    for (std::size_t i = 0; i < arr->size(); ++i) {
        const auto& rec = (*arr)[i];
        if (rec.is_object()) {
            if (!rec.contains("x")) throw ParseError("sample record needs \"x\"", i);
            out.push_back(vec2_from_json(rec["x"], i));
        } else {
            out.push_back(vec2_from_json(rec, i));
        }
    }
    return out;
}

inline std::vector<Vec2> read_samples(const std::filesystem::path& path) {
    return samples_from_json(read_json_file(path));
}

}  // namespace coms
