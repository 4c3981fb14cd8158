// coms: data generation, training, sampling, evaluation and figures for the
// 2D spiral offline-MBO benchmark.
//
// Exit codes: 0 success, 1 usage/configuration error, 2 runtime error.
// Log verbosity: COMS_LOG_LEVEL = trace|debug|info|warn|error|off (default info).

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "coms/coms.hpp"

namespace fs = std::filesystem;
using coms::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("coms");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("COMS_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(env));
}

/// Copies a flag's value into `dst` only when the flag was given, so flags
/// override config-file values and config-file values override defaults.
template <class T, class U>
void override_with(const CLI::Option* opt, const T& value, U& dst) {
    if (opt->count() > 0) dst = static_cast<U>(value);
}

fs::path config_path_for(const fs::path& out) { return fs::path(out.string() + ".config.json"); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw coms::Error("cannot write " + path.string());
    out << text;
}

std::size_t checked_count(long long n, const char* flag) {
    if (n < 0) throw coms::UsageError(std::string(flag) + " must be non-negative");
    return static_cast<std::size_t>(n);
}

struct Common {
    std::string config_file;
    coms::RunConfig run;

    CLI::Option* add(CLI::App& app) {
        return app.add_option("--config", config_file, "JSON run config (flags override its values)")
            ->check(CLI::ExistingFile);
    }

    void load() {
        if (!config_file.empty()) coms::apply_json(coms::read_json_file(config_file), run);
    }
};

// ---------------------------------------------------------------------------

struct DataCmd {
    Common common;
    long long n = 1000;
    std::uint64_t seed = 0;
    double t_min = 2.0, t_max = 12.0, radius_coef = 0.15, noise_std = 0.025;
    std::string out, plot;
    CLI::Option *o_n{}, *o_seed{}, *o_tmin{}, *o_tmax{}, *o_rc{}, *o_noise{};

    void attach(CLI::App& app) {
        common.add(app);
        o_n = app.add_option("--n", n, "number of points");
        o_seed = app.add_option("--seed", seed, "random seed");
        o_tmin = app.add_option("--t-min", t_min, "smallest spiral angle (radians)");
        o_tmax = app.add_option("--t-max", t_max, "largest spiral angle (radians)");
        o_rc = app.add_option("--radius-coef", radius_coef, "radius = coef * t");
        o_noise = app.add_option("--noise-std", noise_std, "Gaussian jitter");
        app.add_option("--out", out, "dataset JSON path")->required();
        app.add_option("--plot", plot, "also write an SVG of the dataset over the reward");
    }

    int run() {
        common.load();
        auto& s = common.run.spiral;
        if (o_n->count()) s.n = checked_count(n, "--n");
        override_with(o_seed, seed, s.seed);
        override_with(o_tmin, t_min, s.t_min);
        override_with(o_tmax, t_max, s.t_max);
        override_with(o_rc, radius_coef, s.radius_coef);
        override_with(o_noise, noise_std, s.noise_std);

        const auto data = coms::spiral_generate(s);
        coms::write_dataset(out, data);
        coms::write_json_file(config_path_for(out), {{"spiral", coms::to_json(s)}});
        spdlog::info("wrote {} points to {}", data.size(), out);
        if (!plot.empty()) {
            coms::svg::Frame frame;
            frame.title = "spiral dataset";
            write_text(plot, coms::svg::labeled_scatter(data, frame));
            spdlog::info("wrote {}", plot);
        }
        return 0;
    }
};

// ---------------------------------------------------------------------------

struct TrainCmd {
    Common common;
    std::string variant = "stochastic";
    double alpha = 0.0;
    long long epochs = 500, cd_steps = 100, batch_size = 64, hidden = 256;
    double lr = 1e-3, neg_eps = 0.01, neg_start = 0.02, neg_end = 0.001, clip = 100.0;
    std::uint64_t seed = 0;
    std::string data_path, out, metrics;
    CLI::Option *o_variant{}, *o_alpha{}, *o_epochs{}, *o_cd{}, *o_batch{}, *o_hidden{}, *o_lr{}, *o_neg_eps{},
        *o_neg_start{}, *o_neg_end{}, *o_clip{}, *o_seed{};

    void attach(CLI::App& app) {
        common.add(app);
        o_variant = app.add_option("--variant", variant, "original | stochastic | oracle")
                        ->check(CLI::IsMember({"original", "stochastic", "oracle"}));
        o_alpha = app.add_option("--alpha", alpha, "weight of the contrastive regulariser");
        o_epochs = app.add_option("--epochs", epochs, "passes over the dataset");
        o_cd = app.add_option("--cd-steps", cd_steps, "chain length k for negatives");
        o_batch = app.add_option("--batch-size", batch_size, "batch size");
        o_hidden = app.add_option("--hidden", hidden, "hidden units");
        o_lr = app.add_option("--lr", lr, "Adam learning rate");
        o_neg_eps = app.add_option("--neg-eps", neg_eps, "gradient-ascent step for original negatives");
        o_neg_start = app.add_option("--neg-schedule-start", neg_start, "first Langevin noise scale for negatives");
        o_neg_end = app.add_option("--neg-schedule-end", neg_end, "last Langevin noise scale for negatives");
        o_clip = app.add_option("--clip-norm", clip, "gradient-norm clipping threshold");
        o_seed = app.add_option("--seed", seed, "random seed");
        app.add_option("--data", data_path, "dataset JSON")->required()->check(CLI::ExistingFile);
        app.add_option("--out", out, "checkpoint JSON path")->required();
        app.add_option("--metrics", metrics, "metrics log path (default: <out>.metrics.json)");
    }

    int run() {
        common.load();
        auto& c = common.run.train;
        if (o_variant->count()) c.variant = coms::variant_from_string(variant);
        override_with(o_alpha, alpha, c.alpha);
        if (o_epochs->count()) c.epochs = checked_count(epochs, "--epochs");
        if (o_cd->count()) c.cd_steps = checked_count(cd_steps, "--cd-steps");
        if (o_batch->count()) c.batch_size = checked_count(batch_size, "--batch-size");
        if (o_hidden->count()) c.hidden_dim = checked_count(hidden, "--hidden");
        override_with(o_lr, lr, c.optimizer.learning_rate);
        override_with(o_neg_eps, neg_eps, c.neg_eps);
        override_with(o_neg_start, neg_start, c.neg_schedule_start);
        override_with(o_neg_end, neg_end, c.neg_schedule_end);
        override_with(o_clip, clip, c.clip_norm);
        override_with(o_seed, seed, c.seed);
        if (c.variant == coms::Variant::oracle_only && c.alpha != 0.0)
            throw coms::UsageError("--variant oracle trains a plain regressor; --alpha must be 0");
        c.validate();

        const auto data = coms::read_dataset(data_path);
        spdlog::info("training {} model (alpha = {}) on {} points for {} epochs", coms::to_string(c.variant), c.alpha,
                     data.size(), c.epochs);
        const auto ckpt = coms::train_com(c, data, [](const coms::EpochRecord& r) {
            spdlog::debug("epoch {}: mse {:.6f} reg {:.6f} total {:.6f}", r.epoch, r.loss.mse_term, r.loss.reg_term,
                          r.loss.total);
            if (r.clip_events > 0) spdlog::warn("epoch {}: gradient clipped {} time(s)", r.epoch, r.clip_events);
        });
        coms::write_checkpoint(out, ckpt);
        const fs::path metrics_path = metrics.empty() ? fs::path(out + ".metrics.json") : fs::path(metrics);
        coms::write_json_file(metrics_path, coms::metrics_to_json(ckpt.history));
        coms::write_json_file(config_path_for(out), {{"train", coms::to_json(c)}});
        const auto& last = ckpt.history.empty() ? coms::LossBreakdown{} : ckpt.history.back();
        spdlog::info("final loss: mse {:.6f} reg {:.6f} total {:.6f}", last.mse_term, last.reg_term, last.total);
        return 0;
    }
};

// ---------------------------------------------------------------------------

struct SampleCmd {
    Common common;
    std::string ckpt_path, oracle_path, init_data, out;
    std::string sampler = "langevin";
    long long n = 256, steps = 50000;
    double w = 0.0, sched_start = 0.1, sched_end = 1e-5, eps = 0.01, prior_low = -1.5, prior_high = 2.0;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    CLI::Option *o_sampler{}, *o_n{}, *o_steps{}, *o_w{}, *o_start{}, *o_end{}, *o_eps{}, *o_low{}, *o_high{},
        *o_seed{}, *o_init{};

    void attach(CLI::App& app) {
        common.add(app);
        app.add_option("--ckpt", ckpt_path, "energy model checkpoint")->required()->check(CLI::ExistingFile);
        o_sampler = app.add_option("--sampler", sampler, "ascent | langevin | tilted")
                        ->check(CLI::IsMember({"ascent", "langevin", "tilted"}));
        app.add_option("--oracle", oracle_path, "oracle checkpoint (tilted sampler)")->check(CLI::ExistingFile);
        o_w = app.add_option("--w", w, "tilt weight on the oracle");
        o_n = app.add_option("--n", n, "number of chains");
        o_steps = app.add_option("--steps", steps, "chain length");
        o_start = app.add_option("--schedule-start", sched_start, "first Langevin noise scale");
        o_end = app.add_option("--schedule-end", sched_end, "last Langevin noise scale");
        o_eps = app.add_option("--eps", eps, "gradient-ascent step size");
        o_low = app.add_option("--prior-low", prior_low, "uniform prior lower bound");
        o_high = app.add_option("--prior-high", prior_high, "uniform prior upper bound");
        o_init = app.add_option("--init-data", init_data, "start chains from this dataset instead of the prior")
                     ->check(CLI::ExistingFile);
        o_seed = app.add_option("--seed", seed, "random seed");
        app.add_option("--threads", threads, "worker threads (0 = all cores)");
        app.add_option("--out", out, "samples JSON path")->required();
    }

    int run() {
        common.load();
        auto& s = common.run.sampler;
        if (o_sampler->count()) s.kind = coms::sampler_kind_from_string(sampler);
        if (o_n->count()) common.run.sample_count = checked_count(n, "--n");
        if (o_steps->count()) s.steps = checked_count(steps, "--steps");
        override_with(o_w, w, s.tilt_weight);
        override_with(o_start, sched_start, s.schedule_start);
        override_with(o_end, sched_end, s.schedule_end);
        override_with(o_eps, eps, s.fixed_eps);
        override_with(o_low, prior_low, s.prior.low);
        override_with(o_high, prior_high, s.prior.high);
        override_with(o_seed, seed, s.seed);
        if (o_init->count()) s.init_from_data = true;
        if (s.kind == coms::SamplerKind::tilted_langevin && oracle_path.empty())
            throw coms::UsageError("--sampler tilted requires --oracle");
        if (s.kind != coms::SamplerKind::tilted_langevin && o_w->count())
            throw coms::UsageError("--w only applies to --sampler tilted");
        if (s.init_from_data && init_data.empty()) throw coms::UsageError("init_from_data requires --init-data");
        s.validate();

        const auto energy = coms::read_checkpoint(ckpt_path);
        std::optional<coms::Checkpoint> oracle;
        if (!oracle_path.empty()) oracle = coms::read_checkpoint(oracle_path);
        std::vector<coms::Vec2> starts;
        if (!init_data.empty())
            for (const auto& p : coms::read_dataset(init_data)) starts.push_back(p.x);

        const std::size_t count = common.run.sample_count;
        spdlog::info("running {} {} chains of {} steps", count, coms::to_string(s.kind), s.steps);
        const auto samples = coms::sample_batch(s, count, energy.field, oracle ? &oracle->field : nullptr, starts, threads);

        coms::SampleFileMeta meta;
        meta.spec = coms::to_json(s);
        meta.spec["n"] = count;
        meta.seed = s.seed;
        meta.checkpoint_hash = coms::file_hash(ckpt_path);
        if (!oracle_path.empty()) meta.oracle_hash = coms::file_hash(oracle_path);
        coms::write_json_file(out, coms::samples_to_json(samples, meta));
        coms::write_json_file(config_path_for(out), {{"sampler", coms::to_json(s)}, {"sample_count", count}});
        spdlog::info("wrote {} samples to {}", samples.size(), out);
        return 0;
    }
};

// ---------------------------------------------------------------------------

struct EvalCmd {
    Common common;
    std::string samples_path, out;
    double tau = 0.1;
    double t_min = 2.0, t_max = 12.0, radius_coef = 0.15;
    CLI::Option *o_tau{}, *o_tmin{}, *o_tmax{}, *o_rc{};

    void attach(CLI::App& app) {
        common.add(app);
        app.add_option("--samples", samples_path, "samples (or dataset) JSON")->required()->check(CLI::ExistingFile);
        o_tau = app.add_option("--tau", tau, "validity threshold on distance to the spiral");
        o_tmin = app.add_option("--t-min", t_min, "spiral centerline start angle");
        o_tmax = app.add_option("--t-max", t_max, "spiral centerline end angle");
        o_rc = app.add_option("--radius-coef", radius_coef, "spiral radius coefficient");
        app.add_option("--out", out, "report JSON path");
    }

    int run() {
        common.load();
        override_with(o_tau, tau, common.run.tau);
        auto& s = common.run.spiral;
        override_with(o_tmin, t_min, s.t_min);
        override_with(o_tmax, t_max, s.t_max);
        override_with(o_rc, radius_coef, s.radius_coef);

        const auto samples = coms::read_samples(samples_path);
        const auto report = coms::evaluate(samples, s, common.run.tau);
        const auto doc = coms::to_json(report);
        std::cout << doc.dump(2) << '\n';
        if (!out.empty()) {
            coms::write_json_file(out, doc);
            coms::write_json_file(config_path_for(out), {{"spiral", coms::to_json(s)}, {"eval", {{"tau", common.run.tau}}}});
        }
        return 0;
    }
};

// ---------------------------------------------------------------------------

struct PlotCmd {
    std::string data_path, samples_path, ckpt_path, out, title;
    double low = -1.5, high = 2.0;
    long long grid = 0;

    static void common_flags(CLI::App& app, PlotCmd& p) {
        app.add_option("--out", p.out, "SVG path")->required();
        app.add_option("--title", p.title, "figure title");
        app.add_option("--low", p.low, "lower plot bound (both axes)");
        app.add_option("--high", p.high, "upper plot bound (both axes)");
        app.add_option("--grid", p.grid, "heatmap resolution (scatter) or arrow lattice size (quiver)");
    }

    coms::svg::Frame frame() const {
        if (!(low < high)) throw coms::UsageError("--low must be below --high");
        coms::svg::Frame f;
        f.low = low;
        f.high = high;
        f.title = title;
        return f;
    }

    std::vector<coms::Vec2> data_points() const {
        std::vector<coms::Vec2> xs;
        if (!data_path.empty()) xs = coms::read_samples(data_path);
        return xs;
    }

    int scatter() {
        std::vector<coms::Vec2> samples;
        if (!samples_path.empty()) samples = coms::read_samples(samples_path);
        const std::size_t g = grid > 0 ? static_cast<std::size_t>(grid) : 100;
        write_text(out, coms::svg::scatter(data_points(), samples, frame(), g));
        spdlog::info("wrote {}", out);
        return 0;
    }

    int quiver() {
        const auto ckpt = coms::read_checkpoint(ckpt_path);
        const std::size_t g = grid > 0 ? static_cast<std::size_t>(grid) : 25;
        write_text(out, coms::svg::quiver(ckpt.field, data_points(), frame(), g));
        spdlog::info("wrote {} (center alignment {:.3f})", out, coms::center_alignment(ckpt.field, low, high, g));
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Conservative objective models on the 2D spiral benchmark"};
    app.require_subcommand(1);

    DataCmd data;
    data.attach(*app.add_subcommand("data", "generate the spiral dataset"));
    TrainCmd train;
    train.attach(*app.add_subcommand("train", "train an energy model or oracle"));
    SampleCmd sample;
    sample.attach(*app.add_subcommand("sample", "draw samples from a trained model"));
    EvalCmd eval;
    eval.attach(*app.add_subcommand("eval", "score samples against the ground truth"));

    PlotCmd plot;
    auto* plot_app = app.add_subcommand("plot", "emit SVG figures");
    plot_app->require_subcommand(1);
    auto* scatter_app = plot_app->add_subcommand("scatter", "data and samples over the reward heatmap");
    PlotCmd::common_flags(*scatter_app, plot);
    scatter_app->add_option("--data", plot.data_path, "dataset JSON")->check(CLI::ExistingFile);
    scatter_app->add_option("--samples", plot.samples_path, "samples JSON")->check(CLI::ExistingFile);
    auto* quiver_app = plot_app->add_subcommand("quiver", "input-gradient field of a checkpoint");
    PlotCmd::common_flags(*quiver_app, plot);
    quiver_app->add_option("--ckpt", plot.ckpt_path, "checkpoint JSON")->required()->check(CLI::ExistingFile);
    quiver_app->add_option("--data", plot.data_path, "dataset JSON to overlay")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (app.got_subcommand("data")) return data.run();
        if (app.got_subcommand("train")) return train.run();
        if (app.got_subcommand("sample")) return sample.run();
        if (app.got_subcommand("eval")) return eval.run();
        if (scatter_app->parsed()) return plot.scatter();
        if (quiver_app->parsed()) return plot.quiver();
    } catch (const coms::UsageError& e) {
        spdlog::error("{}", e.what());
        std::cerr << app.help() << '\n';
        return kExitUsage;
    } catch (const coms::ConfigError& e) {
        spdlog::error("{}", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
