#include "cli.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "dnpg/checkpoint.hpp"
#include "dnpg/config.hpp"
#include "dnpg/dnp.hpp"
#include "dnpg/errors.hpp"
#include "dnpg/eval.hpp"
#include "dnpg/io.hpp"
#include "dnpg/manifest.hpp"
#include "dnpg/plot.hpp"

namespace dnpg::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
};

struct Session {
    ExperimentConfig cfg;
    std::uint64_t seed;
    fs::path out;
    NoiseSchedule schedule;
    RunManifest manifest;

    Session(ExperimentConfig c, const Globals& g, const std::string& subcommand)
        : cfg(std::move(c)), seed(g.seed.value_or(cfg.seed)), out(g.out), schedule(cfg.schedule.build()) {
        manifest.tool_version = DNPG_VERSION;
        manifest.subcommand = subcommand;
        manifest.config = cfg.canonical;
        manifest.config_hash = config_hash(cfg.canonical);
        manifest.seed = seed;
        manifest.started = utc_timestamp();
    }

    void write(const std::string& name, const std::string& content) {
        write_file_atomic(out / name, content);
        manifest.outputs.push_back((out / name).string());
    }

    void finish() {
        manifest.finished = utc_timestamp();
        append_manifest(out, manifest);
    }
};

ExperimentConfig load(const Globals& g) {
    if (g.config.empty()) throw ConfigError("--config is required");
    return parse_config(g.config);
}

std::unique_ptr<NoiseSource> make_source(const Session& s) {
    if (s.cfg.run.source == "oracle") return std::make_unique<OracleNoiseSource>(s.cfg.world, s.schedule);
    DenoiserParams params = load_checkpoint(s.cfg.run.checkpoint);
    if (params.arch.dim != s.cfg.world.dim() || params.arch.conditions != s.cfg.world.condition_count() ||
        params.arch.time_steps != s.schedule.steps())
        throw ConfigError("run.checkpoint: architecture does not match world/schedule");
    return std::make_unique<DenoiserNoiseSource>(std::move(params));
}

std::string vec_text(const Vec& z) {
    std::string s = "(";
    for (Eigen::Index i = 0; i < z.size(); ++i) s += (i ? ", " : "") + format_real(z[i]);
    return s + ")";
}

std::string trajectory_csv(const std::vector<std::pair<std::uint64_t, ReverseResult>>& runs, const std::string& run_id,
                           int dim) {
    std::string csv = "run_id,seed,step";
    for (int i = 0; i < dim; ++i) csv += ",x" + std::to_string(i);
    csv += '\n';
    for (const auto& [seed, r] : runs)
        for (std::size_t k = 0; k < r.trajectory.size(); ++k) {
            csv += run_id + "," + std::to_string(seed) + "," + std::to_string(k);
            for (Eigen::Index i = 0; i < r.trajectory[k].size(); ++i) csv += "," + format_real(r.trajectory[k][i]);
            csv += '\n';
        }
    return csv;
}

/// Chains under the configured sampler and guidance; writes `file`.
SampleTable draw_samples(Session& s, const GuidanceConfig& guidance, const std::string& file) {
    const auto& cfg = s.cfg;
    SampleTable table;
    const std::string run_id = std::string(cfg.sampler.kind == SamplerKind::Langevin ? "langevin-" : "") +
                               std::string(to_string(guidance.mode));
    if (cfg.sampler.kind == SamplerKind::Langevin) {
        if (cfg.run.source != "oracle")
            throw ConfigError("sampler.kind: langevin needs run.source = oracle (exact composed score)");
        LangevinConfig lc = cfg.sampler.langevin;
        const double ab = s.schedule.alpha_bar(lc.t_fix);
        if (lc.step_size == 0.0) lc.step_size = default_langevin_step(cfg.world, ab);
        std::vector<Vec> inits;
        Rng init_rng(derive_seed(s.seed, 0xFFFFFFFFULL));
        for (std::size_t i = 0; i < cfg.run.langevin_chains; ++i) inits.push_back(init_rng.normal_vector(cfg.world.dim()));
        const double radius = 10.0 * default_grid(cfg.world, ab, 2).extent();
        const auto per_chain = static_cast<std::size_t>((lc.steps - lc.burn_in + lc.thin - 1) / lc.thin);
        table.samples = langevin_chains([&](const Vec& z) { return composed_score(cfg.world, z, ab, guidance); }, inits,
                                        lc, s.seed, radius, cfg.run.threads);
        for (std::size_t i = 0; i < table.samples.size(); ++i) {
            table.run_ids.push_back(run_id);
            table.seeds.push_back(derive_seed(s.seed, i / per_chain));
        }
    } else {
        const auto source = make_source(s);
        table.samples = sample_chains(*source, guidance, s.schedule, cfg.sampler, s.seed, cfg.run.samples, cfg.run.threads);
        for (std::size_t i = 0; i < table.samples.size(); ++i) {
            table.run_ids.push_back(run_id);
            table.seeds.push_back(derive_seed(s.seed, i));
        }
        if (cfg.sampler.record_trajectory) {
            std::vector<std::pair<std::uint64_t, ReverseResult>> runs;
            for (std::size_t i = 0; i < cfg.run.samples; ++i) {
                const auto seed = derive_seed(s.seed, i);
                runs.emplace_back(seed, run_reverse(*source, guidance, s.schedule, cfg.sampler, seed));
            }
            s.write("trajectory.csv", trajectory_csv(runs, run_id, cfg.world.dim()));
        }
    }
    s.write(file, format_samples_csv(table));
    return table;
}

int cmd_world_validate(const Globals& g, const std::string& world_file, std::ostream& out) {
    const GmmWorld world = world_file.empty() ? load(g).world : load_world(world_file);
    out << "world ok: dim=" << world.dim() << " conditions=" << world.condition_count() - 1 << " (+phi)\n";
    for (int c = 1; c < world.condition_count(); ++c)
        out << "  " << c << " " << world.label(c) << " prior=" << format_real(world.condition(c).prior)
            << " components=" << world.condition(c).components.size() << "\n";
    return kOk;
}

int cmd_train(const Globals& g, std::ostream& out) {
    Session s(load(g), g, "train");
    TrainConfig tc = s.cfg.train;
    if (g.seed) tc.seed = *g.seed;
    const DenoiserParams init = DenoiserParams::initialize(s.cfg.denoiser, s.cfg.init_seed);
    const TrainResult r = train(init, s.cfg.world, s.schedule, tc);
    std::string csv = "step,loss\n";
    for (std::size_t i = 0; i < r.losses.size(); ++i) csv += std::to_string(i) + "," + format_real(r.losses[i]) + "\n";
    s.write("loss.csv", csv);
    save_checkpoint(r.params, s.out / "denoiser.ckpt");
    s.manifest.outputs.push_back((s.out / "denoiser.ckpt").string());
    for (int c = 0; c < s.cfg.world.condition_count(); ++c)
        out << "held-out eps MSE [" << s.cfg.world.label(c) << "] = "
            << format_real(heldout_eps_mse(r.params, s.cfg.world, s.schedule, c, 2000, derive_seed(tc.seed, 7))) << "\n";
    s.finish();
    return kOk;
}

int cmd_sample(const Globals& g, std::ostream& out) {
    Session s(load(g), g, "sample");
    const SampleTable t = draw_samples(s, s.cfg.guidance, "samples.csv");
    out << "wrote " << t.samples.size() << " samples to " << (s.out / "samples.csv").string() << "\n";
    s.finish();
    return kOk;
}

int cmd_dns(const Globals& g, std::ostream& out) {
    Session s(load(g), g, "dns");
    const GuidanceConfig dns{GuidanceMode::Dns, s.cfg.dnp.s_dns, s.cfg.dnp.positive, std::nullopt};
    const SampleTable t = draw_samples(s, dns, "dns_samples.csv");
    std::map<int, std::size_t> tally;
    const CaptionerPolicy diag{true};
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
        const int label = infer_negative_condition(s.cfg.world, t.samples[i], s.cfg.dnp.positive, diag);
        ++tally[label];
        if (i < 10)
            out << "seed=" << t.seeds[i] << " z=" << vec_text(t.samples[i]) << " label=" << s.cfg.world.label(label)
                << "\n";
    }
    out << "classification of " << t.samples.size() << " DNS samples:";
    for (const auto& [c, n] : tally) out << " " << s.cfg.world.label(c) << "=" << n;
    out << "\n";
    s.finish();
    return kOk;
}

int cmd_dnp(const Globals& g, std::ostream& out) {
    Session s(load(g), g, "dnp");
    const auto source = make_source(s);
    DnpRunConfig dc = s.cfg.dnp;
    std::string csv = "seed,n_star,compliance_cfg,compliance_dns,compliance_dnp\n";
    double sums[3] = {0, 0, 0};
    for (std::size_t i = 0; i < s.cfg.run.seeds; ++i) {
        dc.seed = s.seed + i;
        const DnpResult r = dnp_generate(*source, s.cfg.world, s.schedule, dc);
        csv += std::to_string(dc.seed) + "," + std::to_string(r.negative_condition) + "," +
               format_real(r.compliance_baseline) + "," + format_real(r.compliance_dns) + "," +
               format_real(r.compliance_final) + "\n";
        sums[0] += r.compliance_baseline;
        sums[1] += r.compliance_dns;
        sums[2] += r.compliance_final;
        out << "seed=" << dc.seed << " negative_sample=" << vec_text(r.negative_sample)
            << " n*=" << s.cfg.world.label(r.negative_condition) << "\n";
    }
    s.write("dnp.csv", csv);
    const double n = static_cast<double>(s.cfg.run.seeds);
    out << "mean compliance: cfg=" << format_real(sums[0] / n) << " dns=" << format_real(sums[1] / n)
        << " dnp=" << format_real(sums[2] / n) << "\n";
    s.finish();
    return kOk;
}

/// Noise level the sample file is compared at: t_fix for Langevin runs, clean data otherwise.
double sample_level(const Session& s) {
    return s.cfg.sampler.kind == SamplerKind::Langevin ? s.schedule.alpha_bar(s.cfg.sampler.langevin.t_fix) : 1.0;
}

int cmd_eval(const Globals& g, const std::string& samples_path, std::ostream& out) {
    Session s(load(g), g, "eval");
    const SampleTable t = parse_samples_csv(read_file(samples_path));
    if (t.samples.empty()) throw ConfigError("eval: sample file has no rows");
    if (t.samples.front().size() != s.cfg.world.dim()) throw ConfigError("eval: sample dimension does not match world");
    const auto& world = s.cfg.world;
    std::vector<std::pair<std::string, double>> metrics;
    metrics.emplace_back("count", static_cast<double>(t.samples.size()));
    if (t.samples.size() >= 2) {
        const MomentReport m = moment_report(t.samples);
        for (Eigen::Index i = 0; i < m.mean.size(); ++i) {
            metrics.emplace_back("mean_x" + std::to_string(i), m.mean[i]);
            metrics.emplace_back("var_x" + std::to_string(i), m.covariance(i, i));
        }
    }
    for (int c = 1; c < world.condition_count(); ++c)
        metrics.emplace_back("compliance_" + world.label(c), compliance(world, t.samples, c));
    if (world.dim() <= 2) {
        const double ab = sample_level(s);
        const Grid grid = default_grid(world, ab, world.dim() == 1 ? 512 : 128);
        const Histogram h = make_histogram(grid, t.samples);
        metrics.emplace_back("tv_marginal", total_variation(h, density_on_grid(world, kPhi, ab, grid)));
        metrics.emplace_back("tv_tilted", total_variation(h, tilted_density_on_grid(world, s.cfg.guidance, ab, grid)));
    }
    std::string csv = "metric,value\n";
    std::string summary = "samples: " + samples_path + "\nconfig hash: " + s.manifest.config_hash + "\n";
    for (const auto& [k, v] : metrics) {
        csv += k + "," + format_real(v) + "\n";
        summary += "  " + k + " = " + format_real(v) + "\n";
    }
    s.write("metrics.csv", csv);
    s.write("summary.txt", summary);
    out << summary;
    s.finish();
    return kOk;
}

std::vector<std::vector<std::string>> read_simple_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

int cmd_plot(const Globals& g, const std::string& samples_path, const std::string& dnp_path, std::ostream& out) {
    Session s(load(g), g, "plot");
    const auto& world = s.cfg.world;
    if (!samples_path.empty()) {
        const SampleTable t = parse_samples_csv(read_file(samples_path));
        if (!t.samples.empty() && t.samples.front().size() != world.dim())
            throw ConfigError("plot: sample dimension does not match world");
        const double ab = sample_level(s);
        const auto& gd = s.cfg.guidance;
        const std::string title = "samples vs density (" + std::string(to_string(gd.mode)) + ", s=" +
                                  format_real(gd.scale) + ")";
        if (world.dim() == 1) {
            const Grid curve_grid = default_grid(world, ab, 512);
            std::vector<DensityCurve> curves{{"marginal", density_on_grid(world, kPhi, ab, curve_grid)}};
            if (gd.scale > 0.0)
                curves.push_back({std::string(to_string(gd.mode)) + "-tilted",
                                  tilted_density_on_grid(world, gd, ab, curve_grid)});
            s.write("plot.svg", render_density_1d(t.samples, default_grid(world, ab, 61), curves, title));
        } else if (world.dim() == 2) {
            s.write("plot.svg",
                    render_scatter_2d(t.samples, tilted_density_on_grid(world, gd, ab, default_grid(world, ab, 96)), title));
        } else {
            throw ConfigError("plot: density plots support dim 1 or 2 only");
        }
        out << "wrote " << (s.out / "plot.svg").string() << "\n";
    }
    if (!dnp_path.empty()) {
        const auto rows = read_simple_csv(read_file(dnp_path));
        if (rows.empty() || rows[0].size() != 5 || rows[0][0] != "seed")
            throw ConfigError("plot: dnp csv must have header seed,n_star,compliance_cfg,compliance_dns,compliance_dnp");
        double sums[3] = {0, 0, 0};
        for (std::size_t r = 1; r < rows.size(); ++r)
            for (int k = 0; k < 3; ++k) sums[k] += std::stod(rows[r].at(static_cast<std::size_t>(k + 2)));
        const double n = std::max<double>(1.0, static_cast<double>(rows.size() - 1));
        const std::vector<Bar> bars{{"cfg", sums[0] / n}, {"dns", sums[1] / n}, {"dnp", sums[2] / n}};
        s.write("compliance.svg", render_bar_chart(bars, "mean compliance per mode"));
        out << "wrote " << (s.out / "compliance.svg").string() << "\n";
    }
    if (samples_path.empty() && dnp_path.empty()) throw ConfigError("plot: pass --samples and/or --dnp");
    s.finish();
    return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"dnpg: guided diffusion sampling on analytic Gaussian-mixture worlds"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    std::uint64_t seed_value = 0;
    app.add_option("--config", g.config, "Experiment config (JSON)");
    auto* seed_opt = app.add_option("--seed", seed_value, "Master seed (overrides the config)");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();

    auto* world_cmd = app.add_subcommand("world", "World specification tools");
    world_cmd->require_subcommand(1);
    auto* validate_cmd = world_cmd->add_subcommand("validate", "Validate a world file or the config's world");
    std::string world_file;
    validate_cmd->add_option("--world", world_file, "World JSON file (defaults to the config's world)");

    auto* train_cmd = app.add_subcommand("train", "Train the denoiser; writes denoiser.ckpt and loss.csv");
    auto* sample_cmd = app.add_subcommand("sample", "Sample with the configured guidance; writes samples.csv");
    auto* dns_cmd = app.add_subcommand("dns", "Diffusion-negative samples for dnp.positive; writes dns_samples.csv");
    auto* dnp_cmd = app.add_subcommand("dnp", "Full DNP pipeline per master seed; writes dnp.csv");
    auto* eval_cmd = app.add_subcommand("eval", "Metrics for a samples CSV; writes metrics.csv and summary.txt");
    std::string samples_path, dnp_path;
    eval_cmd->add_option("--samples", samples_path, "Samples CSV")->required();
    auto* plot_cmd = app.add_subcommand("plot", "SVG plots of samples and/or DNP compliance");
    plot_cmd->add_option("--samples", samples_path, "Samples CSV");
    plot_cmd->add_option("--dnp", dnp_path, "dnp.csv from the dnp subcommand");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }
    if (*seed_opt) g.seed = seed_value;

    try {
        if (validate_cmd->parsed()) return cmd_world_validate(g, world_file, out);
        if (train_cmd->parsed()) return cmd_train(g, out);
        if (sample_cmd->parsed()) return cmd_sample(g, out);
        if (dns_cmd->parsed()) return cmd_dns(g, out);
        if (dnp_cmd->parsed()) return cmd_dnp(g, out);
        if (eval_cmd->parsed()) return cmd_eval(g, samples_path, out);
        if (plot_cmd->parsed()) return cmd_plot(g, samples_path, dnp_path, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kNumericalError;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return kIoError;
    } catch (const fs::filesystem_error& e) {
        err << "i/o error: " << e.what() << "\n";
        return kIoError;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::out_of_range& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    }
    return kConfigError;
}

} // namespace dnpg::cli
