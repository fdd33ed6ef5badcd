#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "dnpg/denoiser.hpp"
#include "dnpg/dnp.hpp"
#include "dnpg/guidance.hpp"
#include "dnpg/samplers.hpp"
#include "dnpg/schedule.hpp"
#include "dnpg/world.hpp"

namespace dnpg {

struct ScheduleSettings {
    int steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;

    NoiseSchedule build() const { return make_linear_schedule(steps, beta_start, beta_end); }
};

struct RunSettings {
    std::string source = "oracle"; ///< "oracle" or "denoiser"
    std::string checkpoint;        ///< resolved against the config directory
    std::size_t samples = 1000;
    std::size_t seeds = 50;
    std::size_t langevin_chains = 100;
    unsigned threads = 0;
};

/// A fully validated experiment. Every field carries its default when the
/// file omits it; `canonical` is the materialized form that gets hashed.
struct ExperimentConfig {
    GmmWorld world;
    ScheduleSettings schedule;
    GuidanceConfig guidance;
    SamplerConfig sampler;
    DenoiserArch denoiser;
    std::uint64_t init_seed = 0;
    TrainConfig train;
    DnpRunConfig dnp;
    RunSettings run;
    std::uint64_t seed = 0;
    nlohmann::json canonical;
};

/// Parses a JSON world description:
///   {"dim": d, "conditions": [{"label": s, "prior": x,
///     "components": [{"weight": w, "mean": [...], "var": [...]}]}]}
GmmWorld parse_world(const nlohmann::json& j, const std::string& path = "world");
GmmWorld load_world(const std::filesystem::path& file);
nlohmann::json world_to_json(const GmmWorld& world);

/// Parses config text; relative world/checkpoint paths resolve against
/// `base_dir`. Unknown keys, parse errors (with line number) and invariant
/// violations (with field path) raise ConfigError.
ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = ".");
ExperimentConfig parse_config(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& config);

} // namespace dnpg
