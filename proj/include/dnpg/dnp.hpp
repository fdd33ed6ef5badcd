#pragma once

#include <cstdint>
#include <vector>

#include "dnpg/guidance.hpp"
#include "dnpg/samplers.hpp"
#include "dnpg/world.hpp"

namespace dnpg {

struct CaptionerPolicy {
    /// Let the inferred negative equal p (diagnostics only).
    bool allow_p = false;
};

struct DnpRunConfig {
    int positive = 1;
    double s_dns = 3.0;
    GuidanceMode final_mode = GuidanceMode::NegPrompt;
    double s_final = 3.0;
    SamplerConfig sampler;
    CaptionerPolicy captioner;
    std::uint64_t seed = 0;

    void validate(const GmmWorld& world) const;
};

struct DnpResult {
    Vec negative_sample;  ///< DNS output
    int negative_condition = 0;
    Vec final_sample;     ///< (p, n*) prompt pair
    Vec baseline_sample;  ///< CFG on p alone, same seed stream as the final stage
    double compliance_baseline = 0.0;
    double compliance_dns = 0.0;
    double compliance_final = 0.0;
};

/// Reverse chain in dns mode for condition p; returns its z_0.
Vec dns_sample(const NoiseSource& source, int p, const NoiseSchedule& schedule, const SamplerConfig& sampler,
               double s_dns, std::uint64_t seed);

/// Bayes classification of z at t = 0 over named conditions other than p
/// (p allowed under policy.allow_p); ties go to the lowest id. Throws
/// ConfigError when no admissible condition exists.
int infer_negative_condition(const GmmWorld& world, const Vec& z, int p, const CaptionerPolicy& policy = {});

/// DNS sample -> inferred negative -> final generation with (p, n*).
/// Stage seeds: DNS derive_seed(seed, 0); final and baseline derive_seed(seed, 1).
DnpResult dnp_generate(const NoiseSource& source, const GmmWorld& world, const NoiseSchedule& schedule,
                       const DnpRunConfig& config);

/// Mean posterior p(p | z) at t = 0 over the samples.
double compliance(const GmmWorld& world, const std::vector<Vec>& samples, int p);

} // namespace dnpg
