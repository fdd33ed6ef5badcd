#include "dnpg/dnp.hpp"

#include <stdexcept>
#include <string>

#include "dnpg/errors.hpp"

namespace dnpg {

void DnpRunConfig::validate(const GmmWorld& world) const {
    if (positive < 1 || positive >= world.condition_count())
        throw ConfigError("dnp.positive: must name a condition other than phi");
    if (!(s_dns >= 0.0)) throw ConfigError("dnp.s_dns: must be >= 0");
    if (!(s_final >= 0.0)) throw ConfigError("dnp.s_final: must be >= 0");
    if (final_mode != GuidanceMode::NegPrompt && final_mode != GuidanceMode::NegPromptPractitioner)
        throw ConfigError("dnp.final_mode: must be negprompt or negprompt_practitioner");
    sampler.validate();
    if (!captioner.allow_p && world.condition_count() < 3)
        throw ConfigError("dnp: captioner needs a named condition besides p (world has only one)");
}

Vec dns_sample(const NoiseSource& source, int p, const NoiseSchedule& schedule, const SamplerConfig& sampler,
               double s_dns, std::uint64_t seed) {
    if (p == kPhi) throw std::invalid_argument("dns_sample: p must not be phi");
    const GuidanceConfig g{GuidanceMode::Dns, s_dns, p, std::nullopt};
    return run_reverse(source, g, schedule, sampler, seed).z0;
}

int infer_negative_condition(const GmmWorld& world, const Vec& z, int p, const CaptionerPolicy& policy) {
    if (!z.allFinite()) throw std::invalid_argument("infer_negative_condition: non-finite sample");
    world.check_condition(p, false);
    const std::vector<double> post = posteriors(world, z, 1.0);
    int best = -1;
    for (int c = 1; c < world.condition_count(); ++c) {
        if (c == p && !policy.allow_p) continue;
        if (best < 0 || post[static_cast<std::size_t>(c)] > post[static_cast<std::size_t>(best)]) best = c;
    }
    if (best < 0) throw ConfigError("captioner: no admissible negative condition (world needs a condition besides p)");
    return best;
}

DnpResult dnp_generate(const NoiseSource& source, const GmmWorld& world, const NoiseSchedule& schedule,
                       const DnpRunConfig& config) {
    config.validate(world);
    SamplerConfig sampler = config.sampler;
    sampler.record_trajectory = false;
    const int p = config.positive;

    DnpResult r;
    r.negative_sample = dns_sample(source, p, schedule, sampler, config.s_dns, derive_seed(config.seed, 0));
    r.negative_condition = infer_negative_condition(world, r.negative_sample, p, config.captioner);

    const std::uint64_t final_seed = derive_seed(config.seed, 1);
    const GuidanceConfig final_g{config.final_mode, config.s_final, p, r.negative_condition};
    r.final_sample = run_reverse(source, final_g, schedule, sampler, final_seed).z0;
    const GuidanceConfig base_g{GuidanceMode::Cfg, config.s_final, p, std::nullopt};
    r.baseline_sample = run_reverse(source, base_g, schedule, sampler, final_seed).z0;

    r.compliance_baseline = posterior(world, r.baseline_sample, 1.0, p);
    r.compliance_dns = posterior(world, r.negative_sample, 1.0, p);
    r.compliance_final = posterior(world, r.final_sample, 1.0, p);
    return r;
}

double compliance(const GmmWorld& world, const std::vector<Vec>& samples, int p) {
    if (samples.empty()) throw std::invalid_argument("compliance: empty sample list");
    world.check_condition(p, false);
    double sum = 0.0;
    for (const auto& z : samples) sum += posterior(world, z, 1.0, p);
    return sum / static_cast<double>(samples.size());
}

} // namespace dnpg
