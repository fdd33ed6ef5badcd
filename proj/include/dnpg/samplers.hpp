#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "dnpg/denoiser.hpp"
#include "dnpg/guidance.hpp"
#include "dnpg/rng.hpp"
#include "dnpg/schedule.hpp"
#include "dnpg/world.hpp"

namespace dnpg {

/// Provider of per-condition noise estimates eps(z_t; t, c).
class NoiseSource {
public:
    virtual ~NoiseSource() = default;
    virtual int dim() const = 0;
    virtual int condition_count() const = 0;
    virtual Vec eps(const Vec& z_t, int t, int c) const = 0;
};

/// Exact eps from the analytic world: -sqrt(1 - alpha_bar_t) * score.
class OracleNoiseSource final : public NoiseSource {
public:
    OracleNoiseSource(GmmWorld world, NoiseSchedule schedule)
        : world_(std::move(world)), schedule_(std::move(schedule)) {}

    int dim() const override { return world_.dim(); }
    int condition_count() const override { return world_.condition_count(); }
    Vec eps(const Vec& z_t, int t, int c) const override;

private:
    GmmWorld world_;
    NoiseSchedule schedule_;
};

class DenoiserNoiseSource final : public NoiseSource {
public:
    explicit DenoiserNoiseSource(DenoiserParams params) : params_(std::move(params)) {}

    int dim() const override { return params_.arch.dim; }
    int condition_count() const override { return params_.arch.conditions; }
    Vec eps(const Vec& z_t, int t, int c) const override { return eps_theta(params_, z_t, t, c); }

private:
    DenoiserParams params_;
};

/// Composes the configured rule, querying only the conditions it needs
/// (cfg/dns: phi, p; negprompt: phi, p, n; practitioner: n, p).
Vec guided_eps(const NoiseSource& source, const Vec& z_t, int t, const GuidanceConfig& guidance);

enum class SamplerKind { Ddpm, Ddim, Langevin };

struct LangevinConfig {
    int t_fix = 1;          ///< noise level of the target; 0 means clean data
    double step_size = 0.0; ///< 0 selects 1e-3 * smallest component variance at t_fix
    int steps = 100000;     ///< total iterations, burn-in included
    int burn_in = 1000;
    int thin = 1;

    void validate() const;
};

struct SamplerConfig {
    SamplerKind kind = SamplerKind::Ddpm;
    double eta = 0.0;     ///< DDIM stochasticity in [0, 1]
    int ddim_steps = 50;
    bool record_trajectory = false;
    LangevinConfig langevin;

    void validate() const;
};

/// Ancestral update. Adds sqrt(beta_tilde_t) xi for t > 1 with
/// beta_tilde_t = (1 - ab_{t-1}) / (1 - ab_t) beta_t; t = 1 is deterministic.
Vec ddpm_step(const Vec& z_t, const Vec& eps_hat, int t, const NoiseSchedule& schedule, Rng& rng);

/// DDIM update from t to t_prev < t (t_prev = 0 lands on clean data).
Vec ddim_step(const Vec& z_t, const Vec& eps_hat, int t, int t_prev, const NoiseSchedule& schedule, double eta,
              Rng& rng);

/// Descending DDIM time indices round(k T / N), k = N..1, duplicates removed.
std::vector<int> ddim_timesteps(int T, int steps);

struct ReverseResult {
    Vec z0;
    std::vector<Vec> trajectory; ///< z_T first, z_0 last; empty unless recorded
};

/// Full guided reverse chain from z_T ~ N(0, I). Pure function of its arguments.
ReverseResult run_reverse(const NoiseSource& source, const GuidanceConfig& guidance, const NoiseSchedule& schedule,
                          const SamplerConfig& sampler, std::uint64_t seed);

/// Independent chains; chain i uses derive_seed(master_seed, i). Output order
/// is chain order regardless of `threads` (0 = hardware concurrency).
std::vector<Vec> sample_chains(const NoiseSource& source, const GuidanceConfig& guidance,
                               const NoiseSchedule& schedule, const SamplerConfig& sampler,
                               std::uint64_t master_seed, std::size_t count, unsigned threads = 0);

using ScoreField = std::function<Vec(const Vec&)>;

/// Unadjusted Langevin: z <- z + (step/2) score(z) + sqrt(step) xi. Returns the
/// post-burn-in iterates (every `thin`-th). Throws NumericalError when
/// ||z|| exceeds `divergence_radius` or turns non-finite.
std::vector<Vec> langevin_sample(const ScoreField& score_field, const Vec& init, const LangevinConfig& config,
                                 Rng& rng, double divergence_radius);

/// One Langevin chain per init; chain i uses derive_seed(master_seed, i).
std::vector<Vec> langevin_chains(const ScoreField& score_field, const std::vector<Vec>& inits,
                                 const LangevinConfig& config, std::uint64_t master_seed, double divergence_radius,
                                 unsigned threads = 0);

/// 1e-3 times the smallest noised component variance at alpha_bar.
double default_langevin_step(const GmmWorld& world, double alpha_bar);

/// Runs fn(i) for i in [0, count) over `threads` workers with static
/// contiguous partitioning.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

} // namespace dnpg
