#include "dnpg/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "dnpg/errors.hpp"

namespace dnpg {

Vec OracleNoiseSource::eps(const Vec& z_t, int t, int c) const {
    return eps_from_score(score(world_, z_t, t, c, schedule_), t, schedule_);
}

Vec guided_eps(const NoiseSource& source, const Vec& z_t, int t, const GuidanceConfig& g) {
    // At s = 0 every rule returns its base term unchanged, so the other queries can be skipped.
    if (g.scale == 0.0)
        return source.eps(z_t, t, g.mode == GuidanceMode::NegPromptPractitioner ? *g.negative : kPhi);
    switch (g.mode) {
    case GuidanceMode::Cfg:
        return cfg_compose(source.eps(z_t, t, kPhi), source.eps(z_t, t, g.positive), g.scale);
    case GuidanceMode::NegPrompt:
        return negprompt_compose(source.eps(z_t, t, kPhi), source.eps(z_t, t, g.positive),
                                 source.eps(z_t, t, *g.negative), g.scale);
    case GuidanceMode::NegPromptPractitioner:
        return negprompt_practitioner_compose(source.eps(z_t, t, *g.negative), source.eps(z_t, t, g.positive),
                                              g.scale);
    case GuidanceMode::Dns:
        return dns_compose(source.eps(z_t, t, kPhi), source.eps(z_t, t, g.positive), g.scale);
    }
    throw std::logic_error("unreachable guidance mode");
}

void LangevinConfig::validate() const {
    if (t_fix < 0) throw ConfigError("sampler.langevin.t_fix: must be >= 0");
    if (!(step_size >= 0.0)) throw ConfigError("sampler.langevin.step_size: must be positive (or 0 for default)");
    if (steps < 1) throw ConfigError("sampler.langevin.steps: must be positive");
    if (burn_in < 1) throw ConfigError("sampler.langevin.burn_in: must be positive");
    if (burn_in >= steps) throw ConfigError("sampler.langevin.burn_in: must be smaller than steps");
    if (thin < 1) throw ConfigError("sampler.langevin.thin: must be >= 1");
}

void SamplerConfig::validate() const {
    if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("sampler.eta: must be in [0, 1]");
    if (ddim_steps < 1) throw ConfigError("sampler.ddim_steps: must be >= 1");
    if (kind == SamplerKind::Langevin) langevin.validate();
}

Vec ddpm_step(const Vec& z_t, const Vec& eps_hat, int t, const NoiseSchedule& schedule, Rng& rng) {
    if (t < 1 || t > schedule.steps()) throw std::out_of_range("ddpm_step: t outside [1, T]");
    if (z_t.size() != eps_hat.size()) throw std::invalid_argument("ddpm_step: dimension mismatch");
    const double beta = schedule.beta(t);
    const double ab = schedule.alpha_bar(t);
    Vec mean = (z_t - (beta / std::sqrt(1.0 - ab)) * eps_hat) / std::sqrt(1.0 - beta);
    if (t == 1) return mean;
    const double var = (1.0 - schedule.alpha_bar(t - 1)) / (1.0 - ab) * beta;
    return mean + std::sqrt(var) * rng.normal_vector(z_t.size());
}

Vec ddim_step(const Vec& z_t, const Vec& eps_hat, int t, int t_prev, const NoiseSchedule& schedule, double eta,
              Rng& rng) {
    if (t < 1 || t > schedule.steps()) throw std::out_of_range("ddim_step: t outside [1, T]");
    if (t_prev < 0 || t_prev >= t) throw std::out_of_range("ddim_step: need 0 <= t_prev < t");
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("ddim_step: eta outside [0, 1]");
    if (z_t.size() != eps_hat.size()) throw std::invalid_argument("ddim_step: dimension mismatch");
    const double ab = schedule.alpha_bar(t);
    const double ab_prev = schedule.alpha_bar(t_prev);
    const double sigma =
        eta == 0.0 ? 0.0 : eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab) * (1.0 - ab / ab_prev));
    if (ab_prev == ab && sigma == 0.0) return z_t;
    const Vec x0 = (z_t - std::sqrt(1.0 - ab) * eps_hat) / std::sqrt(ab);
    Vec out = std::sqrt(ab_prev) * x0 + std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma * sigma)) * eps_hat;
    if (sigma > 0.0) out += sigma * rng.normal_vector(z_t.size());
    return out;
}

std::vector<int> ddim_timesteps(int T, int steps) {
    if (T < 1 || steps < 1) throw std::invalid_argument("ddim_timesteps: need T, steps >= 1");
    steps = std::min(steps, T);
    std::vector<int> ts;
    for (int k = steps; k >= 1; --k) {
        const int t = static_cast<int>(std::lround(static_cast<double>(k) * T / steps));
        if (ts.empty() || ts.back() != t) ts.push_back(t);
    }
    return ts;
}

ReverseResult run_reverse(const NoiseSource& source, const GuidanceConfig& guidance, const NoiseSchedule& schedule,
                          const SamplerConfig& sampler, std::uint64_t seed) {
    guidance.validate();
    sampler.validate();
    if (sampler.kind == SamplerKind::Langevin)
        throw std::invalid_argument("run_reverse: Langevin is a fixed-level sampler, use langevin_sample");
    Rng rng(seed);
    ReverseResult res;
    Vec z = rng.normal_vector(source.dim());
    if (sampler.record_trajectory) res.trajectory.push_back(z);
    if (sampler.kind == SamplerKind::Ddpm) {
        for (int t = schedule.steps(); t >= 1; --t) {
            z = ddpm_step(z, guided_eps(source, z, t, guidance), t, schedule, rng);
            if (sampler.record_trajectory) res.trajectory.push_back(z);
        }
    } else {
        const std::vector<int> ts = ddim_timesteps(schedule.steps(), sampler.ddim_steps);
        for (std::size_t k = 0; k < ts.size(); ++k) {
            const int t_prev = k + 1 < ts.size() ? ts[k + 1] : 0;
            z = ddim_step(z, guided_eps(source, z, ts[k], guidance), ts[k], t_prev, schedule, sampler.eta, rng);
            if (sampler.record_trajectory) res.trajectory.push_back(z);
        }
    }
    if (!z.allFinite()) throw NumericalError("reverse chain produced a non-finite sample");
    res.z0 = std::move(z);
    return res;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    const std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                const std::size_t end = std::min(count, (w + 1) * chunk);
                for (std::size_t i = w * chunk; i < end; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<Vec> sample_chains(const NoiseSource& source, const GuidanceConfig& guidance,
                               const NoiseSchedule& schedule, const SamplerConfig& sampler,
                               std::uint64_t master_seed, std::size_t count, unsigned threads) {
    SamplerConfig quiet = sampler;
    quiet.record_trajectory = false;
    std::vector<Vec> out(count);
    parallel_for(count, threads, [&](std::size_t i) {
        out[i] = run_reverse(source, guidance, schedule, quiet, derive_seed(master_seed, i)).z0;
    });
    return out;
}

std::vector<Vec> langevin_sample(const ScoreField& score_field, const Vec& init, const LangevinConfig& config,
                                 Rng& rng, double divergence_radius) {
    config.validate();
    if (!(config.step_size > 0.0)) throw std::invalid_argument("langevin_sample: step size must be resolved (> 0)");
    const double half = 0.5 * config.step_size;
    const double root = std::sqrt(config.step_size);
    std::vector<Vec> kept;
    kept.reserve(static_cast<std::size_t>((config.steps - config.burn_in) / config.thin + 1));
    Vec z = init;
    for (int n = 0; n < config.steps; ++n) {
        z += half * score_field(z) + root * rng.normal_vector(z.size());
        const double r = z.norm();
        if (!std::isfinite(r) || r > divergence_radius)
            throw NumericalError("Langevin chain diverged at iteration " + std::to_string(n) +
                                 " (|z| = " + std::to_string(r) + ")");
        if (n >= config.burn_in && (n - config.burn_in) % config.thin == 0) kept.push_back(z);
    }
    return kept;
}

std::vector<Vec> langevin_chains(const ScoreField& score_field, const std::vector<Vec>& inits,
                                 const LangevinConfig& config, std::uint64_t master_seed, double divergence_radius,
                                 unsigned threads) {
    std::vector<std::vector<Vec>> per(inits.size());
    parallel_for(inits.size(), threads, [&](std::size_t i) {
        Rng rng(derive_seed(master_seed, i));
        per[i] = langevin_sample(score_field, inits[i], config, rng, divergence_radius);
    });
    std::vector<Vec> out;
    for (auto& chain : per)
        for (auto& z : chain) out.push_back(std::move(z));
    return out;
}

double default_langevin_step(const GmmWorld& world, double alpha_bar) {
    double vmin = std::numeric_limits<double>::infinity();
    for (const auto& cond : world.conditions())
        for (const auto& comp : cond.components)
            for (Eigen::Index i = 0; i < comp.var.size(); ++i)
                vmin = std::min(vmin, alpha_bar * comp.var[i] + 1.0 - alpha_bar);
    return 1e-3 * vmin;
}

} // namespace dnpg
