#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "dnpg/grid.hpp"
#include "dnpg/world.hpp"

namespace dnpg {

enum class GuidanceMode { Cfg, NegPrompt, NegPromptPractitioner, Dns };

/// Wire names: cfg, negprompt, negprompt_practitioner, dns.
std::string_view to_string(GuidanceMode mode);
GuidanceMode parse_guidance_mode(std::string_view name);

struct GuidanceConfig {
    GuidanceMode mode = GuidanceMode::Cfg;
    double scale = 0.0;
    int positive = 1;
    std::optional<int> negative;

    /// Negative prompt modes need `negative`; cfg and dns forbid it. Throws ConfigError.
    void validate() const;
    void validate(const GmmWorld& world) const;
};

// Noise-estimate composition. All four share one kernel, base + s * (a - b),
// so the reductions between them hold bit-for-bit.

/// eps_phi + s (eps_p - eps_phi)
Vec cfg_compose(const Vec& eps_phi, const Vec& eps_p, double s);
/// eps_phi + s (eps_p - eps_n)
Vec negprompt_compose(const Vec& eps_phi, const Vec& eps_p, const Vec& eps_n, double s);
/// eps_n + s (eps_p - eps_n)
Vec negprompt_practitioner_compose(const Vec& eps_n, const Vec& eps_p, double s);
/// eps_phi + s (eps_phi - eps_p)
Vec dns_compose(const Vec& eps_phi, const Vec& eps_p, double s);

/// Maximizer of ||eps_p - v|| over ||v||^2 = K: -sqrt(K) eps_p / ||eps_p||.
/// With K = ||eps_p||^2 the result is exactly -eps_p.
Vec optimal_negative_noise(const Vec& eps_p, double K);

/// p(p | z) / p(n | z) at level alpha_bar. Returns exactly 1 when p == n.
double odds_ratio(const GmmWorld& world, const Vec& z, double alpha_bar, int p, int n);
double odds_ratio(const GmmWorld& world, const Vec& z, int t, int p, int n, const NoiseSchedule& schedule);

/// log of the guidance factor:
///   cfg                      log p(z|p) - log p(z)
///   negprompt / practitioner log p(z|p) - log p(z|n)
///   dns                      log p(z)   - log p(z|p)
double log_guidance_factor(const GmmWorld& world, const Vec& z, double alpha_bar, const GuidanceConfig& config);
double guidance_factor(const GmmWorld& world, const Vec& z, int t, const GuidanceConfig& config,
                       const NoiseSchedule& schedule);

/// Unnormalized log of the tilted target base(z) * gamma(z)^s. The base is the
/// marginal except for the practitioner form, whose noise estimate
/// eps_n + s (eps_p - eps_n) integrates to p(z|n) * gamma_np^s.
double log_tilted_unnormalized(const GmmWorld& world, const Vec& z, double alpha_bar, const GuidanceConfig& config);

/// Gradient of log_tilted_unnormalized, assembled from analytic scores.
Vec composed_score(const GmmWorld& world, const Vec& z, double alpha_bar, const GuidanceConfig& config);
Vec composed_score(const GmmWorld& world, const Vec& z, int t, const GuidanceConfig& config,
                   const NoiseSchedule& schedule);

/// Tilted density evaluated on `grid` and normalized by trapezoid quadrature.
/// Requires dim <= 2 and a grid holding >= 99.9% of the base mass.
DensityTable tilted_density_on_grid(const GmmWorld& world, const GuidanceConfig& config, double alpha_bar,
                                    const Grid& grid);
DensityTable tilted_density_on_grid(const GmmWorld& world, const GuidanceConfig& config, int t, const Grid& grid,
                                    const NoiseSchedule& schedule);

/// Normalized noised density of condition c (phi: marginal) on `grid`.
DensityTable density_on_grid(const GmmWorld& world, int c, double alpha_bar, const Grid& grid);

} // namespace dnpg
