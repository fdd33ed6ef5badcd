#include "dnpg/guidance.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dnpg/errors.hpp"

namespace dnpg {

namespace {

Vec shift_by_difference(const Vec& base, double s, const Vec& a, const Vec& b) {
    if (base.size() != a.size() || a.size() != b.size())
        throw std::invalid_argument("compose: dimension mismatch");
    Vec out(base.size());
    for (Eigen::Index i = 0; i < base.size(); ++i) out[i] = base[i] + s * (a[i] - b[i]);
    return out;
}

bool needs_negative(GuidanceMode m) {
    return m == GuidanceMode::NegPrompt || m == GuidanceMode::NegPromptPractitioner;
}

void require_positive_density(double log_value, const char* what) {
    if (!std::isfinite(log_value)) throw NumericalError(std::string(what) + ": zero density in ratio");
}

} // namespace

std::string_view to_string(GuidanceMode mode) {
    switch (mode) {
    case GuidanceMode::Cfg: return "cfg";
    case GuidanceMode::NegPrompt: return "negprompt";
    case GuidanceMode::NegPromptPractitioner: return "negprompt_practitioner";
    case GuidanceMode::Dns: return "dns";
    }
    return "?";
}

GuidanceMode parse_guidance_mode(std::string_view name) {
    if (name == "cfg") return GuidanceMode::Cfg;
    if (name == "negprompt") return GuidanceMode::NegPrompt;
    if (name == "negprompt_practitioner") return GuidanceMode::NegPromptPractitioner;
    if (name == "dns") return GuidanceMode::Dns;
    throw ConfigError("unknown guidance mode '" + std::string(name) + "'");
}

void GuidanceConfig::validate() const {
    if (!(scale >= 0.0) || !std::isfinite(scale)) throw ConfigError("guidance.scale: must be >= 0");
    if (needs_negative(mode) && !negative)
        throw ConfigError("guidance.negative: required for mode " + std::string(to_string(mode)));
    if (!needs_negative(mode) && negative)
        throw ConfigError("guidance.negative: not allowed for mode " + std::string(to_string(mode)));
}

void GuidanceConfig::validate(const GmmWorld& world) const {
    validate();
    if (positive < 0 || positive >= world.condition_count())
        throw ConfigError("guidance.positive: invalid condition id " + std::to_string(positive));
    if (negative && (*negative < 0 || *negative >= world.condition_count()))
        throw ConfigError("guidance.negative: invalid condition id " + std::to_string(*negative));
}

Vec cfg_compose(const Vec& eps_phi, const Vec& eps_p, double s) {
    return shift_by_difference(eps_phi, s, eps_p, eps_phi);
}

Vec negprompt_compose(const Vec& eps_phi, const Vec& eps_p, const Vec& eps_n, double s) {
    return shift_by_difference(eps_phi, s, eps_p, eps_n);
}

Vec negprompt_practitioner_compose(const Vec& eps_n, const Vec& eps_p, double s) {
    return shift_by_difference(eps_n, s, eps_p, eps_n);
}

Vec dns_compose(const Vec& eps_phi, const Vec& eps_p, double s) {
    return shift_by_difference(eps_phi, s, eps_phi, eps_p);
}

Vec optimal_negative_noise(const Vec& eps_p, double K) {
    if (!(K > 0.0)) throw std::invalid_argument("optimal_negative_noise: K must be positive");
    const double norm2 = eps_p.squaredNorm();
    if (!(norm2 > 0.0)) throw std::invalid_argument("optimal_negative_noise: eps_p is zero, direction undefined");
    if (K == norm2) return -eps_p;
    return (-std::sqrt(K) / std::sqrt(norm2)) * eps_p;
}

double odds_ratio(const GmmWorld& world, const Vec& z, double alpha_bar, int p, int n) {
    world.check_condition(p, false);
    world.check_condition(n, false);
    if (p == n) return 1.0;
    const double lp = log_posterior(world, z, alpha_bar, p);
    const double ln = log_posterior(world, z, alpha_bar, n);
    if (!std::isfinite(ln)) throw NumericalError("odds_ratio: zero denominator");
    return std::exp(lp - ln);
}

double odds_ratio(const GmmWorld& world, const Vec& z, int t, int p, int n, const NoiseSchedule& schedule) {
    return odds_ratio(world, z, schedule.alpha_bar(t), p, n);
}

double log_guidance_factor(const GmmWorld& world, const Vec& z, double alpha_bar, const GuidanceConfig& config) {
    config.validate(world);
    const double lp = log_noised_density(world, z, alpha_bar, config.positive);
    switch (config.mode) {
    case GuidanceMode::Cfg: {
        const double lm = log_noised_density(world, z, alpha_bar, kPhi);
        require_positive_density(lm, "guidance_factor");
        return lp - lm;
    }
    case GuidanceMode::NegPrompt:
    case GuidanceMode::NegPromptPractitioner: {
        const double ln = log_noised_density(world, z, alpha_bar, *config.negative);
        require_positive_density(ln, "guidance_factor");
        return lp - ln;
    }
    case GuidanceMode::Dns: {
        require_positive_density(lp, "guidance_factor");
        return log_noised_density(world, z, alpha_bar, kPhi) - lp;
    }
    }
    throw std::logic_error("unreachable guidance mode");
}

double guidance_factor(const GmmWorld& world, const Vec& z, int t, const GuidanceConfig& config,
                       const NoiseSchedule& schedule) {
    return std::exp(log_guidance_factor(world, z, schedule.alpha_bar(t), config));
}

double log_tilted_unnormalized(const GmmWorld& world, const Vec& z, double alpha_bar, const GuidanceConfig& config) {
    config.validate(world);
    const int base = config.mode == GuidanceMode::NegPromptPractitioner ? *config.negative : kPhi;
    const double lb = log_noised_density(world, z, alpha_bar, base);
    if (config.scale == 0.0) return lb;
    return lb + config.scale * log_guidance_factor(world, z, alpha_bar, config);
}

Vec composed_score(const GmmWorld& world, const Vec& z, double alpha_bar, const GuidanceConfig& config) {
    config.validate(world);
    const double s = config.scale;
    switch (config.mode) {
    case GuidanceMode::Cfg:
        return (1.0 - s) * score(world, z, alpha_bar, kPhi) + s * score(world, z, alpha_bar, config.positive);
    case GuidanceMode::NegPrompt:
        return score(world, z, alpha_bar, kPhi) +
               s * (score(world, z, alpha_bar, config.positive) - score(world, z, alpha_bar, *config.negative));
    case GuidanceMode::NegPromptPractitioner: {
        const Vec sn = score(world, z, alpha_bar, *config.negative);
        return sn + s * (score(world, z, alpha_bar, config.positive) - sn);
    }
    case GuidanceMode::Dns:
        return (1.0 + s) * score(world, z, alpha_bar, kPhi) - s * score(world, z, alpha_bar, config.positive);
    }
    throw std::logic_error("unreachable guidance mode");
}

Vec composed_score(const GmmWorld& world, const Vec& z, int t, const GuidanceConfig& config,
                   const NoiseSchedule& schedule) {
    return composed_score(world, z, schedule.alpha_bar(t), config);
}

namespace {

DensityTable normalize_log_table(const Grid& grid, std::vector<double> logv) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : logv) mx = std::max(mx, v);
    if (!std::isfinite(mx)) throw NumericalError("density table: no finite values on grid");
    DensityTable table{grid, std::move(logv)};
    for (double& v : table.density) v = std::exp(v - mx);
    const double z = table.integral();
    if (!(z > 0.0) || !std::isfinite(z)) throw NumericalError("density table: normalizer not finite");
    for (double& v : table.density) v /= z;
    return table;
}

void check_grid(const GmmWorld& world, const Grid& grid, double alpha_bar) {
    if (world.dim() > 2) throw std::invalid_argument("quadrature unsupported for dim > 2");
    if (grid.dim() != world.dim()) throw std::invalid_argument("grid/world dimension mismatch");
    if (marginal_mass_inside(world, grid, alpha_bar) < 0.999)
        throw std::invalid_argument("grid covers less than 99.9% of the base density mass");
}

} // namespace

DensityTable tilted_density_on_grid(const GmmWorld& world, const GuidanceConfig& config, double alpha_bar,
                                    const Grid& grid) {
    config.validate(world);
    check_grid(world, grid, alpha_bar);
    std::vector<double> logv(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        logv[i] = log_tilted_unnormalized(world, grid.point(i), alpha_bar, config);
    return normalize_log_table(grid, std::move(logv));
}

DensityTable tilted_density_on_grid(const GmmWorld& world, const GuidanceConfig& config, int t, const Grid& grid,
                                    const NoiseSchedule& schedule) {
    return tilted_density_on_grid(world, config, schedule.alpha_bar(t), grid);
}

DensityTable density_on_grid(const GmmWorld& world, int c, double alpha_bar, const Grid& grid) {
    check_grid(world, grid, alpha_bar);
    std::vector<double> logv(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) logv[i] = log_noised_density(world, grid.point(i), alpha_bar, c);
    return normalize_log_table(grid, std::move(logv));
}

} // namespace dnpg
