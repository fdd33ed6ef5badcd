#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "dnpg/grid.hpp"
#include "dnpg/rng.hpp"
#include "dnpg/schedule.hpp"

namespace dnpg {

/// Condition id of the empty prompt. Its density is the prior-weighted marginal.
inline constexpr int kPhi = 0;

struct Component {
    double weight = 1.0;
    Vec mean;
    Vec var; ///< diagonal covariance
};

struct Condition {
    std::string label;
    double prior = 0.0;
    std::vector<Component> components;
};

/// Condition-indexed diagonal Gaussian mixtures. Named conditions carry ids
/// 1..C-1 (stored at index id-1); id 0 is phi and owns no mixture.
class GmmWorld {
public:
    /// Validates weights, priors and variances; throws ConfigError.
    GmmWorld(int dim, std::vector<Condition> conditions);

    int dim() const { return dim_; }
    /// C, counting phi.
    int condition_count() const { return static_cast<int>(conditions_.size()) + 1; }
    const Condition& condition(int c) const;
    std::string label(int c) const;
    /// Throws std::invalid_argument for ids outside [0, C) (or [1, C) when !allow_phi).
    void check_condition(int c, bool allow_phi = true) const;

    const std::vector<Condition>& conditions() const { return conditions_; }

private:
    int dim_;
    std::vector<Condition> conditions_;
};

// Every density below is the pushforward through forward noising at level
// alpha_bar: component k becomes N(sqrt(ab) mu_k, ab Sigma_k + (1 - ab) I).
// Overloads taking (t, schedule) use alpha_bar(t), with alpha_bar(0) = 1.

double log_noised_density(const GmmWorld& world, const Vec& z, double alpha_bar, int c);
double log_noised_density(const GmmWorld& world, const Vec& z, int t, int c, const NoiseSchedule& schedule);
double noised_density(const GmmWorld& world, const Vec& z, int t, int c, const NoiseSchedule& schedule);

/// Exact gradient of log_noised_density via component responsibilities.
/// Throws NumericalError if the density underflows even in log space.
Vec score(const GmmWorld& world, const Vec& z, double alpha_bar, int c);
Vec score(const GmmWorld& world, const Vec& z, int t, int c, const NoiseSchedule& schedule);

/// eps = -sqrt(1 - alpha_bar_t) * score.
Vec eps_from_score(const Vec& score_vec, int t, const NoiseSchedule& schedule);
Vec score_from_eps(const Vec& eps, int t, const NoiseSchedule& schedule);

/// Posterior over named conditions; entry c holds p(c | z), entry 0 (phi) is 0.
std::vector<double> posteriors(const GmmWorld& world, const Vec& z, double alpha_bar);
double posterior(const GmmWorld& world, const Vec& z, double alpha_bar, int c);
double posterior(const GmmWorld& world, const Vec& z, int t, int c, const NoiseSchedule& schedule);
/// log p(c | z); keeps precision where the posterior itself would underflow.
double log_posterior(const GmmWorld& world, const Vec& z, double alpha_bar, int c);

/// Draw z0 ~ p(z | c); c = phi draws a condition from the prior first.
Vec sample_clean(const GmmWorld& world, int c, Rng& rng);

/// Mean of the clean distribution of condition c (phi: the marginal).
Vec clean_mean(const GmmWorld& world, int c);

/// Box [min mode - 8 sd_max, max mode + 8 sd_max] per axis at level alpha_bar.
Grid default_grid(const GmmWorld& world, double alpha_bar, int points_per_axis = 1024);

/// Mass of the noised marginal that falls inside the grid box.
double marginal_mass_inside(const GmmWorld& world, const Grid& grid, double alpha_bar);

} // namespace dnpg
