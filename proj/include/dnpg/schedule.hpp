#pragma once

#include <vector>

#include <Eigen/Core>

namespace dnpg {

using Vec = Eigen::VectorXd;

/// Variance-preserving forward process on the time grid t = 1..T.
///
/// Storage is 0-based (betas_[t - 1] is beta_t). t = 0 denotes clean data and
/// has alpha_bar(0) == 1 by convention. Immutable after construction.
class NoiseSchedule {
public:
    /// Takes beta_1..beta_T; throws std::invalid_argument unless 0 < beta < 1.
    explicit NoiseSchedule(std::vector<double> betas);

    int steps() const { return static_cast<int>(betas_.size()); }

    double beta(int t) const;
    /// alpha_bar(0) == 1; alpha_bar(t) = prod_{s<=t} (1 - beta_s).
    double alpha_bar(int t) const;

    const std::vector<double>& betas() const { return betas_; }
    const std::vector<double>& alpha_bars() const { return alpha_bars_; }

private:
    std::vector<double> betas_;
    std::vector<double> alpha_bars_;
};

/// Betas linearly interpolated from beta_start to beta_end inclusive.
NoiseSchedule make_linear_schedule(int steps, double beta_start, double beta_end);

/// sqrt(alpha_bar) z0 + sqrt(1 - alpha_bar) eps, for an explicit alpha_bar in [0, 1].
Vec noise_to_level(const Vec& z0, double alpha_bar, const Vec& eps);

/// z_t for 1 <= t <= T.
Vec forward_noise(const Vec& z0, int t, const Vec& eps, const NoiseSchedule& schedule);

} // namespace dnpg
