#include "dnpg/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dnpg {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
    if (betas_.empty()) throw std::invalid_argument("noise schedule needs at least one step");
    alpha_bars_.reserve(betas_.size());
    double prod = 1.0;
    for (std::size_t i = 0; i < betas_.size(); ++i) {
        const double b = betas_[i];
        if (!(b > 0.0 && b < 1.0))
            throw std::invalid_argument("beta_" + std::to_string(i + 1) + " outside (0, 1)");
        prod *= 1.0 - b;
        alpha_bars_.push_back(prod);
    }
}

double NoiseSchedule::beta(int t) const {
    if (t < 1 || t > steps()) throw std::out_of_range("time index " + std::to_string(t) + " outside [1, T]");
    return betas_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t == 0) return 1.0;
    if (t < 0 || t > steps()) throw std::out_of_range("time index " + std::to_string(t) + " outside [0, T]");
    return alpha_bars_[static_cast<std::size_t>(t - 1)];
}

NoiseSchedule make_linear_schedule(int steps, double beta_start, double beta_end) {
    if (steps < 1) throw std::invalid_argument("T must be >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw std::invalid_argument("need 0 < beta_start <= beta_end < 1");
    std::vector<double> betas(static_cast<std::size_t>(steps));
    if (steps == 1) {
        betas[0] = beta_start;
    } else {
        const double span = beta_end - beta_start;
        for (int i = 0; i < steps; ++i)
            betas[static_cast<std::size_t>(i)] = beta_start + span * static_cast<double>(i) / (steps - 1);
    }
    return NoiseSchedule(std::move(betas));
}

Vec noise_to_level(const Vec& z0, double alpha_bar, const Vec& eps) {
    if (z0.size() != eps.size()) throw std::invalid_argument("forward_noise: dimension mismatch");
    if (!(alpha_bar >= 0.0 && alpha_bar <= 1.0)) throw std::invalid_argument("alpha_bar outside [0, 1]");
    if (alpha_bar == 1.0) return z0;
    if (alpha_bar == 0.0) return eps;
    return std::sqrt(alpha_bar) * z0 + std::sqrt(1.0 - alpha_bar) * eps;
}

Vec forward_noise(const Vec& z0, int t, const Vec& eps, const NoiseSchedule& schedule) {
    if (t < 0 || t > schedule.steps()) throw std::out_of_range("forward_noise: t outside [0, T]");
    return noise_to_level(z0, schedule.alpha_bar(t), eps);
}

} // namespace dnpg
