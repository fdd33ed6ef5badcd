#pragma once

#include <cmath>
#include <functional>
#include <numbers>

#include "dnpg/dnp.hpp"
#include "dnpg/errors.hpp"
#include "dnpg/eval.hpp"
#include "dnpg/guidance.hpp"
#include "dnpg/samplers.hpp"
#include "dnpg/world.hpp"

namespace support {

using dnpg::Vec;

inline Vec v1(double x) { return Vec::Constant(1, x); }

inline Vec v2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

inline dnpg::NoiseSchedule standard_schedule() { return dnpg::make_linear_schedule(1000, 1e-4, 0.02); }

inline dnpg::Component gaussian(const Vec& mean, double var, double weight = 1.0) {
    return {weight, mean, Vec::Constant(mean.size(), var)};
}

/// Single condition N(mean * 1, var * I).
inline dnpg::GmmWorld gaussian_world(int dim, double mean, double var) {
    return dnpg::GmmWorld(dim, {{"only", 1.0, {gaussian(Vec::Constant(dim, mean), var)}}});
}

/// p = N(-m, sd^2), q = N(m, sd^2), equal priors.
inline dnpg::GmmWorld two_condition_1d(double m = 1.0, double sd = 0.6) {
    return dnpg::GmmWorld(1, {{"p", 0.5, {gaussian(v1(-m), sd * sd)}}, {"q", 0.5, {gaussian(v1(m), sd * sd)}}});
}

inline dnpg::GmmWorld separated_1d() { return two_condition_1d(3.0, 0.5); }

/// p overlaps a more probable distractor q.
inline dnpg::GmmWorld distractor_1d() {
    return dnpg::GmmWorld(1, {{"p", 0.3, {gaussian(v1(0.0), 1.0)}}, {"q", 0.7, {gaussian(v1(1.0), 0.25)}}});
}

/// p has two modes; q and r each sit near one flank.
inline dnpg::GmmWorld three_condition_2d() {
    return dnpg::GmmWorld(2, {{"p", 0.5, {gaussian(v2(-2, 0), 0.3, 0.5), gaussian(v2(0, 2), 0.3, 0.5)}},
                              {"q", 0.3, {gaussian(v2(2, 0), 0.4)}},
                              {"r", 0.2, {gaussian(v2(0, -2), 0.4)}}});
}

inline dnpg::GmmWorld random_world(int dim, int conditions, int components, dnpg::Rng& rng) {
    std::vector<dnpg::Condition> conds;
    for (int c = 0; c < conditions; ++c) {
        dnpg::Condition cond{"c" + std::to_string(c + 1), 0.2 + rng.uniform(), {}};
        for (int k = 0; k < components; ++k) {
            Vec mean = 2.0 * rng.normal_vector(dim);
            Vec var(dim);
            for (int i = 0; i < dim; ++i) var[i] = 0.2 + rng.uniform();
            cond.components.push_back({0.3 + rng.uniform(), mean, var});
        }
        conds.push_back(std::move(cond));
    }
    double total = 0;
    for (auto& c : conds) total += c.prior;
    for (auto& c : conds) c.prior /= total;
    for (auto& c : conds) {
        double w = 0;
        for (auto& k : c.components) w += k.weight;
        for (auto& k : c.components) k.weight /= w;
    }
    return dnpg::GmmWorld(dim, std::move(conds));
}

/// Straight-line density of the noised world, written independently of the library (no log-sum-exp).
inline double naive_density(const dnpg::GmmWorld& world, const Vec& z, double ab, int c) {
    auto cond_density = [&](const dnpg::Condition& cond) {
        double sum = 0;
        for (const auto& k : cond.components) {
            double prod = k.weight;
            for (int i = 0; i < world.dim(); ++i) {
                const double var = ab * k.var[i] + (1 - ab);
                const double d = z[i] - std::sqrt(ab) * k.mean[i];
                prod *= std::exp(-0.5 * d * d / var) / std::sqrt(2 * std::numbers::pi * var);
            }
            sum += prod;
        }
        return sum;
    };
    if (c != dnpg::kPhi) return cond_density(world.condition(c));
    double sum = 0;
    for (const auto& cond : world.conditions()) sum += cond.prior * cond_density(cond);
    return sum;
}

/// Central finite-difference gradient.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& z, double h) {
    Vec g(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        Vec a = z, b = z;
        a[i] += h;
        b[i] -= h;
        g[i] = (f(a) - f(b)) / (2 * h);
    }
    return g;
}

inline double rel_err(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(1e-12, b.norm()); }

} // namespace support
