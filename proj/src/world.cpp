#include "dnpg/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dnpg/errors.hpp"

namespace dnpg {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void require_dim(const GmmWorld& w, const Vec& z) {
    if (z.size() != w.dim())
        throw std::invalid_argument("dimension mismatch: expected " + std::to_string(w.dim()) + ", got " +
                                    std::to_string(z.size()));
}

void require_level(double ab) {
    if (!(ab > 0.0 && ab <= 1.0)) throw std::invalid_argument("alpha_bar outside (0, 1]");
}

double log_gaussian(const Vec& z, const Component& comp, double ab) {
    const double sa = std::sqrt(ab);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double v = ab * comp.var[i] + (1.0 - ab);
        const double r = z[i] - sa * comp.mean[i];
        acc += std::log(v) + r * r / v;
    }
    return -0.5 * (acc + static_cast<double>(z.size()) * kLog2Pi);
}

// Visits every (log weight, component) pair of condition c; phi expands to
// prior-weighted components of all named conditions.
template <class F>
void for_each_component(const GmmWorld& w, int c, F&& f) {
    if (c == kPhi) {
        for (const auto& cond : w.conditions()) {
            if (cond.prior <= 0.0) continue;
            const double lp = std::log(cond.prior);
            for (const auto& comp : cond.components)
                if (comp.weight > 0.0) f(lp + std::log(comp.weight), comp);
        }
    } else {
        for (const auto& comp : w.condition(c).components)
            if (comp.weight > 0.0) f(std::log(comp.weight), comp);
    }
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

} // namespace

GmmWorld::GmmWorld(int dim, std::vector<Condition> conditions) : dim_(dim), conditions_(std::move(conditions)) {
    if (dim_ < 1) throw ConfigError("world.dim: must be >= 1");
    if (conditions_.empty()) throw ConfigError("world.conditions: need at least one named condition");
    double prior_sum = 0.0;
    for (std::size_t ci = 0; ci < conditions_.size(); ++ci) {
        const auto& cond = conditions_[ci];
        const std::string path = "world.conditions[" + std::to_string(ci) + "]";
        if (!(cond.prior >= 0.0)) throw ConfigError(path + ".prior: must be >= 0");
        prior_sum += cond.prior;
        if (cond.components.empty()) throw ConfigError(path + ".components: empty mixture");
        double wsum = 0.0;
        for (std::size_t k = 0; k < cond.components.size(); ++k) {
            const auto& comp = cond.components[k];
            const std::string cpath = path + ".components[" + std::to_string(k) + "]";
            if (!(comp.weight >= 0.0)) throw ConfigError(cpath + ".weight: must be >= 0");
            wsum += comp.weight;
            if (comp.mean.size() != dim_ || comp.var.size() != dim_)
                throw ConfigError(cpath + ": mean/var must have " + std::to_string(dim_) + " entries");
            if (!comp.mean.allFinite()) throw ConfigError(cpath + ".mean: non-finite entry");
            for (Eigen::Index i = 0; i < dim_; ++i)
                if (!(comp.var[i] > 0.0 && std::isfinite(comp.var[i])))
                    throw ConfigError(cpath + ".var: entries must be positive");
        }
        if (std::abs(wsum - 1.0) > 1e-12) throw ConfigError(path + ": mixture weights must sum to 1");
    }
    if (std::abs(prior_sum - 1.0) > 1e-12) throw ConfigError("world.conditions: priors must sum to 1");
}

const Condition& GmmWorld::condition(int c) const {
    check_condition(c, false);
    return conditions_[static_cast<std::size_t>(c - 1)];
}

std::string GmmWorld::label(int c) const {
    check_condition(c);
    return c == kPhi ? std::string("phi") : conditions_[static_cast<std::size_t>(c - 1)].label;
}

void GmmWorld::check_condition(int c, bool allow_phi) const {
    if (c < (allow_phi ? 0 : 1) || c >= condition_count())
        throw std::invalid_argument("invalid condition id " + std::to_string(c));
}

double log_noised_density(const GmmWorld& world, const Vec& z, double alpha_bar, int c) {
    require_dim(world, z);
    require_level(alpha_bar);
    world.check_condition(c);
    double mx = -std::numeric_limits<double>::infinity();
    thread_local std::vector<double> terms;
    terms.clear();
    for_each_component(world, c, [&](double lw, const Component& comp) {
        terms.push_back(lw + log_gaussian(z, comp, alpha_bar));
        mx = std::max(mx, terms.back());
    });
    if (!std::isfinite(mx)) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    return mx + std::log(s);
}

double log_noised_density(const GmmWorld& world, const Vec& z, int t, int c, const NoiseSchedule& schedule) {
    return log_noised_density(world, z, schedule.alpha_bar(t), c);
}

double noised_density(const GmmWorld& world, const Vec& z, int t, int c, const NoiseSchedule& schedule) {
    return std::exp(log_noised_density(world, z, t, c, schedule));
}

Vec score(const GmmWorld& world, const Vec& z, double alpha_bar, int c) {
    require_dim(world, z);
    require_level(alpha_bar);
    world.check_condition(c);
    const double sa = std::sqrt(alpha_bar);
    thread_local std::vector<double> logr;
    thread_local std::vector<const Component*> comps;
    logr.clear();
    comps.clear();
    double mx = -std::numeric_limits<double>::infinity();
    for_each_component(world, c, [&](double lw, const Component& comp) {
        logr.push_back(lw + log_gaussian(z, comp, alpha_bar));
        comps.push_back(&comp);
        mx = std::max(mx, logr.back());
    });
    if (!std::isfinite(mx)) throw NumericalError("score: density underflow at query point");
    double norm = 0.0;
    for (double& l : logr) norm += (l = std::exp(l - mx));
    Vec g = Vec::Zero(z.size());
    for (std::size_t k = 0; k < comps.size(); ++k) {
        const double r = logr[k] / norm;
        if (r == 0.0) continue;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            const double v = alpha_bar * comps[k]->var[i] + (1.0 - alpha_bar);
            g[i] -= r * (z[i] - sa * comps[k]->mean[i]) / v;
        }
    }
    return g;
}

Vec score(const GmmWorld& world, const Vec& z, int t, int c, const NoiseSchedule& schedule) {
    return score(world, z, schedule.alpha_bar(t), c);
}

Vec eps_from_score(const Vec& score_vec, int t, const NoiseSchedule& schedule) {
    if (t < 1 || t > schedule.steps()) throw std::out_of_range("eps_from_score: t outside [1, T]");
    return -std::sqrt(1.0 - schedule.alpha_bar(t)) * score_vec;
}

Vec score_from_eps(const Vec& eps, int t, const NoiseSchedule& schedule) {
    if (t < 1 || t > schedule.steps()) throw std::out_of_range("score_from_eps: t outside [1, T]");
    return eps / -std::sqrt(1.0 - schedule.alpha_bar(t));
}

std::vector<double> posteriors(const GmmWorld& world, const Vec& z, double alpha_bar) {
    const int C = world.condition_count();
    std::vector<double> logj(static_cast<std::size_t>(C), -std::numeric_limits<double>::infinity());
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 1; c < C; ++c) {
        const double prior = world.condition(c).prior;
        if (prior <= 0.0) continue;
        logj[static_cast<std::size_t>(c)] = std::log(prior) + log_noised_density(world, z, alpha_bar, c);
        mx = std::max(mx, logj[static_cast<std::size_t>(c)]);
    }
    if (!std::isfinite(mx)) throw NumericalError("posterior: all joint densities are zero");
    std::vector<double> out(static_cast<std::size_t>(C), 0.0);
    double norm = 0.0;
    for (int c = 1; c < C; ++c) norm += (out[static_cast<std::size_t>(c)] = std::exp(logj[static_cast<std::size_t>(c)] - mx));
    for (int c = 1; c < C; ++c) out[static_cast<std::size_t>(c)] /= norm;
    return out;
}

double posterior(const GmmWorld& world, const Vec& z, double alpha_bar, int c) {
    world.check_condition(c, false);
    return posteriors(world, z, alpha_bar)[static_cast<std::size_t>(c)];
}

double posterior(const GmmWorld& world, const Vec& z, int t, int c, const NoiseSchedule& schedule) {
    return posterior(world, z, schedule.alpha_bar(t), c);
}

double log_posterior(const GmmWorld& world, const Vec& z, double alpha_bar, int c) {
    world.check_condition(c, false);
    const double prior = world.condition(c).prior;
    if (prior <= 0.0) return -std::numeric_limits<double>::infinity();
    const double lj = std::log(prior) + log_noised_density(world, z, alpha_bar, c);
    const double lm = log_noised_density(world, z, alpha_bar, kPhi);
    if (!std::isfinite(lm)) throw NumericalError("posterior: all joint densities are zero");
    return lj - lm;
}

Vec sample_clean(const GmmWorld& world, int c, Rng& rng) {
    world.check_condition(c);
    if (c == kPhi) {
        const double u = rng.uniform();
        double acc = 0.0;
        c = world.condition_count() - 1;
        for (int k = 1; k < world.condition_count(); ++k) {
            acc += world.condition(k).prior;
            if (u < acc) {
                c = k;
                break;
            }
        }
    }
    const auto& comps = world.condition(c).components;
    const double u = rng.uniform();
    double acc = 0.0;
    const Component* chosen = &comps.back();
    for (const auto& comp : comps) {
        acc += comp.weight;
        if (u < acc) {
            chosen = &comp;
            break;
        }
    }
    Vec z(world.dim());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = chosen->mean[i] + std::sqrt(chosen->var[i]) * rng.normal();
    return z;
}

Vec clean_mean(const GmmWorld& world, int c) {
    Vec m = Vec::Zero(world.dim());
    for_each_component(world, c, [&](double lw, const Component& comp) { m += std::exp(lw) * comp.mean; });
    return m;
}

Grid default_grid(const GmmWorld& world, double alpha_bar, int points_per_axis) {
    require_level(alpha_bar);
    if (world.dim() > 2) throw std::invalid_argument("quadrature grids support dim 1 or 2 only");
    const double sa = std::sqrt(alpha_bar);
    std::array<Axis, 2> axes{};
    for (int i = 0; i < world.dim(); ++i) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        double sd = 0.0;
        for (const auto& cond : world.conditions())
            for (const auto& comp : cond.components) {
                lo = std::min(lo, sa * comp.mean[i]);
                hi = std::max(hi, sa * comp.mean[i]);
                sd = std::max(sd, std::sqrt(alpha_bar * comp.var[i] + 1.0 - alpha_bar));
            }
        axes[static_cast<std::size_t>(i)] = Axis{lo - 8.0 * sd, hi + 8.0 * sd, points_per_axis};
    }
    return world.dim() == 1 ? Grid(axes[0]) : Grid(axes[0], axes[1]);
}

double marginal_mass_inside(const GmmWorld& world, const Grid& grid, double alpha_bar) {
    if (grid.dim() != world.dim()) throw std::invalid_argument("grid/world dimension mismatch");
    const double sa = std::sqrt(alpha_bar);
    double mass = 0.0;
    for_each_component(world, kPhi, [&](double lw, const Component& comp) {
        double m = std::exp(lw);
        for (int i = 0; i < world.dim(); ++i) {
            const double sd = std::sqrt(alpha_bar * comp.var[i] + 1.0 - alpha_bar);
            const double mu = sa * comp.mean[i];
            m *= normal_cdf((grid.axis(i).hi - mu) / sd) - normal_cdf((grid.axis(i).lo - mu) / sd);
        }
        mass += m;
    });
    return mass;
}

} // namespace dnpg
