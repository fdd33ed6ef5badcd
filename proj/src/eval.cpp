#include "dnpg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dnpg {

std::vector<double> Histogram::masses() const {
    std::vector<double> m(counts.size(), 0.0);
    if (total == 0) return m;
    for (std::size_t i = 0; i < counts.size(); ++i) m[i] = counts[i] / static_cast<double>(total);
    return m;
}

Histogram make_histogram(const Grid& grid, const std::vector<Eigen::VectorXd>& samples) {
    Histogram h{grid, std::vector<double>(grid.size(), 0.0), samples.size(), 0};
    for (const auto& z : samples) {
        if (const auto cell = grid.cell_of(z))
            h.counts[*cell] += 1.0;
        else
            ++h.out_of_range;
    }
    return h;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("total_variation: grid mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return std::min(1.0, 0.5 * s);
}

double total_variation(const Histogram& hist, const DensityTable& density) {
    if (!(hist.grid == density.grid)) throw std::invalid_argument("total_variation: grid mismatch");
    const std::vector<double> a = hist.masses();
    const std::vector<double> b = density.masses();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    if (hist.total > 0) s += static_cast<double>(hist.out_of_range) / static_cast<double>(hist.total);
    return std::min(1.0, 0.5 * s);
}

double total_variation(const DensityTable& a, const DensityTable& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("total_variation: grid mismatch");
    return total_variation(a.masses(), b.masses());
}

double kl_divergence(const DensityTable& p, const DensityTable& q) {
    if (!(p.grid == q.grid)) throw std::invalid_argument("kl_divergence: grid mismatch");
    const auto mp = p.masses();
    const auto mq = q.masses();
    double s = 0.0;
    for (std::size_t i = 0; i < mp.size(); ++i) {
        if (mp[i] <= 0.0) continue;
        if (mq[i] <= 0.0) return std::numeric_limits<double>::infinity();
        s += mp[i] * std::log(mp[i] / mq[i]);
    }
    return std::max(0.0, s);
}

MomentReport moment_report(const std::vector<Eigen::VectorXd>& samples) {
    if (samples.size() < 2) throw std::invalid_argument("moment_report: need at least two samples");
    const auto d = samples.front().size();
    MomentReport r;
    r.count = samples.size();
    r.mean = Eigen::VectorXd::Zero(d);
    for (const auto& z : samples) {
        if (z.size() != d) throw std::invalid_argument("moment_report: ragged samples");
        r.mean += z;
    }
    r.mean /= static_cast<double>(r.count);
    r.covariance = Eigen::MatrixXd::Zero(d, d);
    for (const auto& z : samples) {
        const Eigen::VectorXd c = z - r.mean;
        r.covariance += c * c.transpose();
    }
    r.covariance /= static_cast<double>(r.count - 1);
    return r;
}

double binomial_two_sided(std::size_t k, std::size_t n) {
    if (k > n) throw std::invalid_argument("binomial_two_sided: k > n");
    const double log_half_n = static_cast<double>(n) * std::log(0.5);
    auto log_pmf = [&](std::size_t i) {
        return std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(static_cast<double>(n - i) + 1.0) +
               log_half_n;
    };
    // The tail on the side of k; the distribution is symmetric.
    const std::size_t lo = std::min(k, n - k);
    double tail = 0.0;
    for (std::size_t i = 0; i <= lo; ++i) tail += std::exp(log_pmf(i));
    return std::min(1.0, 2.0 * tail);
}

double sign_test(const std::vector<double>& deltas) {
    if (deltas.size() < 10) throw std::invalid_argument("sign_test: need at least 10 pairs");
    std::size_t pos = 0, neg = 0;
    for (double d : deltas) {
        if (std::isnan(d)) throw std::invalid_argument("sign_test: NaN delta");
        if (d > 0.0) ++pos;
        else if (d < 0.0) ++neg;
    }
    if (pos + neg == 0) throw std::invalid_argument("sign_test: all deltas are ties");
    return binomial_two_sided(pos, pos + neg);
}

} // namespace dnpg
