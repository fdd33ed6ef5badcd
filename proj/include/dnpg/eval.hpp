#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "dnpg/grid.hpp"

namespace dnpg {

/// Sample counts on the nodes' cells of a Grid. Samples outside the box are
/// tallied in out_of_range and still count toward the total.
struct Histogram {
    Grid grid;
    std::vector<double> counts;
    std::size_t total = 0;
    std::size_t out_of_range = 0;

    /// Probability mass per cell (counts / total).
    std::vector<double> masses() const;
};

Histogram make_histogram(const Grid& grid, const std::vector<Eigen::VectorXd>& samples);

/// 1/2 sum |a_i - b_i| over cells, for mass tables of equal length.
double total_variation(const std::vector<double>& a, const std::vector<double>& b);
/// Histogram against a normalized density table on the same grid; mass the
/// histogram placed outside the box counts as unmatched.
double total_variation(const Histogram& hist, const DensityTable& density);
double total_variation(const DensityTable& a, const DensityTable& b);

/// KL(p || q) over cells of two tables on the same grid; cells where p has
/// mass and q has none give +inf.
double kl_divergence(const DensityTable& p, const DensityTable& q);

struct MomentReport {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance; ///< unbiased (n - 1 divisor)
    std::size_t count = 0;
};

/// Fixed-order summation; needs at least two samples.
MomentReport moment_report(const std::vector<Eigen::VectorXd>& samples);

/// Exact two-sided binomial sign test on paired deltas; zero deltas dropped.
/// Needs at least 10 pairs and at least one nonzero delta.
double sign_test(const std::vector<double>& deltas);

/// Exact two-sided binomial p-value for k successes in n fair trials.
double binomial_two_sided(std::size_t k, std::size_t n);

} // namespace dnpg
