#include "doctest.h"
#include "support.hpp"

using namespace dnpg;
using support::v1;

TEST_CASE("total variation on discrete masses") {
    CHECK(total_variation({0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}) == 0.0);
    CHECK(total_variation({0.5, 0.5, 0.0, 0.0}, {0.0, 0.0, 0.25, 0.75}) == 1.0);
    Rng rng(1);
    auto draw = [&] {
        std::vector<double> m(20);
        double sum = 0;
        for (auto& x : m) sum += (x = rng.uniform());
        for (auto& x : m) x /= sum;
        return m;
    };
    for (int i = 0; i < 100; ++i) {
        const auto a = draw(), b = draw(), c = draw();
        CHECK(total_variation(a, b) == doctest::Approx(total_variation(b, a)).epsilon(1e-15));
        CHECK(total_variation(a, c) <= total_variation(a, b) + total_variation(b, c) + 1e-15);
    }
    CHECK_THROWS(total_variation({0.5, 0.5}, {1.0}));
}

TEST_CASE("histogram of normal draws matches the normal density") {
    const auto world = support::gaussian_world(1, 0.0, 1.0);
    const Grid grid = default_grid(world, 1.0, 512);
    Rng rng(2);
    std::vector<Vec> xs;
    for (int i = 0; i < 200000; ++i) xs.push_back(rng.normal_vector(1));
    CHECK(total_variation(make_histogram(grid, xs), density_on_grid(world, 1, 1.0, grid)) <= 0.02);
}

TEST_CASE("histogram counts mass outside the grid") {
    const Grid grid(Axis{-1, 1, 11});
    const auto h = make_histogram(grid, {v1(0.0), v1(5.0), v1(-0.95)});
    CHECK(h.total == 3);
    CHECK(h.out_of_range == 1);
    double inside = 0;
    for (double m : h.masses()) inside += m;
    CHECK(inside == doctest::Approx(2.0 / 3));
}

TEST_CASE("KL divergence of a table with itself is zero") {
    const auto world = support::two_condition_1d();
    const Grid grid = default_grid(world, 1.0, 256);
    const auto a = density_on_grid(world, 1, 1.0, grid);
    CHECK(std::abs(kl_divergence(a, a)) <= 1e-14);
    CHECK(kl_divergence(a, density_on_grid(world, 2, 1.0, grid)) > 0.0);
}

TEST_CASE("moment report") {
    const auto constant = moment_report({v1(2.5), v1(2.5), v1(2.5)});
    CHECK(constant.mean[0] == 2.5);
    CHECK(constant.covariance(0, 0) == 0.0);
    const double a = 1.7;
    const auto pm = moment_report({v1(-a), v1(a)});
    CHECK(pm.mean[0] == 0.0);
    CHECK(pm.covariance(0, 0) == doctest::Approx(2 * a * a).epsilon(1e-15));
    CHECK_THROWS(moment_report({}));

    const auto world = support::distractor_1d();
    Rng rng(3);
    std::vector<Vec> xs;
    for (int i = 0; i < 1000000; ++i) xs.push_back(sample_clean(world, kPhi, rng));
    const auto r = moment_report(xs);
    const double mu = clean_mean(world, kPhi)[0];
    // mixture variance: E[var] + var[mean]
    const double var = 0.3 * 1.0 + 0.7 * 0.25 + 0.3 * mu * mu + 0.7 * (1 - mu) * (1 - mu);
    CHECK(std::abs(r.mean[0] - mu) <= 3 * std::sqrt(var / 1e6));
    CHECK(r.count == 1000000);
}

TEST_CASE("sign test p-values") {
    CHECK(sign_test(std::vector<double>(10, 1.0)) == doctest::Approx(0.001953125).epsilon(1e-12));
    std::vector<double> balanced;
    for (int i = 0; i < 20; ++i) balanced.push_back(i % 2 ? 1.0 : -1.0);
    CHECK(sign_test(balanced) == doctest::Approx(1.0).epsilon(1e-12));
    // scipy.stats.binomtest(70, 100, 0.5).pvalue
    std::vector<double> skew(70, 0.4);
    skew.insert(skew.end(), 30, -0.1);
    CHECK(sign_test(skew) == doctest::Approx(7.85013964559367e-05).epsilon(1e-9));
    CHECK(binomial_two_sided(30, 100) == doctest::Approx(7.85013964559367e-05).epsilon(1e-9));
    std::vector<double> with_ties(12, 1.0);
    with_ties.push_back(0.0);
    CHECK(sign_test(with_ties) == doctest::Approx(binomial_two_sided(12, 12)).epsilon(1e-15));
    CHECK_THROWS(sign_test(std::vector<double>(9, 1.0)));
    CHECK_THROWS(sign_test(std::vector<double>(20, 0.0)));
}
