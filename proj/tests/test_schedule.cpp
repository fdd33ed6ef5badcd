#include "doctest.h"
#include "support.hpp"

using namespace dnpg;
using support::v1;

TEST_CASE("linear schedule small cases") {
    const auto one = make_linear_schedule(1, 0.5, 0.5);
    CHECK(one.betas() == std::vector<double>{0.5});
    CHECK(one.alpha_bar(1) == 0.5);
    CHECK(one.alpha_bar(0) == 1.0);

    const auto two = make_linear_schedule(2, 0.1, 0.2);
    CHECK(two.beta(1) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(two.beta(2) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(two.alpha_bar(1) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(two.alpha_bar(2) == doctest::Approx(0.72).epsilon(1e-15));
}

TEST_CASE("alpha_bar at T for the standard schedule matches a 50-digit product") {
    // mpmath product of (1 - beta_t), 50 significant digits
    const double reference = 4.035829765375683e-05;
    const auto s = support::standard_schedule();
    CHECK(std::abs(s.alpha_bar(1000) - reference) / reference <= 1e-12);
}

TEST_CASE("schedule invariants") {
    for (const auto& s : {support::standard_schedule(), make_linear_schedule(50, 1e-3, 0.3), make_linear_schedule(7, 0.01, 0.2)}) {
        long double prod = 1.0L;
        for (int t = 1; t <= s.steps(); ++t) {
            CHECK(s.beta(t) > 0.0);
            CHECK(s.beta(t) < 1.0);
            prod *= 1.0L - s.beta(t);
            CHECK(std::abs(s.alpha_bar(t) - static_cast<double>(prod)) <= 1e-12 * static_cast<double>(prod));
            CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
        }
    }
}

TEST_CASE("schedule rejects invalid input") {
    CHECK_THROWS(make_linear_schedule(0, 1e-4, 0.02));
    CHECK_THROWS(make_linear_schedule(10, 0.0, 0.02));
    CHECK_THROWS(make_linear_schedule(10, 1e-4, 1.0));
    CHECK_THROWS(NoiseSchedule({0.1, -0.2}));
    const auto s = make_linear_schedule(10, 1e-4, 0.02);
    CHECK_THROWS(s.alpha_bar(11));
    CHECK_THROWS(s.alpha_bar(-1));
    CHECK_THROWS(s.beta(0));
}

TEST_CASE("forward noising endpoints and a hand example") {
    Vec z0(2), eps(2);
    z0 << 0.3, -1.7;
    eps << 1.1, 0.4;
    CHECK(noise_to_level(z0, 1.0, eps) == z0);
    CHECK(noise_to_level(z0, 0.0, eps) == eps);
    const auto s = make_linear_schedule(10, 1e-4, 0.02);
    CHECK(forward_noise(z0, 0, eps, s) == z0);

    const auto two = make_linear_schedule(2, 0.1, 0.2);
    const Vec zt = forward_noise(support::v2(1, 0), 2, support::v2(0, 1), two);
    CHECK(zt[0] == doctest::Approx(0.848528137423857).epsilon(1e-14));
    CHECK(zt[1] == doctest::Approx(0.529150262212918).epsilon(1e-14));

    CHECK_THROWS(forward_noise(z0, 11, eps, s));
    CHECK_THROWS(forward_noise(z0, 3, v1(0.0), s));
}

TEST_CASE("forward noising preserves identity covariance") {
    const auto s = support::standard_schedule();
    Rng rng(42);
    const int n = 100000;
    for (int t : {1, 250, 600, 1000}) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2, 2);
        Vec mean = Vec::Zero(2);
        for (int i = 0; i < n; ++i) {
            const Vec z = forward_noise(rng.normal_vector(2), t, rng.normal_vector(2), s);
            mean += z;
            acc += z * z.transpose();
        }
        mean /= n;
        const Eigen::MatrixXd cov = acc / n - mean * mean.transpose();
        CHECK(std::abs(cov(0, 0) - 1.0) <= 0.02);
        CHECK(std::abs(cov(1, 1) - 1.0) <= 0.02);
        CHECK(std::abs(cov(0, 1)) <= 0.02);
    }
}
