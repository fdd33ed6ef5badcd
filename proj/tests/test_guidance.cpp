#include "doctest.h"
#include "support.hpp"

using namespace dnpg;
using support::v1;
using support::v2;

namespace {

GuidanceConfig make(GuidanceMode m, double s, int p = 1, std::optional<int> n = std::nullopt) { return {m, s, p, n}; }

} // namespace

TEST_CASE("composition rules on hand values") {
    const Vec phi = v2(1, 0), p = v2(0, 1), n = v2(-1, 2);
    CHECK(cfg_compose(phi, p, 2) == v2(-1, 2));
    CHECK(negprompt_compose(phi, p, n, 2) == v2(3, -2));
    CHECK(negprompt_practitioner_compose(n, p, 2) == v2(1, -0));
    CHECK(dns_compose(phi, p, 2) == v2(3, -2));
}

TEST_CASE("composition identities hold bit for bit") {
    Rng rng(17);
    for (int i = 0; i < 1000; ++i) {
        const Vec phi = rng.normal_vector(4), p = rng.normal_vector(4), n = rng.normal_vector(4);
        const double s = 5 * rng.uniform();
        CHECK(negprompt_compose(phi, p, phi, s) == cfg_compose(phi, p, s));
        CHECK(dns_compose(phi, p, s) == negprompt_compose(phi, phi, p, s));
        CHECK(cfg_compose(phi, p, 0.0) == phi);
        CHECK(dns_compose(phi, p, 0.0) == phi);
        CHECK(negprompt_compose(phi, p, n, 0.0) == phi);
        CHECK(negprompt_practitioner_compose(phi, p, s) == cfg_compose(phi, p, s));
        const Vec gap = negprompt_practitioner_compose(n, p, s) - negprompt_compose(phi, p, n, s);
        CHECK((gap - (n - phi)).norm() <= 1e-12 * (1 + s) * (1 + n.norm() + p.norm() + phi.norm()));
    }
}

TEST_CASE("optimal negative noise") {
    CHECK(optimal_negative_noise(v2(3, 4), 25) == v2(-3, -4));
    Rng rng(23);
    for (int i = 0; i < 20; ++i) {
        const Vec e = rng.normal_vector(5);
        CHECK(optimal_negative_noise(e, e.squaredNorm()) == -e);
    }
    CHECK_THROWS(optimal_negative_noise(Vec::Zero(3), 1.0));
    CHECK_THROWS(optimal_negative_noise(v2(1, 0), 0.0));
}

TEST_CASE("optimal negative beats random candidates on the sphere") {
    Rng rng(29);
    const double K = 2.5;
    for (int trial = 0; trial < 100; ++trial) {
        const Vec ep = rng.normal_vector(8);
        const Vec best = optimal_negative_noise(ep, K);
        CHECK(std::abs(best.squaredNorm() - K) <= 1e-12 * K);
        const double star = (best - ep).squaredNorm();
        for (int k = 0; k < 100; ++k) {
            Vec cand = rng.normal_vector(8);
            cand *= std::sqrt(K) / cand.norm();
            CHECK((cand - ep).squaredNorm() <= star + 1e-9);
        }
    }
}

TEST_CASE("odds ratio") {
    const auto world = support::two_condition_1d();
    CHECK(odds_ratio(world, v1(0.7), 0.5, 1, 1) == 1.0);
    CHECK(odds_ratio(world, v1(0.0), 0.5, 1, 2) == doctest::Approx(1.0).epsilon(1e-14));
    const auto sep = support::separated_1d();
    CHECK(odds_ratio(sep, v1(-3.0), 1.0, 1, 2) >= 1e3);
}

TEST_CASE("guidance factor identities") {
    Rng rng(31);
    const auto world = support::random_world(2, 3, 2, rng);
    for (int i = 0; i < 100; ++i) {
        const Vec z = 2.0 * rng.normal_vector(2);
        const double ab = 0.2 + 0.8 * rng.uniform();
        const double s = 3 * rng.uniform();
        const double dn = log_guidance_factor(world, z, ab, make(GuidanceMode::Dns, s, 2));
        const double np = log_guidance_factor(world, z, ab, make(GuidanceMode::NegPrompt, s, kPhi, 2));
        CHECK(std::abs(dn - np) <= 1e-12 * std::max(1.0, std::abs(dn)));
        const double cf = log_guidance_factor(world, z, ab, make(GuidanceMode::Cfg, s, 2));
        CHECK(std::abs(cf + dn) <= 1e-12 * std::max(1.0, std::abs(dn)));
    }
    const auto single = support::gaussian_world(1, 0.3, 0.5);
    const auto s = support::standard_schedule();
    for (auto m : {GuidanceMode::Cfg, GuidanceMode::Dns})
        CHECK(guidance_factor(single, v1(0.9), 100, make(m, 2.0), s) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("composed score limits") {
    const auto world = support::distractor_1d();
    for (double x : {-2.0, 0.1, 1.7}) {
        const Vec z = v1(x);
        for (auto m : {GuidanceMode::Cfg, GuidanceMode::Dns})
            CHECK(composed_score(world, z, 0.6, make(m, 0.0)) == score(world, z, 0.6, kPhi));
        CHECK(composed_score(world, z, 0.6, make(GuidanceMode::NegPrompt, 0.0, 1, 2)) == score(world, z, 0.6, kPhi));
        CHECK(support::rel_err(composed_score(world, z, 0.6, make(GuidanceMode::Cfg, 1.0)), score(world, z, 0.6, 1)) <= 1e-12);
    }
}

TEST_CASE("composed score is the gradient of the tilted log density") {
    Rng rng(37);
    const auto world = support::random_world(2, 3, 2, rng);
    const std::vector<GuidanceConfig> modes{make(GuidanceMode::Cfg, 2.0), make(GuidanceMode::NegPrompt, 1.5, 1, 3),
                                            make(GuidanceMode::NegPromptPractitioner, 2.5, 2, 1),
                                            make(GuidanceMode::Dns, 3.0, 2)};
    for (const auto& g : modes)
        for (int i = 0; i < 100; ++i) {
            const Vec z = 1.5 * rng.normal_vector(2);
            const double ab = 0.3 + 0.6 * rng.uniform();
            const Vec fd = support::fd_gradient([&](const Vec& x) { return log_tilted_unnormalized(world, x, ab, g); }, z, 1e-5);
            CHECK(support::rel_err(composed_score(world, z, ab, g), fd) <= 1e-4);
        }
}

TEST_CASE("guided noise prediction and composed score agree") {
    Rng rng(41);
    const auto world = support::random_world(1, 3, 2, rng);
    const auto s = support::standard_schedule();
    const OracleNoiseSource source(world, s);
    const std::vector<GuidanceConfig> modes{make(GuidanceMode::Cfg, 2.0), make(GuidanceMode::NegPrompt, 1.5, 1, 3),
                                            make(GuidanceMode::NegPromptPractitioner, 2.5, 2, 1),
                                            make(GuidanceMode::Dns, 3.0, 2)};
    for (const auto& g : modes)
        for (int t : {1, 100, 700}) {
            const Vec z = rng.normal_vector(1);
            const Vec e = guided_eps(source, z, t, g);
            CHECK(support::rel_err(e, eps_from_score(composed_score(world, z, t, g, s), t, s)) <= 1e-12);
        }
}

TEST_CASE("tilted densities on a grid") {
    const auto world = support::two_condition_1d();
    const Grid grid = default_grid(world, 1.0, 1024);
    const auto marginal = density_on_grid(world, kPhi, 1.0, grid);
    for (auto m : {GuidanceMode::Cfg, GuidanceMode::Dns}) {
        const auto t0 = tilted_density_on_grid(world, make(m, 0.0), 1.0, grid);
        CHECK(total_variation(t0, marginal) <= 1e-12);
        CHECK(t0.integral() == doctest::Approx(1.0).epsilon(1e-12));
    }
    const auto cfg1 = tilted_density_on_grid(world, make(GuidanceMode::Cfg, 1.0), 1.0, grid);
    CHECK(total_variation(cfg1, density_on_grid(world, 1, 1.0, grid)) <= 1e-10);

    const auto dns = tilted_density_on_grid(world, make(GuidanceMode::Dns, 1.0), 1.0, grid);
    const auto dm = dns.masses(), mm = marginal.masses();
    double p_side_dns = 0, p_side_marg = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid.point(i)[0] < 0) {
            p_side_dns += dm[i];
            p_side_marg += mm[i];
        }
    CHECK(p_side_dns < p_side_marg);

    const Grid narrow(Axis{-0.5, 0.5, 64});
    CHECK_THROWS(tilted_density_on_grid(world, make(GuidanceMode::Cfg, 1.0), 1.0, narrow));
}

TEST_CASE("guidance configuration validation") {
    const auto world = support::two_condition_1d();
    CHECK_THROWS_AS(make(GuidanceMode::NegPrompt, 1.0).validate(world), ConfigError);
    CHECK_THROWS_AS(make(GuidanceMode::Dns, 1.0, 1, 2).validate(world), ConfigError);
    CHECK_THROWS_AS(make(GuidanceMode::Cfg, 1.0, 1, 2).validate(world), ConfigError);
    CHECK_THROWS_AS(make(GuidanceMode::Cfg, -0.5).validate(world), ConfigError);
    CHECK_THROWS_AS(make(GuidanceMode::Cfg, 1.0, 3).validate(world), ConfigError);
    CHECK_NOTHROW(make(GuidanceMode::NegPrompt, 1.0, 1, 2).validate(world));
    CHECK(parse_guidance_mode("negprompt_practitioner") == GuidanceMode::NegPromptPractitioner);
    CHECK_THROWS(parse_guidance_mode("cfgg"));
}
