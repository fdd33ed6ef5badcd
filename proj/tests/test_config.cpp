#include "doctest.h"
#include "support.hpp"

#include "dnpg/config.hpp"
#include "dnpg/errors.hpp"

using namespace dnpg;

namespace {

const char* kWorld = R"("world": {"dim": 1, "conditions": [
    {"label": "p", "prior": 0.5, "components": [{"mean": [-1], "var": [0.36]}]},
    {"label": "q", "prior": 0.5, "components": [{"mean": [1], "var": [0.36]}]}]})";

std::string with(const std::string& extra) { return std::string("{") + kWorld + (extra.empty() ? "" : ", " + extra) + "}"; }

std::string error_of(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("minimal config parses with defaults") {
    const auto cfg = parse_config_text(with(""));
    CHECK(cfg.world.condition_count() == 3);
    CHECK(cfg.schedule.steps == 1000);
    CHECK(cfg.guidance.mode == GuidanceMode::Cfg);
    CHECK(cfg.sampler.kind == SamplerKind::Ddpm);
    CHECK(cfg.train.p_uncond == 0.1);
    CHECK(cfg.denoiser.dim == 1);
    CHECK(cfg.denoiser.conditions == 3);
}

TEST_CASE("config round-trips through canonical json") {
    const auto cfg = parse_config_text(with(R"("guidance": {"mode": "negprompt", "scale": 2.5, "positive": 1, "negative": 2},
        "sampler": {"kind": "ddim", "eta": 0.5, "ddim_steps": 20}, "seed": 9)"));
    const auto again = parse_config_text(cfg.canonical.dump());
    CHECK(again.canonical == cfg.canonical);
    CHECK(again.guidance.negative == 2);
    CHECK(again.sampler.ddim_steps == 20);
    CHECK(again.seed == 9);
}

TEST_CASE("invalid values are rejected with the offending field") {
    CHECK(error_of(with(R"("train": {"p_uncond": 1.5})")).find("train.p_uncond") != std::string::npos);
    CHECK(error_of(with(R"("guidance": {"mode": "dns", "scale": 1, "negative": 2})")).find("guidance.negative") != std::string::npos);
    CHECK(error_of(with(R"("guidance": {"mode": "negprompt", "scale": 1})")).find("guidance.negative") != std::string::npos);
    CHECK(error_of(with(R"("guidance": {"scale": -1})")).find("guidance.scale") != std::string::npos);
    CHECK(error_of(with(R"("sampler": {"kind": "ddim", "eta": 2})")).find("sampler.eta") != std::string::npos);
    CHECK(error_of(with(R"("schedule": {"steps": 0})")).find("schedule") != std::string::npos);
    CHECK(error_of(with(R"("run": {"source": "denoiser"})")).find("run.checkpoint") != std::string::npos);
    CHECK(error_of(R"({"world": {"dim": 1, "conditions": [{"prior": 1, "components": [{"mean": [0, 1], "var": [1]}]}]}})")
              .find("world.conditions[0].components[0]") != std::string::npos);
}

TEST_CASE("unknown keys are named") {
    CHECK(error_of(with(R"("sampler": {"knd": "ddpm"})")).find("sampler.knd") != std::string::npos);
    CHECK(error_of(with(R"("extra": 1)")).find("extra") != std::string::npos);
}

TEST_CASE("parse errors report the line") {
    const std::string text = with("") + "\n";
    std::string broken = "{\n  \"seed\": 1,\n  \"world\": [\n}\n";
    const auto msg = error_of(broken);
    CHECK(msg.find("line 4") != std::string::npos);
    CHECK(!error_of(text + "garbage").empty());
}

TEST_CASE("missing config files are config errors") {
    CHECK_THROWS_AS(parse_config("/nonexistent/dir/config.json"), ConfigError);
}
