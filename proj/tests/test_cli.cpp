#include "doctest.h"

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "dnpg/io.hpp"
#include "dnpg/manifest.hpp"

namespace fs = std::filesystem;

namespace {

struct Workspace {
    fs::path dir;

    explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / ("dnpg_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        dnpg::write_file_atomic(dir / "world.json", R"({"dim": 1, "conditions": [
            {"label": "p", "prior": 0.3, "components": [{"mean": [0.0], "var": [1.0]}]},
            {"label": "q", "prior": 0.7, "components": [{"mean": [1.0], "var": [0.25]}]}]})");
    }

    fs::path config(const std::string& name, const std::string& body) const {
        dnpg::write_file_atomic(dir / name, body);
        return dir / name;
    }

    int run(std::vector<std::string> args, std::string* out_text = nullptr) const {
        std::ostringstream out, err;
        const int code = dnpg::cli::run(args, out, err);
        if (out_text) *out_text = out.str() + err.str();
        return code;
    }
};

const char* kSmall = R"({"world": "world.json", "schedule": {"steps": 100, "beta_start": 0.001, "beta_end": 0.05},
    "guidance": {"mode": "cfg", "scale": 2.0}, "run": {"samples": 50, "seeds": 6}, "seed": 3})";

} // namespace

TEST_CASE("dnp output is byte-identical across runs") {
    Workspace ws("repeat");
    const auto cfg = ws.config("c.json", kSmall).string();
    const auto a = (ws.dir / "a").string(), b = (ws.dir / "b").string();
    REQUIRE(ws.run({"--config", cfg, "--out", a, "dnp"}) == 0);
    REQUIRE(ws.run({"--config", cfg, "--out", b, "dnp"}) == 0);
    const std::string csv = dnpg::read_file(fs::path(a) / "dnp.csv");
    CHECK(csv == dnpg::read_file(fs::path(b) / "dnp.csv"));
    CHECK(csv.rfind("seed,n_star,compliance_cfg,compliance_dns,compliance_dnp\n", 0) == 0);
    REQUIRE(ws.run({"--config", cfg, "--out", a, "sample"}) == 0);
    REQUIRE(ws.run({"--config", cfg, "--out", b, "sample"}) == 0);
    CHECK(dnpg::read_file(fs::path(a) / "samples.csv") == dnpg::read_file(fs::path(b) / "samples.csv"));
    CHECK(dnpg::load_manifests(a).size() == 2);
}

TEST_CASE("seed flag overrides the config seed") {
    Workspace ws("seed");
    const auto cfg = ws.config("c.json", kSmall).string();
    const auto a = (ws.dir / "a").string(), b = (ws.dir / "b").string();
    REQUIRE(ws.run({"--config", cfg, "--out", a, "sample", "--seed", "3"}) == 0);
    REQUIRE(ws.run({"--seed", "4", "--config", cfg, "--out", b, "sample"}) == 0);
    const auto sa = dnpg::read_file(fs::path(a) / "samples.csv"), sb = dnpg::read_file(fs::path(b) / "samples.csv");
    CHECK(sa != sb);
    REQUIRE(ws.run({"--config", cfg, "--out", b, "sample"}) == 0);
    CHECK(dnpg::read_file(fs::path(b) / "samples.csv") == sa);
}

TEST_CASE("world validate, dns, eval and plot") {
    Workspace ws("flow");
    const auto cfg = ws.config("c.json", kSmall).string();
    const auto out = (ws.dir / "o").string();
    std::string text;
    CHECK(ws.run({"--config", cfg, "world", "validate"}, &text) == 0);
    CHECK(text.find("conditions=2") != std::string::npos);
    CHECK(ws.run({"world", "validate", "--world", (ws.dir / "world.json").string()}) == 0);
    REQUIRE(ws.run({"--config", cfg, "--out", out, "dns"}, &text) == 0);
    CHECK(text.find("label=") != std::string::npos);
    REQUIRE(ws.run({"--config", cfg, "--out", out, "eval", "--samples", out + "/dns_samples.csv"}) == 0);
    CHECK(dnpg::read_file(fs::path(out) / "metrics.csv").find("compliance_p,") != std::string::npos);
    CHECK(fs::exists(fs::path(out) / "summary.txt"));
    REQUIRE(ws.run({"--config", cfg, "--out", out, "dnp"}) == 0);
    REQUIRE(ws.run({"--config", cfg, "--out", out, "plot", "--samples", out + "/dns_samples.csv", "--dnp", out + "/dnp.csv"}) == 0);
    CHECK(dnpg::read_file(fs::path(out) / "plot.svg").find("density-curve") != std::string::npos);
    CHECK(dnpg::read_file(fs::path(out) / "compliance.svg").find("class=\"bar\"") != std::string::npos);
}

TEST_CASE("train writes a checkpoint the samplers can load") {
    Workspace ws("train");
    const auto cfg = ws.config("t.json", R"({"world": "world.json", "schedule": {"steps": 50},
        "denoiser": {"hidden": [8, 8]}, "train": {"steps": 20, "batch_size": 16},
        "run": {"source": "denoiser", "checkpoint": "o/denoiser.ckpt", "samples": 5}})").string();
    const auto out = (ws.dir / "o").string();
    REQUIRE(ws.run({"--config", cfg, "--out", out, "train"}) == 0);
    CHECK(fs::exists(fs::path(out) / "denoiser.ckpt"));
    CHECK(dnpg::read_file(fs::path(out) / "loss.csv").rfind("step,loss\n", 0) == 0);
    CHECK(ws.run({"--config", cfg, "--out", out, "sample"}) == 0);
}

TEST_CASE("exit codes") {
    Workspace ws("codes");
    const auto out = (ws.dir / "o").string();
    CHECK(ws.run({"sample"}) == 2);
    CHECK(ws.run({"--config", (ws.dir / "missing.json").string(), "sample"}) == 2);
    CHECK(ws.run({"--config", ws.config("bad.json", R"({"world": "world.json", "train": {"p_uncond": 1.5}})").string(), "train"}) == 2);
    CHECK(ws.run({"--config", ws.config("ok.json", kSmall).string(), "frobnicate"}) == 2);
    const auto missing_ckpt = ws.config("m.json", R"({"world": "world.json", "run": {"source": "denoiser", "checkpoint": "nope.ckpt"}})");
    CHECK(ws.run({"--config", missing_ckpt.string(), "--out", out, "sample"}) == 4);
    const auto divergent = ws.config("d.json", R"({"world": "world.json", "guidance": {"mode": "cfg", "scale": 1.0},
        "sampler": {"kind": "langevin", "langevin": {"step_size": 50.0, "steps": 200, "burn_in": 10}},
        "run": {"langevin_chains": 2}})");
    CHECK(ws.run({"--config", divergent.string(), "--out", out, "sample"}) == 3);
    CHECK(ws.run({"--config", ws.config("ok2.json", kSmall).string(), "--out", out, "eval", "--samples",
                  (ws.dir / "none.csv").string()}) == 4);
}
