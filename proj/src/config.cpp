#include "dnpg/config.hpp"

#include <initializer_list>
#include <set>
#include <string_view>

#include "dnpg/errors.hpp"
#include "dnpg/io.hpp"

namespace dnpg {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(path + "." + key + ": unknown key");
    }
}

template <class T>
T get_or(const json& j, const std::string& path, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + "." + key + ": wrong type");
    }
}

const json& need(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) throw ConfigError(path + "." + key + ": missing");
    return j.at(key);
}

Vec read_vector(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path + ": expected an array of numbers");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]: expected a number");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

json vector_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

std::string_view kind_name(SamplerKind k) {
    switch (k) {
    case SamplerKind::Ddpm: return "ddpm";
    case SamplerKind::Ddim: return "ddim";
    case SamplerKind::Langevin: return "langevin";
    }
    return "?";
}

SamplerKind parse_kind(const std::string& s) {
    if (s == "ddpm") return SamplerKind::Ddpm;
    if (s == "ddim") return SamplerKind::Ddim;
    if (s == "langevin") return SamplerKind::Langevin;
    throw ConfigError("sampler.kind: unknown sampler '" + s + "'");
}

Activation parse_activation(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "silu") return Activation::Silu;
    throw ConfigError("denoiser.activation: unknown activation '" + s + "'");
}

std::uint64_t read_seed(const json& j, const std::string& path, const char* key, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ConfigError(path + "." + key + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
}

} // namespace

GmmWorld parse_world(const json& j, const std::string& path) {
    only_keys(j, path, {"dim", "conditions"});
    const int dim = get_or<int>(j, path, "dim", 0);
    if (!j.contains("dim")) throw ConfigError(path + ".dim: missing");
    const json& conds = need(j, path, "conditions");
    if (!conds.is_array()) throw ConfigError(path + ".conditions: expected an array");
    std::vector<Condition> out;
    for (std::size_t ci = 0; ci < conds.size(); ++ci) {
        const std::string cp = path + ".conditions[" + std::to_string(ci) + "]";
        only_keys(conds[ci], cp, {"label", "prior", "components"});
        Condition c;
        c.label = get_or<std::string>(conds[ci], cp, "label", "c" + std::to_string(ci + 1));
        if (!conds[ci].contains("prior")) throw ConfigError(cp + ".prior: missing");
        c.prior = get_or<double>(conds[ci], cp, "prior", 0.0);
        const json& comps = need(conds[ci], cp, "components");
        if (!comps.is_array()) throw ConfigError(cp + ".components: expected an array");
        for (std::size_t k = 0; k < comps.size(); ++k) {
            const std::string kp = cp + ".components[" + std::to_string(k) + "]";
            only_keys(comps[k], kp, {"weight", "mean", "var"});
            Component comp;
            comp.weight = get_or<double>(comps[k], kp, "weight", comps.size() == 1 ? 1.0 : -1.0);
            comp.mean = read_vector(need(comps[k], kp, "mean"), kp + ".mean");
            comp.var = read_vector(need(comps[k], kp, "var"), kp + ".var");
            c.components.push_back(std::move(comp));
        }
        out.push_back(std::move(c));
    }
    try {
        return GmmWorld(dim, std::move(out));
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        if (msg.rfind("world", 0) == 0 && path != "world") msg = path + msg.substr(5);
        throw ConfigError(msg);
    }
}

GmmWorld load_world(const std::filesystem::path& file) {
    const std::string text = read_file(file);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(file.string() + ": " + e.what());
    }
    return parse_world(j);
}

json world_to_json(const GmmWorld& world) {
    json conds = json::array();
    for (const auto& c : world.conditions()) {
        json comps = json::array();
        for (const auto& k : c.components)
            comps.push_back({{"weight", k.weight}, {"mean", vector_json(k.mean)}, {"var", vector_json(k.var)}});
        conds.push_back({{"label", c.label}, {"prior", c.prior}, {"components", comps}});
    }
    return {{"dim", world.dim()}, {"conditions", conds}};
}

ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports "at line L, column C".
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    only_keys(j, "config", {"world", "schedule", "guidance", "sampler", "denoiser", "train", "dnp", "run", "seed"});

    const json& wj = need(j, "config", "world");
    GmmWorld world = wj.is_string() ? load_world(base_dir / wj.get<std::string>()) : parse_world(wj);
    ExperimentConfig cfg{std::move(world), {}, {}, {}, {}, 0, {}, {}, {}, 0, {}};
    cfg.seed = read_seed(j, "config", "seed", 0);

    if (j.contains("schedule")) {
        const json& s = j["schedule"];
        only_keys(s, "schedule", {"steps", "beta_start", "beta_end"});
        cfg.schedule.steps = get_or<int>(s, "schedule", "steps", cfg.schedule.steps);
        cfg.schedule.beta_start = get_or<double>(s, "schedule", "beta_start", cfg.schedule.beta_start);
        cfg.schedule.beta_end = get_or<double>(s, "schedule", "beta_end", cfg.schedule.beta_end);
    }
    try {
        (void)cfg.schedule.build();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("schedule: ") + e.what());
    }

    if (j.contains("guidance")) {
        const json& g = j["guidance"];
        only_keys(g, "guidance", {"mode", "scale", "positive", "negative"});
        cfg.guidance.mode = parse_guidance_mode(get_or<std::string>(g, "guidance", "mode", "cfg"));
        cfg.guidance.scale = get_or<double>(g, "guidance", "scale", 0.0);
        cfg.guidance.positive = get_or<int>(g, "guidance", "positive", 1);
        if (g.contains("negative") && !g["negative"].is_null())
            cfg.guidance.negative = get_or<int>(g, "guidance", "negative", 0);
    }
    cfg.guidance.validate(cfg.world);

    if (j.contains("sampler")) {
        const json& s = j["sampler"];
        only_keys(s, "sampler", {"kind", "eta", "ddim_steps", "record_trajectory", "langevin"});
        cfg.sampler.kind = parse_kind(get_or<std::string>(s, "sampler", "kind", "ddpm"));
        cfg.sampler.eta = get_or<double>(s, "sampler", "eta", 0.0);
        cfg.sampler.ddim_steps = get_or<int>(s, "sampler", "ddim_steps", cfg.sampler.ddim_steps);
        cfg.sampler.record_trajectory = get_or<bool>(s, "sampler", "record_trajectory", false);
        if (s.contains("langevin")) {
            const json& l = s["langevin"];
            auto& lc = cfg.sampler.langevin;
            only_keys(l, "sampler.langevin", {"t_fix", "step_size", "steps", "burn_in", "thin"});
            lc.t_fix = get_or<int>(l, "sampler.langevin", "t_fix", lc.t_fix);
            lc.step_size = get_or<double>(l, "sampler.langevin", "step_size", lc.step_size);
            lc.steps = get_or<int>(l, "sampler.langevin", "steps", lc.steps);
            lc.burn_in = get_or<int>(l, "sampler.langevin", "burn_in", lc.burn_in);
            lc.thin = get_or<int>(l, "sampler.langevin", "thin", lc.thin);
        }
    }
    cfg.sampler.validate();
    if (cfg.sampler.kind == SamplerKind::Langevin) {
        cfg.sampler.langevin.validate();
        if (cfg.sampler.langevin.t_fix > cfg.schedule.steps)
            throw ConfigError("sampler.langevin.t_fix: exceeds schedule.steps");
    }

    cfg.denoiser.dim = cfg.world.dim();
    cfg.denoiser.conditions = cfg.world.condition_count();
    cfg.denoiser.time_steps = cfg.schedule.steps;
    if (j.contains("denoiser")) {
        const json& d = j["denoiser"];
        only_keys(d, "denoiser", {"hidden", "time_frequencies", "embedding_width", "activation", "init_seed"});
        cfg.denoiser.hidden = get_or<std::vector<int>>(d, "denoiser", "hidden", cfg.denoiser.hidden);
        cfg.denoiser.time_frequencies = get_or<int>(d, "denoiser", "time_frequencies", cfg.denoiser.time_frequencies);
        cfg.denoiser.embedding_width = get_or<int>(d, "denoiser", "embedding_width", cfg.denoiser.embedding_width);
        cfg.denoiser.activation = parse_activation(get_or<std::string>(d, "denoiser", "activation", "silu"));
        cfg.init_seed = read_seed(d, "denoiser", "init_seed", 0);
    }
    cfg.denoiser.validate();

    if (j.contains("train")) {
        const json& t = j["train"];
        auto& tc = cfg.train;
        only_keys(t, "train", {"steps", "batch_size", "learning_rate", "final_learning_rate", "beta1", "beta2",
                               "adam_eps", "p_uncond", "seed"});
        tc.steps = get_or<int>(t, "train", "steps", tc.steps);
        tc.batch_size = get_or<int>(t, "train", "batch_size", tc.batch_size);
        tc.learning_rate = get_or<double>(t, "train", "learning_rate", tc.learning_rate);
        tc.final_learning_rate = get_or<double>(t, "train", "final_learning_rate", tc.learning_rate);
        tc.beta1 = get_or<double>(t, "train", "beta1", tc.beta1);
        tc.beta2 = get_or<double>(t, "train", "beta2", tc.beta2);
        tc.adam_eps = get_or<double>(t, "train", "adam_eps", tc.adam_eps);
        tc.p_uncond = get_or<double>(t, "train", "p_uncond", tc.p_uncond);
        tc.seed = read_seed(t, "train", "seed", tc.seed);
    }
    cfg.train.validate();

    cfg.dnp.positive = cfg.guidance.positive == kPhi ? 1 : cfg.guidance.positive;
    cfg.dnp.s_dns = cfg.guidance.scale;
    cfg.dnp.s_final = cfg.guidance.scale;
    if (j.contains("dnp")) {
        const json& d = j["dnp"];
        only_keys(d, "dnp", {"positive", "s_dns", "final_mode", "s_final", "allow_p"});
        cfg.dnp.positive = get_or<int>(d, "dnp", "positive", cfg.dnp.positive);
        cfg.dnp.s_dns = get_or<double>(d, "dnp", "s_dns", cfg.dnp.s_dns);
        cfg.dnp.s_final = get_or<double>(d, "dnp", "s_final", cfg.dnp.s_dns);
        cfg.dnp.final_mode = parse_guidance_mode(get_or<std::string>(d, "dnp", "final_mode", "negprompt"));
        cfg.dnp.captioner.allow_p = get_or<bool>(d, "dnp", "allow_p", false);
    }
    cfg.dnp.sampler = cfg.sampler;
    if (cfg.dnp.sampler.kind == SamplerKind::Langevin) cfg.dnp.sampler.kind = SamplerKind::Ddpm;
    if (cfg.dnp.positive < 1 || cfg.dnp.positive >= cfg.world.condition_count())
        throw ConfigError("dnp.positive: must name a condition other than phi");
    if (!(cfg.dnp.s_dns >= 0.0)) throw ConfigError("dnp.s_dns: must be >= 0");
    if (!(cfg.dnp.s_final >= 0.0)) throw ConfigError("dnp.s_final: must be >= 0");
    if (cfg.dnp.final_mode != GuidanceMode::NegPrompt && cfg.dnp.final_mode != GuidanceMode::NegPromptPractitioner)
        throw ConfigError("dnp.final_mode: must be negprompt or negprompt_practitioner");

    if (j.contains("run")) {
        const json& r = j["run"];
        auto& rc = cfg.run;
        only_keys(r, "run", {"source", "checkpoint", "samples", "seeds", "langevin_chains", "threads"});
        rc.source = get_or<std::string>(r, "run", "source", rc.source);
        if (rc.source != "oracle" && rc.source != "denoiser")
            throw ConfigError("run.source: must be 'oracle' or 'denoiser'");
        rc.checkpoint = get_or<std::string>(r, "run", "checkpoint", rc.checkpoint);
        if (!rc.checkpoint.empty()) rc.checkpoint = (base_dir / rc.checkpoint).lexically_normal().string();
        rc.samples = get_or<std::size_t>(r, "run", "samples", rc.samples);
        rc.seeds = get_or<std::size_t>(r, "run", "seeds", rc.seeds);
        rc.langevin_chains = get_or<std::size_t>(r, "run", "langevin_chains", rc.langevin_chains);
        rc.threads = get_or<unsigned>(r, "run", "threads", rc.threads);
    }
    if (cfg.run.source == "denoiser" && cfg.run.checkpoint.empty())
        throw ConfigError("run.checkpoint: required when run.source is 'denoiser'");
    if (cfg.run.samples < 1) throw ConfigError("run.samples: must be >= 1");
    if (cfg.run.seeds < 1) throw ConfigError("run.seeds: must be >= 1");
    if (cfg.run.langevin_chains < 1) throw ConfigError("run.langevin_chains: must be >= 1");

    cfg.canonical = to_json(cfg);
    return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    return parse_config_text(text, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

json to_json(const ExperimentConfig& c) {
    json hidden = c.denoiser.hidden;
    const auto& l = c.sampler.langevin;
    return {
        {"world", world_to_json(c.world)},
        {"seed", c.seed},
        {"schedule", {{"steps", c.schedule.steps}, {"beta_start", c.schedule.beta_start}, {"beta_end", c.schedule.beta_end}}},
        {"guidance",
         {{"mode", std::string(to_string(c.guidance.mode))},
          {"scale", c.guidance.scale},
          {"positive", c.guidance.positive},
          {"negative", c.guidance.negative ? json(*c.guidance.negative) : json(nullptr)}}},
        {"sampler",
         {{"kind", std::string(kind_name(c.sampler.kind))},
          {"eta", c.sampler.eta},
          {"ddim_steps", c.sampler.ddim_steps},
          {"record_trajectory", c.sampler.record_trajectory},
          {"langevin",
           {{"t_fix", l.t_fix}, {"step_size", l.step_size}, {"steps", l.steps}, {"burn_in", l.burn_in}, {"thin", l.thin}}}}},
        {"denoiser",
         {{"hidden", hidden},
          {"time_frequencies", c.denoiser.time_frequencies},
          {"embedding_width", c.denoiser.embedding_width},
          {"activation", c.denoiser.activation == Activation::Tanh ? "tanh" : "silu"},
          {"init_seed", c.init_seed}}},
        {"train",
         {{"steps", c.train.steps},
          {"batch_size", c.train.batch_size},
          {"learning_rate", c.train.learning_rate},
          {"final_learning_rate", c.train.final_learning_rate},
          {"beta1", c.train.beta1},
          {"beta2", c.train.beta2},
          {"adam_eps", c.train.adam_eps},
          {"p_uncond", c.train.p_uncond},
          {"seed", c.train.seed}}},
        {"dnp",
         {{"positive", c.dnp.positive},
          {"s_dns", c.dnp.s_dns},
          {"final_mode", std::string(to_string(c.dnp.final_mode))},
          {"s_final", c.dnp.s_final},
          {"allow_p", c.dnp.captioner.allow_p}}},
        {"run",
         {{"source", c.run.source},
          {"checkpoint", c.run.checkpoint},
          {"samples", c.run.samples},
          {"seeds", c.run.seeds},
          {"langevin_chains", c.run.langevin_chains},
          {"threads", c.run.threads}}},
    };
}

} // namespace dnpg
