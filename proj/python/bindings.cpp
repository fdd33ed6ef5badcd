#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dnpg/checkpoint.hpp"
#include "dnpg/config.hpp"
#include "dnpg/dnp.hpp"
#include "dnpg/errors.hpp"
#include "dnpg/eval.hpp"

namespace py = pybind11;
using namespace dnpg;

namespace {

Eigen::MatrixXd stack(const std::vector<Vec>& rows, int dim) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), dim);
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    return m;
}

std::vector<Vec> unstack(const Eigen::MatrixXd& m) {
    std::vector<Vec> rows;
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(m.row(i).transpose());
    return rows;
}

SamplerConfig sampler_config(const std::string& kind, double eta, int ddim_steps) {
    SamplerConfig c;
    if (kind == "ddpm") c.kind = SamplerKind::Ddpm;
    else if (kind == "ddim") c.kind = SamplerKind::Ddim;
    else throw ConfigError("sampler kind must be 'ddpm' or 'ddim'");
    c.eta = eta;
    c.ddim_steps = ddim_steps;
    return c;
}

GuidanceConfig guidance(const std::string& mode, double scale, int positive, std::optional<int> negative) {
    return {parse_guidance_mode(mode), scale, positive, negative};
}

py::dict table_dict(const DensityTable& t) {
    py::dict d;
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < t.grid.size(); ++i) pts.push_back(t.grid.point(i));
    d["points"] = stack(pts, t.grid.dim());
    d["density"] = t.density;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Guided diffusion sampling on analytic Gaussian-mixture worlds";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<NoiseSchedule>(m, "NoiseSchedule")
        .def(py::init<std::vector<double>>(), py::arg("betas"))
        .def_property_readonly("steps", &NoiseSchedule::steps)
        .def("beta", &NoiseSchedule::beta)
        .def("alpha_bar", &NoiseSchedule::alpha_bar)
        .def_property_readonly("betas", &NoiseSchedule::betas)
        .def_property_readonly("alpha_bars", &NoiseSchedule::alpha_bars);
    m.def("linear_schedule", &make_linear_schedule, py::arg("steps") = 1000, py::arg("beta_start") = 1e-4,
          py::arg("beta_end") = 0.02);
    m.def("forward_noise", &forward_noise, py::arg("z0"), py::arg("t"), py::arg("eps"), py::arg("schedule"));

    py::class_<GmmWorld>(m, "World")
        .def_static("from_json", [](const std::string& text) { return parse_world(nlohmann::json::parse(text)); })
        .def_static("load", &load_world)
        .def("to_json", [](const GmmWorld& w) { return world_to_json(w).dump(); })
        .def_property_readonly("dim", &GmmWorld::dim)
        .def_property_readonly("condition_count", &GmmWorld::condition_count)
        .def("label", &GmmWorld::label);

    m.def("log_density", py::overload_cast<const GmmWorld&, const Vec&, double, int>(&log_noised_density),
          py::arg("world"), py::arg("z"), py::arg("alpha_bar"), py::arg("c"));
    m.def("score", py::overload_cast<const GmmWorld&, const Vec&, double, int>(&score), py::arg("world"), py::arg("z"),
          py::arg("alpha_bar"), py::arg("c"));
    m.def("posteriors", &posteriors, py::arg("world"), py::arg("z"), py::arg("alpha_bar") = 1.0);
    m.def("compliance", [](const GmmWorld& w, const Eigen::MatrixXd& samples, int p) {
        return compliance(w, unstack(samples), p);
    }, py::arg("world"), py::arg("samples"), py::arg("p"));

    m.def("cfg_compose", &cfg_compose);
    m.def("negprompt_compose", &negprompt_compose);
    m.def("negprompt_practitioner_compose", &negprompt_practitioner_compose);
    m.def("dns_compose", &dns_compose);
    m.def("optimal_negative_noise", &optimal_negative_noise, py::arg("eps_p"), py::arg("K"));

    m.def("composed_score", [](const GmmWorld& w, const Vec& z, double ab, const std::string& mode, double scale,
                               int positive, std::optional<int> negative) {
        return composed_score(w, z, ab, guidance(mode, scale, positive, negative));
    }, py::arg("world"), py::arg("z"), py::arg("alpha_bar"), py::arg("mode"), py::arg("scale"), py::arg("positive") = 1,
          py::arg("negative") = py::none());
    m.def("tilted_density", [](const GmmWorld& w, double ab, const std::string& mode, double scale, int positive,
                               std::optional<int> negative, int points) {
        return table_dict(tilted_density_on_grid(w, guidance(mode, scale, positive, negative), ab,
                                                 default_grid(w, ab, points)));
    }, py::arg("world"), py::arg("alpha_bar"), py::arg("mode"), py::arg("scale"), py::arg("positive") = 1,
          py::arg("negative") = py::none(), py::arg("points") = 512);

    m.def("sample", [](const GmmWorld& w, const NoiseSchedule& s, const std::string& mode, double scale, int positive,
                       std::optional<int> negative, std::size_t count, std::uint64_t seed, const std::string& kind,
                       double eta, int ddim_steps) {
        const OracleNoiseSource src(w, s);
        const auto g = guidance(mode, scale, positive, negative);
        const auto cfg = sampler_config(kind, eta, ddim_steps);
        std::vector<Vec> xs;
        {
            py::gil_scoped_release release;
            xs = sample_chains(src, g, s, cfg, seed, count);
        }
        return stack(xs, w.dim());
    }, py::arg("world"), py::arg("schedule"), py::arg("mode") = "cfg", py::arg("scale") = 0.0, py::arg("positive") = 1,
          py::arg("negative") = py::none(), py::arg("count") = 1000, py::arg("seed") = 0, py::arg("kind") = "ddpm",
          py::arg("eta") = 0.0, py::arg("ddim_steps") = 50);

    m.def("langevin", [](const GmmWorld& w, double ab, const std::string& mode, double scale, int positive,
                         std::optional<int> negative, const Eigen::MatrixXd& inits, double step_size, int steps,
                         int burn_in, int thin, std::uint64_t seed) {
        const auto g = guidance(mode, scale, positive, negative);
        LangevinConfig lc;
        lc.step_size = step_size > 0 ? step_size : default_langevin_step(w, ab);
        lc.steps = steps;
        lc.burn_in = burn_in;
        lc.thin = thin;
        const double radius = 10.0 * default_grid(w, ab, 2).extent();
        std::vector<Vec> xs;
        {
            py::gil_scoped_release release;
            xs = langevin_chains([&](const Vec& z) { return composed_score(w, z, ab, g); }, unstack(inits), lc, seed,
                                 radius);
        }
        return stack(xs, w.dim());
    }, py::arg("world"), py::arg("alpha_bar"), py::arg("mode"), py::arg("scale"), py::arg("positive") = 1,
          py::arg("negative") = py::none(), py::arg("inits"), py::arg("step_size") = 0.0, py::arg("steps") = 100000,
          py::arg("burn_in") = 1000, py::arg("thin") = 1, py::arg("seed") = 0);

    m.def("dnp", [](const GmmWorld& w, const NoiseSchedule& s, int positive, double s_dns, double s_final,
                    std::uint64_t seed) {
        const OracleNoiseSource src(w, s);
        DnpRunConfig dc;
        dc.positive = positive;
        dc.s_dns = s_dns;
        dc.s_final = s_final;
        dc.seed = seed;
        const DnpResult r = dnp_generate(src, w, s, dc);
        py::dict d;
        d["negative_sample"] = r.negative_sample;
        d["negative_condition"] = r.negative_condition;
        d["final_sample"] = r.final_sample;
        d["baseline_sample"] = r.baseline_sample;
        d["compliance_cfg"] = r.compliance_baseline;
        d["compliance_dns"] = r.compliance_dns;
        d["compliance_dnp"] = r.compliance_final;
        return d;
    }, py::arg("world"), py::arg("schedule"), py::arg("positive") = 1, py::arg("s_dns") = 3.0, py::arg("s_final") = 3.0,
          py::arg("seed") = 0);
    m.def("infer_negative_condition", [](const GmmWorld& w, const Vec& z, int p, bool allow_p) {
        return infer_negative_condition(w, z, p, CaptionerPolicy{allow_p});
    }, py::arg("world"), py::arg("z"), py::arg("p"), py::arg("allow_p") = false);

    py::class_<DenoiserParams>(m, "Denoiser")
        .def_static("load", &load_checkpoint)
        .def("save", [](const DenoiserParams& p, const std::filesystem::path& path) { save_checkpoint(p, path); })
        .def("eps", &eps_theta, py::arg("z"), py::arg("t"), py::arg("c"))
        .def_property_readonly("parameter_count", [](const DenoiserParams& p) { return p.tensors.size(); });
    m.def("train", [](const GmmWorld& w, const NoiseSchedule& s, std::vector<int> hidden, int steps, int batch_size,
                      double learning_rate, double p_uncond, std::uint64_t seed) {
        DenoiserArch arch;
        arch.dim = w.dim();
        arch.conditions = w.condition_count();
        arch.time_steps = s.steps();
        arch.hidden = std::move(hidden);
        TrainConfig tc;
        tc.steps = steps;
        tc.batch_size = batch_size;
        tc.learning_rate = tc.final_learning_rate = learning_rate;
        tc.p_uncond = p_uncond;
        tc.seed = seed;
        std::optional<TrainResult> r;
        {
            py::gil_scoped_release release;
            r = train(DenoiserParams::initialize(arch, seed), w, s, tc);
        }
        return py::make_tuple(std::move(r->params), std::move(r->losses));
    }, py::arg("world"), py::arg("schedule"), py::arg("hidden") = std::vector<int>{128, 128, 128},
          py::arg("steps") = 20000, py::arg("batch_size") = 128, py::arg("learning_rate") = 1e-3,
          py::arg("p_uncond") = 0.1, py::arg("seed") = 0);
    m.def("heldout_eps_mse", &heldout_eps_mse, py::arg("denoiser"), py::arg("world"), py::arg("schedule"), py::arg("c"),
          py::arg("points") = 2000, py::arg("seed") = 0);

    m.def("total_variation", py::overload_cast<const std::vector<double>&, const std::vector<double>&>(&total_variation));
    m.def("sign_test", &sign_test, py::arg("deltas"));
}
