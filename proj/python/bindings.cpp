// JSON-in, JSON-out bindings. Every structured value crosses the boundary as
// a JSON string; the Python package decodes it.

#include "agentsearch/config.hpp"
#include "agentsearch/costmodel.hpp"
#include "agentsearch/error.hpp"
#include "agentsearch/harness.hpp"
#include "agentsearch/serialization.hpp"
#include "agentsearch/supernet.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace agentsearch;

namespace {

json parse(const std::string& s) { return json::parse(s); }

SupernetState state_of(const std::string& s) { return parse(s).get<SupernetState>(); }

QueryFeatures features_of(const std::string& s) { return parse(s).get<QueryFeatures>(); }

std::vector<Task> tasks_of(const std::string& s)
{
    std::vector<Task> out;
    for (const auto& t : parse(s)) out.push_back(t.get<Task>());
    return out;
}

EventLog log_of(const std::string& ndjson)
{
    std::istringstream in(ndjson);
    return EventLog::parse(in);
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "agentsearch core bindings (JSON strings in and out)";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<CorruptionError>(m, "CorruptionError", PyExc_ValueError);

    m.def("featurize", [](const std::string& meta) {
        const auto j = parse(meta);
        QueryMetadata q{j.at("domain"), j.at("complexity"), j.value("tier", std::string("standard")),
                        j.value("factors", std::vector<std::string>{})};
        return json(featurize(q, FeatureSchema{})).dump();
    });

    m.def("make_supernet", [](const std::vector<std::string>& pool, int layers, std::size_t dim) {
        return json(make_supernet(pool, layers, dim)).dump();
    });
    m.def("layer_distribution", [](const std::string& state, int layer, const std::string& features) {
        return json(layer_distribution(state_of(state), layer, features_of(features))).dump();
    });
    m.def("sample_architecture", [](const std::string& state, const std::string& features, std::uint64_t seed) {
        return json(sample_architecture(state_of(state), features_of(features), seed)).dump();
    });
    m.def("architecture_probability", [](const std::string& state, const std::string& features, const std::string& arch) {
        return architecture_probability(state_of(state), features_of(features), parse(arch).get<Architecture>());
    });
    m.def("update_probabilities", [](const std::string& state, int layer, const std::map<std::string, double>& rewards,
                                     double mu, double gamma_fb) {
        return json(update_probabilities(state_of(state), layer, rewards, mu, gamma_fb)).dump();
    });
    m.def("add_operator", [](const std::string& state, const std::string& op) {
        return json(add_operator(state_of(state), parse(op).get<OperatorSpec>())).dump();
    });
    m.def("remove_operator", [](const std::string& state, const std::string& id) {
        return json(remove_operator(state_of(state), id)).dump();
    });

    m.def("load_factor", &load_factor, py::arg("load"), py::arg("load_normal"), py::arg("beta_load"));
    m.def("adaptive_weight", &adaptive_weight, py::arg("w_base"), py::arg("eta"), py::arg("delta"));
    m.def("aggregate_cost", [](const std::string& dims) { return aggregate_cost(parse(dims).get<CostDimensions>()); });

    m.def("default_config", [] { return config_to_json(default_config()).dump(); });
    m.def("validate_config", [](const std::string& cfg) { return config_to_json(config_from_json(parse(cfg))).dump(); });

    m.def("gen_tasks", [](const std::string& spec) { return json(gen_tasks(task_spec_from_json(parse(spec)))).dump(); });

    m.def("run_search", [](const std::string& cfg, const std::string& tasks) {
        const auto r = run_search(config_from_json(parse(cfg)), tasks_of(tasks));
        return json{{"log", r.log.to_ndjson()}, {"state", state_to_json(r.state)}, {"metrics", metrics_to_json(r.metrics)}}
            .dump();
    });
    m.def("run_eval", [](const std::string& snapshot, const std::string& cfg, const std::string& tasks,
                         std::uint64_t seed) {
        const auto config = config_from_json(parse(cfg));
        auto backend = make_backend(config);
        return eval_to_json(run_eval(state_from_json(parse(snapshot)), config, tasks_of(tasks), *backend, seed)).dump();
    });
    m.def("replay", [](const std::string& ndjson) {
        const auto r = replay(log_of(ndjson));
        return json{{"state", state_to_json(r.state)}, {"events_applied", r.events_applied}}.dump();
    });
    m.def("explain", [](const std::string& ndjson, const std::string& query_id, bool structured, std::size_t samples,
                        std::uint64_t seed) {
        ExplainOptions opts;
        opts.format = structured ? ReportFormat::structured : ReportFormat::text;
        opts.samples = samples;
        opts.seed = seed;
        return explain_query(log_of(ndjson), query_id, opts);
    }, py::arg("log"), py::arg("query_id"), py::arg("structured") = false, py::arg("samples") = 200,
       py::arg("seed") = 0);
}
