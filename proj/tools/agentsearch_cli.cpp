#include "agentsearch/config.hpp"
#include "agentsearch/error.hpp"
#include "agentsearch/event_log.hpp"
#include "agentsearch/harness.hpp"
#include "agentsearch/serialization.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>

using namespace agentsearch;

namespace {

struct ConfigArgs {
    std::string path;
    std::map<std::string, std::string> overrides;
};

void add_config_options(CLI::App& cmd, ConfigArgs& args)
{
    cmd.add_option("--config", args.path, "Run configuration (JSON)");
    for (const auto& key : scalar_config_keys()) {
        cmd.add_option_function<std::string>(
            "--" + key, [&args, key](const std::string& v) { args.overrides[key] = v; },
            "Override config key '" + key + "'");
    }
}

RunConfig resolve_config(const ConfigArgs& args)
{
    json j = json::object();
    if (!args.path.empty()) {
        std::ifstream in(args.path);
        if (!in) {
            throw ConfigError("config", "cannot open '" + args.path + "'");
        }
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config", std::string("not valid JSON: ") + e.what());
        }
    }
    for (const auto& [key, value] : args.overrides) {
        set_scalar_key(j, key, value);
    }
    return config_from_json(j);
}

void write_text(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    out << text;
}

// "math=0.5,code=0.5"
std::vector<std::pair<std::string, double>> parse_mix(const std::string& s, const std::string& key)
{
    std::vector<std::pair<std::string, double>> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const std::string part = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        const auto eq = part.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(key, "expected name=weight pairs, got '" + part + "'");
        }
        try {
            out.emplace_back(part.substr(0, eq), parse_double(part.substr(eq + 1)));
        } catch (const std::invalid_argument&) {
            throw ConfigError(key, "bad weight in '" + part + "'");
        }
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Query-conditioned multi-agent workflow search"};
    app.require_subcommand(1);

    // search
    ConfigArgs search_cfg;
    std::string search_tasks, search_log, search_snapshot, search_metrics;
    auto* search = app.add_subcommand("search", "Run the online search loop over a task stream");
    add_config_options(*search, search_cfg);
    search->add_option("--tasks", search_tasks, "Task stream (JSON lines)")->required();
    search->add_option("--log", search_log, "Event log output (newline-delimited JSON)");
    search->add_option("--snapshot", search_snapshot, "Final snapshot output");
    search->add_option("--metrics", search_metrics, "Metrics output (default stdout)");

    // eval
    ConfigArgs eval_cfg;
    std::string eval_snapshot, eval_tasks, eval_out;
    std::uint64_t eval_seed = 0;
    auto* eval = app.add_subcommand("eval", "Evaluate a frozen snapshot without learning");
    add_config_options(*eval, eval_cfg);
    eval->add_option("--snapshot", eval_snapshot, "Snapshot to evaluate")->required();
    eval->add_option("--tasks", eval_tasks, "Task stream (JSON lines)")->required();
    eval->add_option("--eval_seed", eval_seed, "Seed for sampling and execution");
    eval->add_option("--out", eval_out, "Metrics output (default stdout)");

    // explain
    std::string explain_id, explain_log, explain_format = "text", explain_out, explain_alt;
    std::optional<std::size_t> explain_position;
    ExplainOptions explain_opts;
    bool no_cf = false, no_attention = false;
    auto* explain = app.add_subcommand("explain", "Explain the architecture chosen for one logged query");
    explain->add_option("query-id", explain_id, "Query id from the event log")->required();
    explain->add_option("--log", explain_log, "Event log of the run")->required();
    explain->add_option("--format", explain_format, "text or structured")
        ->check(CLI::IsMember({"text", "structured"}));
    explain->add_option("--samples", explain_opts.samples, "Samples per counterfactual estimate");
    explain->add_option("--seed", explain_opts.seed, "Seed for counterfactual sampling");
    explain->add_option("--position", explain_position, "Step position (0-based) to swap");
    explain->add_option("--alternative", explain_alt, "Operator to swap in at --position");
    explain->add_flag("--no-counterfactuals", no_cf, "Skip counterfactual estimates");
    explain->add_flag("--no-attention", no_attention, "Skip the attention map");
    explain->add_option("--out", explain_out, "Report output (default stdout)");

    // replay
    std::string replay_log, replay_snapshot;
    std::optional<std::size_t> replay_truncate;
    auto* replay_cmd = app.add_subcommand("replay", "Rebuild engine state from an event log");
    replay_cmd->add_option("--log", replay_log, "Event log")->required();
    replay_cmd->add_option("--truncate", replay_truncate, "Replay only the first N events");
    replay_cmd->add_option("--snapshot", replay_snapshot, "Write the reconstructed snapshot here");

    // gen-tasks
    std::string gen_spec, gen_out, gen_domains, gen_tiers;
    std::optional<std::size_t> gen_count;
    std::optional<std::uint64_t> gen_seed;
    std::optional<double> gen_mean, gen_spread;
    auto* gen = app.add_subcommand("gen-tasks", "Generate a synthetic task stream");
    gen->add_option("--spec", gen_spec, "Generator spec (JSON)");
    gen->add_option("--count", gen_count, "Number of tasks");
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--complexity_mean", gen_mean, "Mean complexity in [0, 5]");
    gen->add_option("--complexity_spread", gen_spread, "Half-width of the complexity range");
    gen->add_option("--domain_mix", gen_domains, "Domain weights, e.g. math=0.5,code=0.5");
    gen->add_option("--tier_mix", gen_tiers, "Tier weights, e.g. standard=0.8,premium=0.2");
    gen->add_option("--out", gen_out, "Output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (search->parsed()) {
            const RunConfig config = resolve_config(search_cfg);
            const auto tasks = read_tasks(search_tasks);
            const SearchResult result = run_search(config, tasks);
            if (!search_log.empty()) {
                result.log.save(search_log);
            }
            if (!search_snapshot.empty()) {
                save_snapshot(result.state, search_snapshot);
            }
            write_text(search_metrics, metrics_to_json(result.metrics).dump(2) + "\n");
        } else if (eval->parsed()) {
            const RunConfig config = resolve_config(eval_cfg);
            const EngineState snapshot = load_snapshot(eval_snapshot);
            const auto tasks = read_tasks(eval_tasks);
            auto backend = make_backend(config);
            const EvalResult result = run_eval(snapshot, config, tasks, *backend, eval_seed);
            write_text(eval_out, eval_to_json(result).dump(2) + "\n");
        } else if (explain->parsed()) {
            explain_opts.format = explain_format == "text" ? ReportFormat::text : ReportFormat::structured;
            explain_opts.attention = !no_attention;
            explain_opts.auto_counterfactuals = !no_cf;
            if (explain_position.has_value() != !explain_alt.empty()) {
                throw std::invalid_argument("--position and --alternative must be given together");
            }
            if (explain_position) {
                explain_opts.counterfactuals.emplace_back(*explain_position, explain_alt);
            }
            const EventLog log = EventLog::load(explain_log);
            std::string report = explain_query(log, explain_id, explain_opts);
            if (report.empty() || report.back() != '\n') {
                report += '\n';
            }
            write_text(explain_out, report);
        } else if (replay_cmd->parsed()) {
            EventLog log = EventLog::load(replay_log);
            if (replay_truncate) {
                log = log.prefix(*replay_truncate);
            }
            const ReplayResult result = replay(log);
            if (!replay_snapshot.empty()) {
                save_snapshot(result.state, replay_snapshot);
            }
            json summary = {{"events_applied", result.events_applied},
                            {"queries", result.state.queries},
                            {"supernet_version", result.state.supernet.version},
                            {"active_pool", result.state.supernet.active_pool()}};
            std::cout << summary.dump(2) << "\n";
        } else if (gen->parsed()) {
            TaskGenSpec spec;
            if (!gen_spec.empty()) {
                std::ifstream in(gen_spec);
                if (!in) {
                    throw ConfigError("spec", "cannot open '" + gen_spec + "'");
                }
                spec = task_spec_from_json(json::parse(in));
            }
            if (gen_count) spec.count = *gen_count;
            if (gen_seed) spec.seed = *gen_seed;
            if (gen_mean) spec.complexity_mean = *gen_mean;
            if (gen_spread) spec.complexity_spread = *gen_spread;
            if (!gen_domains.empty()) spec.domain_mix = parse_mix(gen_domains, "domain_mix");
            if (!gen_tiers.empty()) spec.tier_mix = parse_mix(gen_tiers, "tier_mix");
            const auto tasks = gen_tasks(spec);
            std::string text;
            for (const auto& t : tasks) {
                text += json(t).dump() + "\n";
            }
            write_text(gen_out, text);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const CorruptionError& e) {
        std::cerr << "corrupt input: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
