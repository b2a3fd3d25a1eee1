#pragma once

#include "agentsearch/config.hpp"
#include "agentsearch/event_log.hpp"
#include "agentsearch/executor.hpp"
#include "agentsearch/explain.hpp"
#include "agentsearch/feedback.hpp"
#include "agentsearch/lifecycle.hpp"
#include "agentsearch/supernet.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace agentsearch {

/// Everything the search loop mutates.
struct EngineState {
    SupernetState supernet;
    OperatorRegistry registry;
    OperatorRewards rewards;
    FeedbackWeights weights;
    LifecycleState lifecycle;
    UsageWindow window{100};
    std::uint64_t queries = 0;
};

EngineState initial_state(const RunConfig& config);

nlohmann::json state_to_json(const EngineState& state);
/// Throws CorruptionError when the snapshot is malformed or inconsistent.
EngineState state_from_json(const nlohmann::json& j);
void save_snapshot(const EngineState& state, const std::string& path);
EngineState load_snapshot(const std::string& path);

std::unique_ptr<ExecutionBackend> make_backend(const RunConfig& config);
std::unique_ptr<FusionGenerator> make_fusion_generator(const RunConfig& config);

struct QueryOutcome {
    std::string query_id;
    double complexity = 0.0;
    Architecture architecture;
    double utility = 0.0;
    double cost = 0.0;
    double lambda = 0.0;
    double objective = 0.0;
    int failed_steps = 0;
};

struct RunMetrics {
    std::size_t queries = 0;
    double mean_utility = 0.0;
    double mean_cost = 0.0;
    double mean_objective = 0.0;
    /// Mean objective over the last `window` queries (all of them when fewer).
    double final_window_objective = 0.0;
    std::size_t fusions = 0;
    std::size_t failed_fusions = 0;
    std::size_t eliminations = 0;
    std::vector<std::string> final_pool;
};

struct SearchResult {
    EngineState state;
    EventLog log;
    std::vector<QueryOutcome> outcomes;
    RunMetrics metrics;
};

/// The online loop over `tasks`. Fully determined by (config, tasks) with
/// the simulated backend.
SearchResult run_search(const RunConfig& config, const std::vector<Task>& tasks);
SearchResult run_search(const RunConfig& config, const std::vector<Task>& tasks, ExecutionBackend& backend,
                        FusionGenerator& generator);

nlohmann::json metrics_to_json(const RunMetrics& metrics);

// ---------------------------------------------------------------------------

struct EvalBucket {
    std::string label;  // "[k,k+1)" on the complexity scale
    std::size_t count = 0;
    double mean_utility = 0.0;
    double mean_cost = 0.0;
    double mean_objective = 0.0;
};

struct EvalResult {
    std::size_t queries = 0;
    double mean_utility = 0.0;
    double mean_cost = 0.0;
    double mean_objective = 0.0;
    std::vector<EvalBucket> by_complexity;
    std::vector<QueryOutcome> records;
};

/// Samples and executes every task against a frozen snapshot. Nothing is
/// learned. Throws std::invalid_argument when the snapshot does not fit the
/// config (unknown operators, feature dimension).
EvalResult run_eval(const EngineState& snapshot, const RunConfig& config, const std::vector<Task>& tasks,
                    ExecutionBackend& backend, std::uint64_t seed);
nlohmann::json eval_to_json(const EvalResult& result);

// ---------------------------------------------------------------------------

struct TaskGenSpec {
    std::size_t count = 100;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, double>> domain_mix{{"math", 1.0}};
    std::vector<std::pair<std::string, double>> tier_mix{{"standard", 1.0}};
    double complexity_mean = 2.5;
    /// Half-width of the uniform complexity range, shrunk to stay in [0, 5].
    double complexity_spread = 1.0;
    std::map<std::string, std::set<std::string>> required_tags{
        {"math", {"cot", "self_consistency"}},
        {"basic_math", {"cot"}},
        {"code", {"debate", "refine"}},
        {"tool", {"react"}},
    };
    /// One list of levels per query factor; each task draws one level per list.
    std::vector<std::vector<std::string>> factor_levels;
    std::string id_prefix = "q";
};

TaskGenSpec task_spec_from_json(const nlohmann::json& j);
std::vector<Task> gen_tasks(const TaskGenSpec& spec);

/// One JSON task per line.
void write_tasks(const std::vector<Task>& tasks, const std::string& path);
std::vector<Task> read_tasks(const std::string& path);

// ---------------------------------------------------------------------------

struct ReplayResult {
    RunConfig config;
    EngineState state;
    std::size_t events_applied = 0;
};

/// Rebuilds the engine state by reapplying the log's events. Every logged
/// snapshot and feedback outcome is checked against the reconstruction.
/// An empty log needs `config` and yields its initial state.
ReplayResult replay(const EventLog& log, const std::optional<RunConfig>& config = std::nullopt);

// ---------------------------------------------------------------------------

struct ExplainOptions {
    /// (0-based position, alternative). Empty: one swap per step against the
    /// most probable other operator of that step's layer.
    std::vector<std::pair<std::size_t, std::string>> counterfactuals;
    bool auto_counterfactuals = true;
    std::size_t samples = 200;
    std::uint64_t seed = 0;
    bool attention = true;
    ReportFormat format = ReportFormat::text;
};

/// Report for one logged query, computed from the state just before it ran.
/// `backend` drives counterfactual estimates; null uses the logged config's.
std::string explain_query(const EventLog& log, const std::string& query_id, const ExplainOptions& options,
                          ExecutionBackend* backend = nullptr);

}  // namespace agentsearch
