#pragma once

#include "agentsearch/supernet.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace agentsearch {

struct Task {
    std::string id;
    std::string domain;
    double complexity = 0.0;
    std::string tier = "standard";
    std::set<std::string> required_tags;
    std::optional<std::string> ground_truth;
    std::vector<std::string> factors;
    std::string prompt;

    QueryMetadata metadata() const { return {domain, complexity, tier, factors}; }
    friend bool operator==(const Task&, const Task&) = default;
};

/// What a step sees of the steps before it.
struct StepContext {
    std::string text;  // prior answers, newline separated
    std::vector<std::string> prior_operator_ids;
    std::set<std::string> prior_tags;
};

struct StepResult {
    std::string operator_id;
    std::string answer;
    std::int64_t tokens = 0;
    int api_calls = 0;
    double latency = 0.0;
    bool success = false;
    double confidence = 0.0;
    int attempts = 1;
    std::string diagnostic;
};

struct ExecutionRecord {
    std::string query_id;
    std::vector<StepResult> steps;
    std::int64_t total_tokens = 0;
    int total_api_calls = 0;
    double total_latency = 0.0;
    int failed_steps = 0;
    /// Fraction of failed steps; the harness may smooth it before costing.
    double failure_rate = 0.0;
    /// Highest static privacy risk among executed operators.
    double privacy_risk = 0.0;
    std::string final_answer;
    std::optional<double> utility;
    Architecture executed;
};

class ExecutionBackend {
public:
    virtual ~ExecutionBackend() = default;
    /// May throw; execute_architecture turns exceptions into failed steps.
    virtual StepResult execute_step(const OperatorSpec& op, const Task& task, const StepContext& context,
                                    std::uint64_t seed) = 0;
};

/// Runs the steps in order, feeding each the prior answers. Stops after the
/// first step whose confidence reaches `early_exit_threshold`; the record is
/// then marked early_exit when steps were skipped. Backend errors become
/// failed steps and the pipeline continues.
ExecutionRecord execute_architecture(ExecutionBackend& backend, const OperatorRegistry& registry,
                                     const Architecture& arch, const Task& task, double early_exit_threshold,
                                     std::uint64_t seed, bool early_exit_enabled = true);

/// Trimmed, case-folded copy used for exact-match comparison.
std::string normalize_answer(const std::string& s);

/// 1.0 on normalized exact match, else 0.0; nullopt without ground truth.
std::optional<double> utility(const std::string& final_answer, const std::optional<std::string>& ground_truth);

// ---------------------------------------------------------------------------
// Simulated world
// ---------------------------------------------------------------------------

/// Deterministic stand-in for an LLM backend.
///
/// A step succeeds with probability
///   logistic(base + sum of quality[t] over required tags t held by the
///            operator or by an earlier step - complexity
///            + synergy[(previous op, op)] + bonus[op] + noise)
/// where noise ~ U(-noise_scale, noise_scale). The success probability is
/// also the step's confidence.
struct SimulatedWorld {
    std::vector<Task> tasks;
    double base = 0.0;
    std::map<std::string, double> tag_quality;
    std::map<std::pair<std::string, std::string>, double> synergy;
    std::map<std::string, double> operator_bonus;
    double noise_scale = 0.0;
    double token_jitter = 0.1;
    double latency_jitter = 0.1;
    std::uint64_t master_seed = 0;

    /// Logit before noise.
    double success_logit(const OperatorSpec& op, const Task& task, const StepContext& context) const;
    const Task* find_task(const std::string& id) const;
};

double logistic(double z);

StepResult simulated_execute(const SimulatedWorld& world, const OperatorSpec& op, const Task& task,
                             const StepContext& context, std::uint64_t seed);

class SimulatedBackend final : public ExecutionBackend {
public:
    explicit SimulatedBackend(SimulatedWorld world) : world_(std::move(world)) {}

    StepResult execute_step(const OperatorSpec& op, const Task& task, const StepContext& context,
                            std::uint64_t seed) override
    {
        return simulated_execute(world_, op, task, context, seed);
    }

    const SimulatedWorld& world() const { return world_; }

private:
    SimulatedWorld world_;
};

// ---------------------------------------------------------------------------
// Remote chat-completion endpoint
// ---------------------------------------------------------------------------

struct RemoteEndpoint {
    std::string base_url = "http://127.0.0.1:8000";
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-4o-mini";
    double timeout_seconds = 30.0;
    int max_retries = 3;
    double backoff_base_seconds = 1.0;
    double backoff_factor = 2.0;
    double temperature = 0.0;
    /// "usage" reads usage.prompt_tokens + usage.completion_tokens; "estimate"
    /// always counts four characters per token.
    std::string token_accounting = "usage";

    void validate() const;
};

/// Request body sent for one step (exposed for tests and fixtures).
std::string build_chat_request(const RemoteEndpoint& endpoint, const OperatorSpec& op, const Task& task,
                               const StepContext& context);

/// Never throws for network, HTTP or parse failures: they come back as a
/// failed step with a diagnostic. Retries transport errors, timeouts, 429 and
/// 5xx with exponential backoff, up to `max_retries` extra attempts.
StepResult remote_execute(const RemoteEndpoint& endpoint, const OperatorSpec& op, const Task& task,
                          const StepContext& context);

class RemoteBackend final : public ExecutionBackend {
public:
    explicit RemoteBackend(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

    StepResult execute_step(const OperatorSpec& op, const Task& task, const StepContext& context,
                            std::uint64_t) override
    {
        return remote_execute(endpoint_, op, task, context);
    }

private:
    RemoteEndpoint endpoint_;
};

}  // namespace agentsearch
