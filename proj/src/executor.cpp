#include "agentsearch/executor.hpp"

#include "agentsearch/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <stdexcept>

namespace agentsearch {

ExecutionRecord execute_architecture(ExecutionBackend& backend, const OperatorRegistry& registry,
                                     const Architecture& arch, const Task& task, double early_exit_threshold,
                                     std::uint64_t seed, bool early_exit_enabled)
{
    if (!(early_exit_threshold > 0.0 && early_exit_threshold <= 1.0)) {
        throw std::invalid_argument("early_exit_threshold must lie in (0, 1]");
    }
    if (arch.steps.empty()) {
        throw std::invalid_argument("cannot execute an empty architecture");
    }

    ExecutionRecord record;
    record.query_id = task.id;
    record.executed.terminated_by = arch.terminated_by;
    StepContext context;

    for (std::size_t i = 0; i < arch.steps.size(); ++i) {
        const auto& step = arch.steps[i];
        const OperatorSpec& op = registry.at(step.operator_id);

        StepResult result;
        try {
            result = backend.execute_step(op, task, context, derive_seed(seed, "step", i));
        } catch (const std::exception& e) {
            result = StepResult{};
            result.diagnostic = std::string("backend error: ") + e.what();
        }
        result.operator_id = op.id;

        record.total_tokens += result.tokens;
        record.total_api_calls += result.api_calls;
        record.total_latency += result.latency;
        if (!result.success) {
            ++record.failed_steps;
        }
        record.privacy_risk = std::max(record.privacy_risk, op.privacy_risk);
        if (!result.answer.empty()) {
            record.final_answer = result.answer;
            if (!context.text.empty()) {
                context.text += '\n';
            }
            context.text += result.answer;
        }
        context.prior_operator_ids.push_back(op.id);
        context.prior_tags.insert(op.capability_tags.begin(), op.capability_tags.end());
        record.executed.steps.push_back(step);

        const bool stop = early_exit_enabled && result.confidence >= early_exit_threshold;
        record.steps.push_back(std::move(result));
        if (stop) {
            if (i + 1 < arch.steps.size()) {
                record.executed.terminated_by = Termination::early_exit;
            }
            break;
        }
    }

    record.failure_rate = static_cast<double>(record.failed_steps) / static_cast<double>(record.steps.size());
    record.utility = utility(record.final_answer, task.ground_truth);
    return record;
}

std::string normalize_answer(const std::string& s)
{
    auto first = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
    auto last = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
    std::string out = first < last ? std::string(first, last) : std::string();
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::optional<double> utility(const std::string& final_answer, const std::optional<std::string>& ground_truth)
{
    if (!ground_truth) {
        return std::nullopt;
    }
    return normalize_answer(final_answer) == normalize_answer(*ground_truth) ? 1.0 : 0.0;
}

// ---------------------------------------------------------------------------

double logistic(double z)
{
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double SimulatedWorld::success_logit(const OperatorSpec& op, const Task& task, const StepContext& context) const
{
    double z = base - task.complexity;
    for (const auto& tag : task.required_tags) {
        if (op.capability_tags.count(tag) == 0 && context.prior_tags.count(tag) == 0) {
            continue;
        }
        if (auto it = tag_quality.find(tag); it != tag_quality.end()) {
            z += it->second;
        }
    }
    if (!context.prior_operator_ids.empty()) {
        if (auto it = synergy.find({context.prior_operator_ids.back(), op.id}); it != synergy.end()) {
            z += it->second;
        }
    }
    if (auto it = operator_bonus.find(op.id); it != operator_bonus.end()) {
        z += it->second;
    }
    return z;
}

const Task* SimulatedWorld::find_task(const std::string& id) const
{
    for (const auto& t : tasks) {
        if (t.id == id) {
            return &t;
        }
    }
    return nullptr;
}

StepResult simulated_execute(const SimulatedWorld& world, const OperatorSpec& op, const Task& task,
                             const StepContext& context, std::uint64_t seed)
{
    if (!world.tasks.empty() && world.find_task(task.id) == nullptr) {
        throw std::invalid_argument("task '" + task.id + "' is not part of the simulated world");
    }
    Rng rng(derive_seed(world.master_seed, "simulated_step", seed));
    const double noise = world.noise_scale > 0.0 ? rng.uniform(-world.noise_scale, world.noise_scale) : 0.0;
    const double p = logistic(world.success_logit(op, task, context) + noise);
    const bool success = rng.uniform01() < p;
    const double token_scale = 1.0 + rng.uniform(-world.token_jitter, world.token_jitter);
    const double latency_scale = 1.0 + rng.uniform(-world.latency_jitter, world.latency_jitter);

    StepResult out;
    out.operator_id = op.id;
    out.success = success;
    out.confidence = p;
    out.tokens = static_cast<std::int64_t>(std::llround(op.base_token_cost * token_scale));
    out.api_calls = op.base_api_calls;
    out.latency = op.base_latency * latency_scale;
    if (success && task.ground_truth) {
        out.answer = *task.ground_truth;
    } else {
        out.answer = "unresolved:" + task.id + ":" + op.id;
    }
    return out;
}

}  // namespace agentsearch
