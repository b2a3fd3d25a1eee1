#include "agentsearch/serialization.hpp"

#include "agentsearch/error.hpp"

#include <charconv>
#include <stdexcept>

namespace agentsearch {

std::string format_double(double x)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc()) {
        throw std::runtime_error("format_double failed");
    }
    return std::string(buf, end);
}

double parse_double(std::string_view s)
{
    double out = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || end != s.data() + s.size()) {
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    }
    return out;
}

// ---------------------------------------------------------------------------

void to_json(json& j, const OperatorSpec& op)
{
    j = json{{"id", op.id},
             {"version", op.version},
             {"capability_tags", op.capability_tags},
             {"prompt_template", op.prompt_template},
             {"base_token_cost", op.base_token_cost},
             {"base_api_calls", op.base_api_calls},
             {"base_latency", op.base_latency},
             {"privacy_risk", op.privacy_risk},
             {"provenance", std::string(to_string(op.provenance))},
             {"parents", op.parents}};
}

void from_json(const json& j, OperatorSpec& op)
{
    op = OperatorSpec{};
    j.at("id").get_to(op.id);
    op.version = j.value("version", std::uint64_t{1});
    if (j.contains("capability_tags")) {
        j.at("capability_tags").get_to(op.capability_tags);
    }
    op.prompt_template = j.value("prompt_template", std::string());
    op.base_token_cost = j.value("base_token_cost", 0.0);
    op.base_api_calls = j.value("base_api_calls", 1);
    op.base_latency = j.value("base_latency", 0.0);
    op.privacy_risk = j.value("privacy_risk", 0.0);
    op.provenance = provenance_from_string(j.value("provenance", std::string("seed")));
    if (j.contains("parents")) {
        j.at("parents").get_to(op.parents);
    }
}

void to_json(json& j, const OperatorRegistry& registry)
{
    j = json::array();
    for (const auto& [id, spec] : registry.all()) {
        j.push_back(spec);
    }
}

void from_json(const json& j, OperatorRegistry& registry)
{
    registry = OperatorRegistry{};
    for (const auto& item : j) {
        registry.add(item.get<OperatorSpec>());
    }
}

void to_json(json& j, const SupernetState& state)
{
    json layers = json::array();
    for (const auto& row : state.logits) {
        layers.push_back(row);
    }
    j = json{{"format", "agentsearch.supernet"},
             {"num_layers", state.num_layers()},
             {"feature_dim", state.feature_dim},
             {"version", state.version},
             {"active_pool", state.active_pool()},
             {"logits", std::move(layers)},
             {"conditioning", state.conditioning}};
}

void from_json(const json& j, SupernetState& state)
{
    state = SupernetState{};
    j.at("feature_dim").get_to(state.feature_dim);
    j.at("version").get_to(state.version);
    for (const auto& row : j.at("logits")) {
        state.logits.push_back(row.get<std::map<std::string, double>>());
    }
    j.at("conditioning").get_to(state.conditioning);
    if (j.contains("num_layers") && j.at("num_layers").get<int>() != state.num_layers()) {
        throw CorruptionError("supernet snapshot: num_layers does not match logits");
    }
    if (j.contains("active_pool") && j.at("active_pool").get<std::vector<std::string>>() != state.active_pool()) {
        throw CorruptionError("supernet snapshot: active_pool does not match conditioning");
    }
    try {
        state.validate();
    } catch (const std::logic_error& e) {
        throw CorruptionError(std::string("supernet snapshot: ") + e.what());
    }
}

void to_json(json& j, const Architecture& arch)
{
    json steps = json::array();
    for (const auto& s : arch.steps) {
        steps.push_back({{"layer", s.layer}, {"operator", s.operator_id}});
    }
    j = json{{"steps", std::move(steps)}, {"terminated_by", std::string(to_string(arch.terminated_by))}};
}

void from_json(const json& j, Architecture& arch)
{
    arch = Architecture{};
    for (const auto& s : j.at("steps")) {
        arch.steps.push_back({s.at("layer").get<int>(), s.at("operator").get<std::string>()});
    }
    arch.terminated_by = termination_from_string(j.at("terminated_by").get<std::string>());
}

void to_json(json& j, const Task& task)
{
    j = json{{"id", task.id},
             {"domain", task.domain},
             {"complexity", task.complexity},
             {"tier", task.tier},
             {"required_tags", task.required_tags},
             {"factors", task.factors},
             {"prompt", task.prompt}};
    j["ground_truth"] = task.ground_truth ? json(*task.ground_truth) : json(nullptr);
}

void from_json(const json& j, Task& task)
{
    task = Task{};
    j.at("id").get_to(task.id);
    j.at("domain").get_to(task.domain);
    j.at("complexity").get_to(task.complexity);
    task.tier = j.value("tier", std::string("standard"));
    if (j.contains("required_tags")) {
        j.at("required_tags").get_to(task.required_tags);
    }
    if (j.contains("factors")) {
        j.at("factors").get_to(task.factors);
    }
    task.prompt = j.value("prompt", std::string());
    if (j.contains("ground_truth") && !j.at("ground_truth").is_null()) {
        task.ground_truth = j.at("ground_truth").get<std::string>();
    }
}

void to_json(json& j, const QueryFeatures& features)
{
    j = json{{"domain", features.domain_tag},
             {"complexity", features.complexity},
             {"tier", features.user_tier},
             {"factors", features.extra_factors},
             {"feature_vector", features.feature_vector}};
}

void from_json(const json& j, QueryFeatures& features)
{
    features = QueryFeatures{};
    j.at("domain").get_to(features.domain_tag);
    j.at("complexity").get_to(features.complexity);
    j.at("tier").get_to(features.user_tier);
    j.at("factors").get_to(features.extra_factors);
    j.at("feature_vector").get_to(features.feature_vector);
}

void to_json(json& j, const StepResult& step)
{
    j = json{{"operator", step.operator_id}, {"answer", step.answer},     {"tokens", step.tokens},
             {"api_calls", step.api_calls},  {"latency", step.latency},   {"success", step.success},
             {"confidence", step.confidence}, {"attempts", step.attempts}, {"diagnostic", step.diagnostic}};
}

void from_json(const json& j, StepResult& step)
{
    step = StepResult{};
    j.at("operator").get_to(step.operator_id);
    j.at("answer").get_to(step.answer);
    j.at("tokens").get_to(step.tokens);
    j.at("api_calls").get_to(step.api_calls);
    j.at("latency").get_to(step.latency);
    j.at("success").get_to(step.success);
    j.at("confidence").get_to(step.confidence);
    step.attempts = j.value("attempts", 1);
    step.diagnostic = j.value("diagnostic", std::string());
}

void to_json(json& j, const ExecutionRecord& record)
{
    j = json{{"query_id", record.query_id},
             {"steps", record.steps},
             {"total_tokens", record.total_tokens},
             {"total_api_calls", record.total_api_calls},
             {"total_latency", record.total_latency},
             {"failed_steps", record.failed_steps},
             {"failure_rate", record.failure_rate},
             {"privacy_risk", record.privacy_risk},
             {"final_answer", record.final_answer},
             {"executed", record.executed}};
    j["utility"] = record.utility ? json(*record.utility) : json(nullptr);
}

void from_json(const json& j, ExecutionRecord& record)
{
    record = ExecutionRecord{};
    j.at("query_id").get_to(record.query_id);
    j.at("steps").get_to(record.steps);
    j.at("total_tokens").get_to(record.total_tokens);
    j.at("total_api_calls").get_to(record.total_api_calls);
    j.at("total_latency").get_to(record.total_latency);
    j.at("failed_steps").get_to(record.failed_steps);
    j.at("failure_rate").get_to(record.failure_rate);
    j.at("privacy_risk").get_to(record.privacy_risk);
    j.at("final_answer").get_to(record.final_answer);
    j.at("executed").get_to(record.executed);
    if (!j.at("utility").is_null()) {
        record.utility = j.at("utility").get<double>();
    }
}

void to_json(json& j, const CostDimensions& dims)
{
    j = json{{"token", dims.token_cost},
             {"api", dims.api_cost},
             {"latency", dims.latency_cost},
             {"failure", dims.failure_cost},
             {"privacy", dims.privacy_cost}};
}

void from_json(const json& j, CostDimensions& dims)
{
    j.at("token").get_to(dims.token_cost);
    j.at("api").get_to(dims.api_cost);
    j.at("latency").get_to(dims.latency_cost);
    j.at("failure").get_to(dims.failure_cost);
    j.at("privacy").get_to(dims.privacy_cost);
}

void to_json(json& j, const LayerDistribution& dist)
{
    j = json{{"choices", dist.choices}, {"probs", dist.probs}};
}

void from_json(const json& j, LayerDistribution& dist)
{
    j.at("choices").get_to(dist.choices);
    j.at("probs").get_to(dist.probs);
}

void to_json(json& j, const OperatorRewards& rewards)
{
    j = json{{"values", rewards.values}, {"eta_reward", rewards.eta_reward}};
}

void from_json(const json& j, OperatorRewards& rewards)
{
    j.at("values").get_to(rewards.values);
    j.at("eta_reward").get_to(rewards.eta_reward);
}

void to_json(json& j, const FeedbackWeights& weights)
{
    j = json{{"omega", weights.omega}, {"xi", weights.xi}, {"zeta", weights.zeta}, {"alpha_fb", weights.alpha_fb}};
}

void from_json(const json& j, FeedbackWeights& weights)
{
    j.at("omega").get_to(weights.omega);
    j.at("xi").get_to(weights.xi);
    j.at("zeta").get_to(weights.zeta);
    j.at("alpha_fb").get_to(weights.alpha_fb);
}

void to_json(json& j, const FeedbackEvent& event)
{
    j = json{{"query_id", event.query_id},
             {"t", event.t},
             {"operators", event.operator_ids},
             {"fe", event.fe},
             {"fi", event.fi},
             {"fs", event.fs},
             {"reward", event.reward},
             {"realized_utility", event.realized_utility},
             {"has_explicit", event.has_explicit},
             {"weights_reset", event.weights_reset},
             {"rewards_after", event.rewards_after},
             {"omega_after", event.omega_after}};
}

void from_json(const json& j, FeedbackEvent& event)
{
    event = FeedbackEvent{};
    j.at("query_id").get_to(event.query_id);
    j.at("t").get_to(event.t);
    j.at("operators").get_to(event.operator_ids);
    j.at("fe").get_to(event.fe);
    j.at("fi").get_to(event.fi);
    j.at("fs").get_to(event.fs);
    j.at("reward").get_to(event.reward);
    j.at("realized_utility").get_to(event.realized_utility);
    event.has_explicit = j.value("has_explicit", true);
    event.weights_reset = j.value("weights_reset", false);
    j.at("rewards_after").get_to(event.rewards_after);
    j.at("omega_after").get_to(event.omega_after);
}

void to_json(json& j, const UsageRecord& record)
{
    j = json{{"query_id", record.query_id},
             {"operators", record.operator_ids},
             {"utility", record.utility},
             {"total_cost", record.total_cost},
             {"per_operator_cost", record.per_operator_cost},
             {"timestamp", record.timestamp},
             {"failure_fraction", record.failure_fraction},
             {"features", record.features}};
}

void from_json(const json& j, UsageRecord& record)
{
    record = UsageRecord{};
    j.at("query_id").get_to(record.query_id);
    j.at("operators").get_to(record.operator_ids);
    j.at("utility").get_to(record.utility);
    j.at("total_cost").get_to(record.total_cost);
    j.at("per_operator_cost").get_to(record.per_operator_cost);
    j.at("timestamp").get_to(record.timestamp);
    record.failure_fraction = j.value("failure_fraction", 0.0);
    if (j.contains("features")) {
        j.at("features").get_to(record.features);
    }
}

void to_json(json& j, const HealthReport& report)
{
    j = json::object();
    for (const auto& [id, h] : report.operators) {
        j[id] = json{{"f", h.f}, {"p", h.p}, {"e", h.e}, {"H", h.h}, {"used", h.used}};
    }
}

void from_json(const json& j, HealthReport& report)
{
    report = HealthReport{};
    for (const auto& [id, item] : j.items()) {
        OperatorHealth h;
        item.at("f").get_to(h.f);
        item.at("p").get_to(h.p);
        item.at("e").get_to(h.e);
        item.at("H").get_to(h.h);
        item.at("used").get_to(h.used);
        report.operators[id] = h;
    }
}

void to_json(json& j, const FusionCandidate& candidate)
{
    j = json{{"pair", {candidate.pair.first, candidate.pair.second}},
             {"correlation", candidate.correlation},
             {"joint_success_rate", candidate.joint_success_rate},
             {"co_occurrence_count", candidate.co_occurrence_count}};
}

void from_json(const json& j, FusionCandidate& candidate)
{
    const auto pair = j.at("pair").get<std::vector<std::string>>();
    if (pair.size() != 2) {
        throw std::invalid_argument("fusion candidate pair must have two entries");
    }
    candidate.pair = {pair[0], pair[1]};
    j.at("correlation").get_to(candidate.correlation);
    j.at("joint_success_rate").get_to(candidate.joint_success_rate);
    j.at("co_occurrence_count").get_to(candidate.co_occurrence_count);
}

void to_json(json& j, const LifecycleEvent& event)
{
    j = json{{"kind", std::string(to_string(event.kind))}};
    switch (event.kind) {
    case LifecycleEventKind::assessment:
        j["report"] = event.report;
        break;
    case LifecycleEventKind::fusion:
        j["candidate"] = *event.candidate;
        j["operator"] = *event.fused;
        j["conditioning_row"] = event.conditioning_row;
        break;
    case LifecycleEventKind::fusion_failed:
        if (event.candidate) {
            j["candidate"] = *event.candidate;
        }
        j["message"] = event.message;
        break;
    case LifecycleEventKind::elimination:
        j["removed"] = event.removed;
        break;
    }
}

void from_json(const json& j, LifecycleEvent& event)
{
    event = LifecycleEvent{};
    event.kind = lifecycle_event_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("report")) {
        j.at("report").get_to(event.report);
    }
    if (j.contains("candidate")) {
        event.candidate = j.at("candidate").get<FusionCandidate>();
    }
    if (j.contains("operator")) {
        event.fused = j.at("operator").get<OperatorSpec>();
    }
    if (j.contains("conditioning_row")) {
        j.at("conditioning_row").get_to(event.conditioning_row);
    }
    if (j.contains("removed")) {
        j.at("removed").get_to(event.removed);
    }
    event.message = j.value("message", std::string());
}

void to_json(json& j, const LifecycleState& state)
{
    j = json{{"health_history", state.health_history}};
}

void from_json(const json& j, LifecycleState& state)
{
    j.at("health_history").get_to(state.health_history);
}

}  // namespace agentsearch
