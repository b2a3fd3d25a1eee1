#pragma once

#include "agentsearch/costmodel.hpp"
#include "agentsearch/executor.hpp"
#include "agentsearch/feedback.hpp"
#include "agentsearch/lifecycle.hpp"
#include "agentsearch/supernet.hpp"

#include <json.hpp>

#include <string>

namespace agentsearch {

using json = nlohmann::json;

// nlohmann ADL hooks. Doubles are written in shortest round-trip form, so a
// dump/parse cycle reproduces every value bit for bit.

void to_json(json& j, const OperatorSpec& op);
void from_json(const json& j, OperatorSpec& op);

void to_json(json& j, const OperatorRegistry& registry);
void from_json(const json& j, OperatorRegistry& registry);

void to_json(json& j, const SupernetState& state);
void from_json(const json& j, SupernetState& state);

void to_json(json& j, const Architecture& arch);
void from_json(const json& j, Architecture& arch);

void to_json(json& j, const Task& task);
void from_json(const json& j, Task& task);

void to_json(json& j, const QueryFeatures& features);
void from_json(const json& j, QueryFeatures& features);

void to_json(json& j, const StepResult& step);
void from_json(const json& j, StepResult& step);

void to_json(json& j, const ExecutionRecord& record);
void from_json(const json& j, ExecutionRecord& record);

void to_json(json& j, const CostDimensions& dims);
void from_json(const json& j, CostDimensions& dims);

void to_json(json& j, const LayerDistribution& dist);
void from_json(const json& j, LayerDistribution& dist);

void to_json(json& j, const OperatorRewards& rewards);
void from_json(const json& j, OperatorRewards& rewards);

void to_json(json& j, const FeedbackWeights& weights);
void from_json(const json& j, FeedbackWeights& weights);

void to_json(json& j, const FeedbackEvent& event);
void from_json(const json& j, FeedbackEvent& event);

void to_json(json& j, const UsageRecord& record);
void from_json(const json& j, UsageRecord& record);

void to_json(json& j, const HealthReport& report);
void from_json(const json& j, HealthReport& report);

void to_json(json& j, const FusionCandidate& candidate);
void from_json(const json& j, FusionCandidate& candidate);

void to_json(json& j, const LifecycleEvent& event);
void from_json(const json& j, LifecycleEvent& event);

void to_json(json& j, const LifecycleState& state);
void from_json(const json& j, LifecycleState& state);

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);
/// Inverse of format_double. Throws std::invalid_argument on junk.
double parse_double(std::string_view s);

}  // namespace agentsearch
