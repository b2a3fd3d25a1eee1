#pragma once

#include "agentsearch/costmodel.hpp"
#include "agentsearch/lifecycle.hpp"
#include "agentsearch/supernet.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace agentsearch {

struct TraceStep {
    int layer = 1;
    std::string operator_id;
    LayerDistribution distribution;
    /// Probability of `operator_id` in `distribution`.
    double confidence = 0.0;
    std::string rationale;
};

struct UtilityPrediction {
    double mean = 0.0;
    double std = 0.0;
    std::size_t neighbours = 0;
    bool low_evidence = false;
    bool no_history = false;
};

struct DecisionTrace {
    std::string query_id;
    std::string domain;
    double complexity = 0.0;
    std::vector<TraceStep> steps;
    Termination terminated_by = Termination::max_layers;
    UtilityPrediction predicted_utility;
    CostDimensions cost_breakdown;
    /// Mean utility of the same nearest past queries and how many there were.
    double historical_mean = 0.0;
    std::size_t historical_count = 0;
};

inline constexpr std::size_t kDefaultNeighbours = 20;

/// k nearest history records by Euclidean feature distance (ties keep window
/// order). Records without features are skipped.
UtilityPrediction predict_utility(const UsageWindow& history, const std::vector<double>& features, std::size_t k);

/// Fixed rule-table phrase for a capability tag applied to a dominant feature
/// ("high_complexity", "low_complexity" or "domain:<name>").
std::string rationale_phrase(const std::set<std::string>& tags, const std::string& dominant_feature);

/// Read-only. `state` must be the snapshot the architecture was sampled from.
DecisionTrace build_trace(const SupernetState& state, const OperatorRegistry& registry,
                          const FeatureSchema& schema, const QueryFeatures& features, const std::string& query_id,
                          const Architecture& arch, const CostDimensions& cost, const UsageWindow& history,
                          std::size_t k = kDefaultNeighbours);

// ---------------------------------------------------------------------------

struct OutcomeSample {
    double utility = 0.0;
    double cost = 0.0;
};

/// One seeded execution of an architecture on a fixed query.
using OutcomeEstimator = std::function<OutcomeSample(const Architecture&, std::uint64_t seed)>;

struct CounterfactualResult {
    std::size_t position = 0;
    std::string original;
    std::string alternative;
    double delta_performance = 0.0;
    double delta_cost = 0.0;
    /// Sample standard deviation of the per-seed differences.
    double std_performance = 0.0;
    double std_cost = 0.0;
    std::size_t n_samples = 0;
};

/// Monte Carlo estimate of E[U(G')] - E[U(G)] and E[C(G')] - E[C(G)], where
/// G' swaps the operator at `position` (0-based) for `alternative`. Both
/// architectures see the same seeds. Returns zeros without executing when the
/// alternative equals the original.
CounterfactualResult counterfactual(const SupernetState& state, const OutcomeEstimator& estimator,
                                    const Architecture& arch, std::size_t position, const std::string& alternative,
                                    std::size_t n_samples, std::uint64_t seed);

// ---------------------------------------------------------------------------

struct AttentionMap {
    std::vector<std::string> row_labels;
    std::vector<std::string> operators;
    /// rows = feature components, columns = operators; each row sums to 1.
    std::vector<std::vector<double>> weights;
};

/// Fixed pseudo-random embedding of a tag set, one entry per feature component.
std::vector<double> tag_embedding(const std::set<std::string>& tags, std::size_t dim);

/// A_ij = softmax_j(feature_i * embedding(O_j)_i).
AttentionMap attention_map(const std::vector<double>& features, const std::vector<OperatorSpec>& operators,
                           std::vector<std::string> row_labels = {});

// ---------------------------------------------------------------------------

enum class ReportFormat { text, structured };

/// Machine-readable report tree.
nlohmann::json report_tree(const DecisionTrace& trace, const std::vector<CounterfactualResult>& counterfactuals,
                           const std::optional<AttentionMap>& attention);

/// Plain text in template order, or the structured tree pretty-printed.
std::string render_report(const DecisionTrace& trace, const std::vector<CounterfactualResult>& counterfactuals,
                          const std::optional<AttentionMap>& attention, ReportFormat format);

std::string render_text(const nlohmann::json& tree);
/// Parses render_text output back into the tree it was rendered from.
nlohmann::json parse_text_report(const std::string& text);

}  // namespace agentsearch
