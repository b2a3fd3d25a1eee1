#pragma once

#include "agentsearch/executor.hpp"
#include "agentsearch/supernet.hpp"

#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace agentsearch {

struct UsageRecord {
    std::string query_id;
    std::set<std::string> operator_ids;
    double utility = 0.0;
    double total_cost = 0.0;
    std::map<std::string, double> per_operator_cost;
    double timestamp = 0.0;
    /// Observed fraction of failed steps.
    double failure_fraction = 0.0;
    /// Query feature vector, used for nearest-neighbour explanations.
    std::vector<double> features;

    /// Throws std::invalid_argument when utility is outside [0, 1] or the
    /// per-operator costs do not sum to total_cost.
    void validate() const;
};

/// Bounded FIFO of the most recent usage records.
class UsageWindow {
public:
    explicit UsageWindow(std::size_t capacity = 100);

    void push(UsageRecord record);
    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    bool full() const { return records_.size() == capacity_; }
    const std::deque<UsageRecord>& records() const { return records_; }
    void clear() { records_.clear(); }

private:
    std::size_t capacity_;
    std::deque<UsageRecord> records_;
};

UsageWindow record_usage(UsageWindow window, UsageRecord record);

// ---------------------------------------------------------------------------
// Health
// ---------------------------------------------------------------------------

struct HealthWeights {
    double alpha_h = 1.0 / 3.0;
    double beta_h = 1.0 / 3.0;
    double gamma_h = 1.0 / 3.0;

    void validate() const;
};

struct OperatorHealth {
    double f = 0.0;  // usage frequency
    double p = 0.5;  // performance contribution
    double e = 0.0;  // cost efficiency
    double h = 0.0;
    bool used = false;
};

struct HealthReport {
    std::map<std::string, OperatorHealth> operators;
};

double health_score(double f, double p, double e, const HealthWeights& weights);

/// Per operator of `pool`: usage frequency, shifted utility advantage
/// clamp01((mean utility with op - overall mean + 1) / 2), and min-max
/// normalized utility per unit cost over the operators used in the window.
HealthReport assess_health(const UsageWindow& window, const HealthWeights& weights,
                           const std::vector<std::string>& pool);

// ---------------------------------------------------------------------------
// Fusion
// ---------------------------------------------------------------------------

struct FusionCandidate {
    std::pair<std::string, std::string> pair;
    double correlation = 0.0;
    double joint_success_rate = 0.0;
    std::size_t co_occurrence_count = 0;
};

/// Pearson correlation; 0 when either series has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

inline constexpr std::size_t kMinCoOccurrence = 5;

/// Pairs of pool operators whose co-occurrence indicators correlate above
/// `threshold` with at least `min_co_occurrence` joint appearances, strongest first.
std::vector<FusionCandidate> detect_fusion_candidates(const UsageWindow& window, double correlation_threshold,
                                                      const std::vector<std::string>& pool,
                                                      std::size_t min_co_occurrence = kMinCoOccurrence);

struct FusionRequest {
    OperatorSpec a;
    OperatorSpec b;
    double performance_a = 0.5;
    double performance_b = 0.5;
    FusionCandidate history;
};

/// Text of the fusion prompt sent to a generating model.
std::string fusion_prompt(const FusionRequest& request);

std::string fused_operator_id(const std::string& a, const std::string& b);

/// Backend that turns two operators into one. Throws on failure.
class FusionGenerator {
public:
    virtual ~FusionGenerator() = default;
    virtual OperatorSpec generate(const FusionRequest& request) = 0;
};

/// Concatenated prompts, union of tags, 18% fewer tokens than the pair,
/// the slower latency and the higher call count and privacy risk.
class DeterministicComposer final : public FusionGenerator {
public:
    static constexpr double kTokenRetention = 0.82;
    OperatorSpec generate(const FusionRequest& request) override;
};

/// Sends the fusion prompt to a chat-completion endpoint and uses the reply as
/// the fused operator's prompt template. Cost fields follow DeterministicComposer.
class RemoteFusionGenerator final : public FusionGenerator {
public:
    explicit RemoteFusionGenerator(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    OperatorSpec generate(const FusionRequest& request) override;

private:
    RemoteEndpoint endpoint_;
};

/// Checks a != b and both active, runs the generator and stamps fused provenance.
OperatorSpec generate_fused_operator(FusionGenerator& generator, const SupernetState& state,
                                     const FusionRequest& request);

// ---------------------------------------------------------------------------
// Elimination
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMinAssessments = 3;

/// Operators whose mean health over their history is below `tau_elim` and
/// whose every capability tag is still held by another remaining operator
/// with latest health >= tau_elim. Candidates are visited from lowest mean
/// health (ties by id) and each removal is taken into account before the
/// next, so two weak operators cannot cover for each other. Never empties
/// the pool.
std::vector<std::string> evaluate_elimination(const std::map<std::string, std::vector<double>>& health_history,
                                              double tau_elim, const std::vector<std::string>& pool,
                                              const std::map<std::string, std::set<std::string>>& coverage,
                                              std::size_t min_assessments = kMinAssessments);

// ---------------------------------------------------------------------------
// Cycle
// ---------------------------------------------------------------------------

struct LifecycleConfig {
    std::size_t window = 100;
    double tau_elim = 0.3;
    double fusion_threshold = 0.6;
    std::size_t min_co_occurrence = kMinCoOccurrence;
    HealthWeights health_weights;
    std::size_t min_assessments = kMinAssessments;
    /// Assessments kept per operator for the elimination average.
    std::size_t history_length = 5;
    bool fusion_enabled = true;
    bool elimination_enabled = true;
};

struct LifecycleState {
    std::map<std::string, std::vector<double>> health_history;

    friend bool operator==(const LifecycleState&, const LifecycleState&) = default;
};

enum class LifecycleEventKind { assessment, fusion, fusion_failed, elimination };

std::string_view to_string(LifecycleEventKind k);
LifecycleEventKind lifecycle_event_kind_from_string(std::string_view s);

struct LifecycleEvent {
    LifecycleEventKind kind = LifecycleEventKind::assessment;
    HealthReport report;                       // assessment
    std::optional<FusionCandidate> candidate;  // fusion, fusion_failed
    std::optional<OperatorSpec> fused;         // fusion
    std::vector<double> conditioning_row;      // fusion
    std::vector<std::string> removed;          // elimination
    std::string message;                       // fusion_failed
};

struct LifecycleOutcome {
    SupernetState state;
    OperatorRegistry registry;
    LifecycleState lifecycle;
    std::vector<LifecycleEvent> events;
};

/// Assess, detect, fuse at most the best candidate, eliminate; in that order.
/// Generator failures become fusion_failed events and change nothing.
LifecycleOutcome apply_lifecycle(const SupernetState& state, const OperatorRegistry& registry,
                                 const LifecycleState& lifecycle, const UsageWindow& window,
                                 const LifecycleConfig& config, FusionGenerator& generator);

/// Appends each operator's health to its history, keeping the last `history_length`.
void record_assessment(LifecycleState& lifecycle, const HealthReport& report, std::size_t history_length);

/// Applies one recorded lifecycle event to the state. Used by apply_lifecycle and replay.
void apply_lifecycle_event(SupernetState& state, OperatorRegistry& registry, LifecycleState& lifecycle,
                           const LifecycleEvent& event, std::size_t history_length);

}  // namespace agentsearch
