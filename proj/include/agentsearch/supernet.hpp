#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace agentsearch {

// ---------------------------------------------------------------------------
// Query features
// ---------------------------------------------------------------------------

/// Categorical vocabulary and width of the feature vector.
///
/// Layout: one-hot domain, then complexity / 5, then one-hot tier, then zero
/// padding up to `feature_dim`.
struct FeatureSchema {
    std::vector<std::string> domains{"math", "code", "basic_math", "tool"};
    std::vector<std::string> tiers{"standard", "premium"};
    std::size_t feature_dim = 8;

    std::size_t required_dim() const { return domains.size() + 1 + tiers.size(); }
    std::size_t complexity_slot() const { return domains.size(); }
    /// Human-readable name of feature component `i` ("domain:math", "complexity", "tier:premium", "pad").
    std::string component_name(std::size_t i) const;
};

inline constexpr double kMaxComplexity = 5.0;

struct QueryMetadata {
    std::string domain;
    double complexity = 0.0;
    std::string tier = "standard";
    std::vector<std::string> factors;
};

struct QueryFeatures {
    std::string domain_tag;
    double complexity = 0.0;
    std::string user_tier;
    std::vector<std::string> extra_factors;
    std::vector<double> feature_vector;
};

/// Deterministic featurization. Throws std::invalid_argument naming an unknown
/// domain or tier, or an out-of-range complexity.
QueryFeatures featurize(const QueryMetadata& meta, const FeatureSchema& schema);

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

enum class Provenance { seed, fused, modified };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct OperatorSpec {
    std::string id;
    std::uint64_t version = 1;
    std::set<std::string> capability_tags;
    std::string prompt_template;
    double base_token_cost = 0.0;
    int base_api_calls = 1;
    double base_latency = 0.0;
    /// Static risk score in [0, 1] feeding the privacy cost dimension.
    double privacy_risk = 0.0;
    Provenance provenance = Provenance::seed;
    std::vector<std::string> parents;

    friend bool operator==(const OperatorSpec&, const OperatorSpec&) = default;
};

/// All operators ever registered during a run, including eliminated ones.
class OperatorRegistry {
public:
    /// Throws std::invalid_argument on a duplicate id, the reserved EXIT id, or
    /// a fused spec without exactly two parents.
    void add(OperatorSpec spec);
    /// Replaces an existing spec; the stored version becomes previous + 1.
    void modify(OperatorSpec spec);

    bool contains(const std::string& id) const { return specs_.count(id) != 0; }
    const OperatorSpec& at(const std::string& id) const;
    const std::map<std::string, OperatorSpec>& all() const { return specs_; }

    friend bool operator==(const OperatorRegistry&, const OperatorRegistry&) = default;

private:
    std::map<std::string, OperatorSpec> specs_;
};

// ---------------------------------------------------------------------------
// Supernet
// ---------------------------------------------------------------------------

/// Reserved choice that terminates an architecture. Never an operator id.
inline const std::string kExit = "EXIT";

/// Layered logits over the active pool plus EXIT, and a linear
/// feature-to-logit-offset conditioning map shared by all layers.
///
/// Layers are 1-based in the public API; `logits[0]` holds layer 1, which
/// never contains EXIT.
struct SupernetState {
    std::size_t feature_dim = 0;
    std::vector<std::map<std::string, double>> logits;
    std::map<std::string, std::vector<double>> conditioning;
    std::uint64_t version = 0;

    int num_layers() const { return static_cast<int>(logits.size()); }
    std::vector<std::string> active_pool() const;
    bool is_active(const std::string& id) const { return conditioning.count(id) != 0; }

    /// Throws std::logic_error when an invariant is broken.
    void validate() const;

    friend bool operator==(const SupernetState&, const SupernetState&) = default;
};

/// Uniform logits (zero) over `pool` in every layer, zero conditioning.
SupernetState make_supernet(const std::vector<std::string>& pool, int num_layers, std::size_t feature_dim);

/// Choices in a fixed order (active pool sorted by id, then EXIT when present)
/// with their probabilities.
struct LayerDistribution {
    std::vector<std::string> choices;
    std::vector<double> probs;

    double prob_of(const std::string& choice) const;
};

LayerDistribution layer_distribution(const SupernetState& state, int layer, const QueryFeatures& features);
/// Distribution with the conditioning offsets left out.
LayerDistribution base_distribution(const SupernetState& state, int layer);

enum class Termination { exit, max_layers, early_exit };

std::string_view to_string(Termination t);
Termination termination_from_string(std::string_view s);

struct ArchitectureStep {
    int layer = 1;
    std::string operator_id;

    friend bool operator==(const ArchitectureStep&, const ArchitectureStep&) = default;
};

struct Architecture {
    std::vector<ArchitectureStep> steps;
    Termination terminated_by = Termination::max_layers;

    std::vector<std::string> operator_ids() const;
    /// "a -> b -> c"
    std::string describe() const;

    friend bool operator==(const Architecture&, const Architecture&) = default;
};

Architecture sample_architecture(const SupernetState& state, const QueryFeatures& features, std::uint64_t seed);

/// Probability the sampler emits exactly `arch`, including the terminating
/// EXIT draw. For an early-exit architecture this is the probability of the
/// executed prefix.
double architecture_probability(const SupernetState& state, const QueryFeatures& features, const Architecture& arch);

/// Floor applied to probabilities before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

/// One EMA step of a layer's base distribution toward
/// softmax(log pi + gamma_fb * R). Missing operator rewards count as 0. EXIT
/// takes `rewards[EXIT]` when present, otherwise the mean active-operator
/// reward, so uniform rewards leave the layer unchanged.
SupernetState update_probabilities(const SupernetState& state, int layer,
                                   const std::map<std::string, double>& operator_rewards,
                                   double mu, double gamma_fb);

/// Adds `op` with every layer's logit set to the mean of the existing
/// operator logits. The conditioning row defaults to the mean of existing rows.
SupernetState add_operator(const SupernetState& state, const OperatorSpec& op,
                           std::optional<std::vector<double>> conditioning_row = std::nullopt);
SupernetState remove_operator(const SupernetState& state, const std::string& id);

}  // namespace agentsearch
