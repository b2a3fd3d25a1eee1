#pragma once

#include "agentsearch/costmodel.hpp"
#include "agentsearch/executor.hpp"
#include "agentsearch/feedback.hpp"
#include "agentsearch/lifecycle.hpp"
#include "agentsearch/supernet.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace agentsearch {

/// Mechanism switches for ablation runs.
struct AblationFlags {
    bool lifecycle = true;
    bool feedback = true;
    bool dynamic_cost = true;
    bool early_exit = true;
};

/// How the simulated loop turns an outcome into user and system signals.
struct SignalSynthesis {
    /// Probability that a query receives one explicit rating.
    double rating_rate = 0.5;
    /// Ratings are utility plus U(-rating_noise, rating_noise), clamped to [0, 1].
    double rating_noise = 0.1;
    /// Aggregate cost at which resource utilization saturates at 1.
    double cost_budget = 0.1;
};

struct RunConfig {
    // Paper hyperparameters.
    int max_layers = 4;
    double tau_elim = 0.3;
    double alpha_fb = 0.01;
    double mu = 0.1;
    double gamma_fb = 0.5;
    double beta_load = 0.2;
    std::size_t window = 100;
    double fusion_threshold = 0.6;

    double eta_reward = 0.1;
    double initial_reward = 0.5;
    double early_exit_threshold = 0.9;
    std::size_t feature_dim = 8;
    std::uint64_t seed = 0;
    /// "simulated" or "remote".
    std::string backend = "simulated";
    /// "composer" or "remote".
    std::string fusion_generator = "composer";
    std::size_t neighbours = 20;

    FeatureSchema schema;
    std::vector<OperatorSpec> operators;
    /// Initial conditioning rows, by operator id. Missing operators start at zero.
    std::map<std::string, std::vector<double>> conditioning_prior;

    std::size_t min_co_occurrence = kMinCoOccurrence;
    std::size_t min_assessments = kMinAssessments;
    std::size_t history_length = 5;
    HealthWeights health_weights;

    std::array<double, 3> xi{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    std::array<double, 2> zeta{0.5, 0.5};
    SignalSynthesis signals;

    CostContext cost;
    SimulatedWorld world;
    RemoteEndpoint remote;
    AblationFlags ablation;

    /// Throws ConfigError naming the first offending key.
    void validate() const;

    /// `cost` with the top-level beta_load applied.
    CostContext cost_context() const;
    LifecycleConfig lifecycle_config() const;
    FeedbackParams feedback_params() const;
};

/// Seed operator pool used when a config lists none.
std::vector<OperatorSpec> default_operators();
/// Defaults plus the default operator pool and a mild simulated world.
RunConfig default_config();

/// Missing keys take defaults; unknown keys and bad values throw ConfigError
/// naming the key (dotted for nested sections).
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::string& path);

/// Top-level scalar keys that may be overridden from the command line.
const std::vector<std::string>& scalar_config_keys();
/// Parses `value` as the type of top-level key `key` and stores it in `j`.
void set_scalar_key(nlohmann::json& j, const std::string& key, const std::string& value);

}  // namespace agentsearch
