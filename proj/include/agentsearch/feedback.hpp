#pragma once

#include "agentsearch/supernet.hpp"

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace agentsearch {

struct FeedbackSignals {
    std::vector<double> explicit_ratings;  // each in [0, 1]
    double session_time = 0.0;             // seconds
    int followup_count = 0;
    double engagement = 0.0;               // [0, 1]
    int success_indicator = 0;             // 0 or 1
    double resource_utilization = 0.0;     // [0, 1]

    /// Throws std::invalid_argument naming the first out-of-range field.
    void validate() const;
};

struct FeedbackWeights {
    /// Mixture weights over (explicit, implicit, system); stays on the simplex.
    std::array<double, 3> omega{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    std::array<double, 3> xi{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    std::array<double, 2> zeta{0.5, 0.5};
    double alpha_fb = 0.01;

    friend bool operator==(const FeedbackWeights&, const FeedbackWeights&) = default;
};

struct OperatorRewards {
    std::map<std::string, double> values;
    double eta_reward = 0.1;

    double get(const std::string& id) const;
    friend bool operator==(const OperatorRewards&, const OperatorRewards&) = default;
};

/// Seconds at which the session-time normalizer reaches 0.5.
inline constexpr double kSessionHalfLife = 60.0;

/// Mean rating; 0.5 when there are none (`has_feedback` is then false).
double explicit_signal(const std::vector<double>& ratings, bool* has_feedback = nullptr);
/// xi1 * T/(T+60) + xi2 * 1/(1+N) + xi3 * engagement
double implicit_signal(const FeedbackSignals& signals, const std::array<double, 3>& xi);
/// zeta1 * I_success + zeta2 * (1 - U_resource)
double system_signal(const FeedbackSignals& signals, const std::array<double, 2>& zeta);
double aggregate(double fe, double fi, double fs, const std::array<double, 3>& omega);

/// EMA step R_O += eta * (R - R_O) for every operator in `operator_ids`
/// (each distinct id once). Other entries are untouched.
OperatorRewards update_operator_rewards(const OperatorRewards& rewards, const std::vector<std::string>& operator_ids,
                                        double reward);
OperatorRewards update_operator_rewards(const OperatorRewards& rewards, const Architecture& arch, double reward);

/// One gradient-descent step on (R - U)^2 followed by projection onto the
/// simplex. `reset` is set when the projection degenerated and omega was
/// reset to uniform.
FeedbackWeights update_feedback_weights(const FeedbackWeights& weights, const std::array<double, 3>& signals,
                                        double realized_utility, bool* reset = nullptr);

struct FeedbackParams {
    double mu = 0.1;
    double gamma_fb = 0.5;
};

/// Log record of one integration. Carries everything needed to replay it.
struct FeedbackEvent {
    std::string query_id;
    double t = 0.0;
    std::vector<std::string> operator_ids;
    double fe = 0.0;
    double fi = 0.0;
    double fs = 0.0;
    double reward = 0.0;
    double realized_utility = 0.0;
    bool has_explicit = true;
    bool weights_reset = false;
    std::map<std::string, double> rewards_after;
    std::array<double, 3> omega_after{};
};

struct IntegrationResult {
    SupernetState state;
    OperatorRewards rewards;
    FeedbackWeights weights;
    FeedbackEvent event;
};

/// Called with the step number (1..5) before each step runs. Throwing aborts
/// the integration and leaves the caller's state untouched.
using StepHook = std::function<void(int step)>;

/// The full online loop: collect signals, aggregate, update operator
/// rewards, update every layer's probabilities, update feedback weights.
/// Pure: inputs are never modified, so a failure at any step is transactional.
IntegrationResult integrate(const SupernetState& state, const OperatorRewards& rewards,
                            const FeedbackWeights& weights, const std::string& query_id, const Architecture& arch,
                            const FeedbackSignals& signals, double realized_utility, double t,
                            const FeedbackParams& params, const StepHook& hook = {});

/// Steps 2-5 given already-collected signal values. Replay uses this directly.
IntegrationResult integrate_signals(const SupernetState& state, const OperatorRewards& rewards,
                                    const FeedbackWeights& weights, const std::string& query_id,
                                    const std::vector<std::string>& operator_ids, double fe, double fi, double fs,
                                    double realized_utility, double t, const FeedbackParams& params,
                                    const StepHook& hook = {});

}  // namespace agentsearch
