#include "agentsearch/feedback.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace agentsearch {

namespace {

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

void FeedbackSignals::validate() const
{
    for (double r : explicit_ratings) {
        if (!in_unit(r)) {
            throw std::invalid_argument("explicit_ratings: rating outside [0, 1]");
        }
    }
    if (!(session_time >= 0.0)) throw std::invalid_argument("session_time: must be >= 0");
    if (followup_count < 0) throw std::invalid_argument("followup_count: must be >= 0");
    if (!in_unit(engagement)) throw std::invalid_argument("engagement: outside [0, 1]");
    if (success_indicator != 0 && success_indicator != 1) {
        throw std::invalid_argument("success_indicator: must be 0 or 1");
    }
    if (!in_unit(resource_utilization)) throw std::invalid_argument("resource_utilization: outside [0, 1]");
}

double OperatorRewards::get(const std::string& id) const
{
    auto it = values.find(id);
    return it == values.end() ? 0.0 : it->second;
}

double explicit_signal(const std::vector<double>& ratings, bool* has_feedback)
{
    if (has_feedback != nullptr) {
        *has_feedback = !ratings.empty();
    }
    if (ratings.empty()) {
        return 0.5;
    }
    double sum = 0.0;
    for (double r : ratings) {
        sum += r;
    }
    return sum / static_cast<double>(ratings.size());
}

double implicit_signal(const FeedbackSignals& signals, const std::array<double, 3>& xi)
{
    const double session = signals.session_time / (signals.session_time + kSessionHalfLife);
    const double followups = 1.0 / (1.0 + static_cast<double>(signals.followup_count));
    return xi[0] * session + xi[1] * followups + xi[2] * signals.engagement;
}

double system_signal(const FeedbackSignals& signals, const std::array<double, 2>& zeta)
{
    return zeta[0] * static_cast<double>(signals.success_indicator) + zeta[1] * (1.0 - signals.resource_utilization);
}

double aggregate(double fe, double fi, double fs, const std::array<double, 3>& omega)
{
    return omega[0] * fe + omega[1] * fi + omega[2] * fs;
}

OperatorRewards update_operator_rewards(const OperatorRewards& rewards, const std::vector<std::string>& operator_ids,
                                        double reward)
{
    if (!std::isfinite(reward)) {
        throw std::invalid_argument("reward must be finite");
    }
    OperatorRewards next = rewards;
    const std::set<std::string> distinct(operator_ids.begin(), operator_ids.end());
    for (const auto& id : distinct) {
        const double old = rewards.get(id);
        next.values[id] = old + rewards.eta_reward * (reward - old);
    }
    return next;
}

OperatorRewards update_operator_rewards(const OperatorRewards& rewards, const Architecture& arch, double reward)
{
    return update_operator_rewards(rewards, arch.operator_ids(), reward);
}

FeedbackWeights update_feedback_weights(const FeedbackWeights& weights, const std::array<double, 3>& signals,
                                        double realized_utility, bool* reset)
{
    if (!in_unit(realized_utility)) {
        throw std::invalid_argument("realized_utility outside [0, 1]");
    }
    const double residual = aggregate(signals[0], signals[1], signals[2], weights.omega) - realized_utility;

    FeedbackWeights next = weights;
    double total = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double gradient = 2.0 * residual * signals[i];
        next.omega[i] = std::max(0.0, weights.omega[i] - weights.alpha_fb * gradient);
        total += next.omega[i];
    }
    const bool degenerate = !(total > 0.0) || !std::isfinite(total);
    if (degenerate) {
        next.omega = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    } else {
        for (double& w : next.omega) {
            w /= total;
        }
    }
    if (reset != nullptr) {
        *reset = degenerate;
    }
    return next;
}

IntegrationResult integrate_signals(const SupernetState& state, const OperatorRewards& rewards,
                                    const FeedbackWeights& weights, const std::string& query_id,
                                    const std::vector<std::string>& operator_ids, double fe, double fi, double fs,
                                    double realized_utility, double t, const FeedbackParams& params,
                                    const StepHook& hook)
{
    auto enter = [&hook](int step) {
        if (hook) {
            hook(step);
        }
    };

    enter(2);
    const double reward = aggregate(fe, fi, fs, weights.omega);

    enter(3);
    OperatorRewards next_rewards = update_operator_rewards(rewards, operator_ids, reward);

    enter(4);
    SupernetState next_state = state;
    for (int layer = 1; layer <= state.num_layers(); ++layer) {
        next_state = update_probabilities(next_state, layer, next_rewards.values, params.mu, params.gamma_fb);
    }

    enter(5);
    bool reset = false;
    FeedbackWeights next_weights = update_feedback_weights(weights, {fe, fi, fs}, realized_utility, &reset);

    FeedbackEvent event;
    event.query_id = query_id;
    event.t = t;
    event.operator_ids = operator_ids;
    event.fe = fe;
    event.fi = fi;
    event.fs = fs;
    event.reward = reward;
    event.realized_utility = realized_utility;
    event.weights_reset = reset;
    for (const auto& id : operator_ids) {
        event.rewards_after[id] = next_rewards.get(id);
    }
    event.omega_after = next_weights.omega;

    return {std::move(next_state), std::move(next_rewards), std::move(next_weights), std::move(event)};
}

IntegrationResult integrate(const SupernetState& state, const OperatorRewards& rewards,
                            const FeedbackWeights& weights, const std::string& query_id, const Architecture& arch,
                            const FeedbackSignals& signals, double realized_utility, double t,
                            const FeedbackParams& params, const StepHook& hook)
{
    if (hook) {
        hook(1);
    }
    signals.validate();
    bool has_explicit = true;
    const double fe = explicit_signal(signals.explicit_ratings, &has_explicit);
    const double fi = implicit_signal(signals, weights.xi);
    const double fs = system_signal(signals, weights.zeta);

    IntegrationResult result = integrate_signals(state, rewards, weights, query_id, arch.operator_ids(), fe, fi, fs,
                                                 realized_utility, t, params, hook);
    result.event.has_explicit = has_explicit;
    return result;
}

}  // namespace agentsearch
