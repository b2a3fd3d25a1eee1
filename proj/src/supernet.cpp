#include "agentsearch/supernet.hpp"

#include "agentsearch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace agentsearch {

namespace {

void softmax_inplace(std::vector<double>& v)
{
    if (v.empty()) {
        return;
    }
    const double hi = *std::max_element(v.begin(), v.end());
    double total = 0.0;
    for (double& x : v) {
        x = std::exp(x - hi);
        total += x;
    }
    for (double& x : v) {
        x /= total;
    }
}

void check_layer(const SupernetState& state, int layer)
{
    if (layer < 1 || layer > state.num_layers()) {
        throw std::out_of_range("layer " + std::to_string(layer) + " outside 1.." +
                                std::to_string(state.num_layers()));
    }
}

// Pool ids in map order, then EXIT when the layer has it.
LayerDistribution raw_layer(const SupernetState& state, int layer, const std::vector<double>* features)
{
    check_layer(state, layer);
    const auto& row = state.logits[static_cast<std::size_t>(layer - 1)];
    if (state.conditioning.empty()) {
        throw std::logic_error("supernet has an empty operator pool");
    }
    LayerDistribution dist;
    dist.choices.reserve(row.size());
    dist.probs.reserve(row.size());
    for (const auto& [id, weights] : state.conditioning) {
        double logit = row.at(id);
        if (features != nullptr) {
            const std::size_t n = std::min(weights.size(), features->size());
            for (std::size_t i = 0; i < n; ++i) {
                logit += weights[i] * (*features)[i];
            }
        }
        dist.choices.push_back(id);
        dist.probs.push_back(logit);
    }
    if (auto it = row.find(kExit); it != row.end()) {
        dist.choices.push_back(kExit);
        dist.probs.push_back(it->second);
    }
    softmax_inplace(dist.probs);
    return dist;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string FeatureSchema::component_name(std::size_t i) const
{
    if (i < domains.size()) {
        return "domain:" + domains[i];
    }
    if (i == complexity_slot()) {
        return "complexity";
    }
    const std::size_t t = i - domains.size() - 1;
    if (t < tiers.size()) {
        return "tier:" + tiers[t];
    }
    return "pad";
}

QueryFeatures featurize(const QueryMetadata& meta, const FeatureSchema& schema)
{
    if (schema.required_dim() > schema.feature_dim) {
        throw std::invalid_argument("feature_dim " + std::to_string(schema.feature_dim) + " is smaller than the " +
                                    std::to_string(schema.required_dim()) + " slots the schema needs");
    }
    if (!(meta.complexity >= 0.0 && meta.complexity <= kMaxComplexity)) {
        throw std::invalid_argument("complexity " + std::to_string(meta.complexity) + " outside [0, 5]");
    }
    const auto domain_it = std::find(schema.domains.begin(), schema.domains.end(), meta.domain);
    if (domain_it == schema.domains.end()) {
        throw std::invalid_argument("unknown domain tag '" + meta.domain + "'");
    }
    const auto tier_it = std::find(schema.tiers.begin(), schema.tiers.end(), meta.tier);
    if (tier_it == schema.tiers.end()) {
        throw std::invalid_argument("unknown user tier '" + meta.tier + "'");
    }

    QueryFeatures out;
    out.domain_tag = meta.domain;
    out.complexity = meta.complexity;
    out.user_tier = meta.tier;
    out.extra_factors = meta.factors;
    out.feature_vector.assign(schema.feature_dim, 0.0);
    out.feature_vector[static_cast<std::size_t>(domain_it - schema.domains.begin())] = 1.0;
    out.feature_vector[schema.complexity_slot()] = meta.complexity / kMaxComplexity;
    out.feature_vector[schema.complexity_slot() + 1 + static_cast<std::size_t>(tier_it - schema.tiers.begin())] = 1.0;
    return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Provenance p)
{
    switch (p) {
    case Provenance::seed: return "seed";
    case Provenance::fused: return "fused";
    case Provenance::modified: return "modified";
    }
    return "seed";
}

Provenance provenance_from_string(std::string_view s)
{
    if (s == "seed") return Provenance::seed;
    if (s == "fused") return Provenance::fused;
    if (s == "modified") return Provenance::modified;
    throw std::invalid_argument("unknown provenance '" + std::string(s) + "'");
}

void OperatorRegistry::add(OperatorSpec spec)
{
    if (spec.id.empty() || spec.id == kExit) {
        throw std::invalid_argument("invalid operator id '" + spec.id + "'");
    }
    if (contains(spec.id)) {
        throw std::invalid_argument("operator '" + spec.id + "' already registered");
    }
    if (spec.provenance == Provenance::fused && spec.parents.size() != 2) {
        throw std::invalid_argument("fused operator '" + spec.id + "' must record exactly two parents");
    }
    const std::string id = spec.id;
    specs_.emplace(id, std::move(spec));
}

void OperatorRegistry::modify(OperatorSpec spec)
{
    auto it = specs_.find(spec.id);
    if (it == specs_.end()) {
        throw std::invalid_argument("operator '" + spec.id + "' not registered");
    }
    spec.version = it->second.version + 1;
    if (spec.provenance == Provenance::seed) {
        spec.provenance = Provenance::modified;
    }
    it->second = std::move(spec);
}

const OperatorSpec& OperatorRegistry::at(const std::string& id) const
{
    auto it = specs_.find(id);
    if (it == specs_.end()) {
        throw std::out_of_range("operator '" + id + "' not registered");
    }
    return it->second;
}

// ---------------------------------------------------------------------------

std::vector<std::string> SupernetState::active_pool() const
{
    std::vector<std::string> ids;
    ids.reserve(conditioning.size());
    for (const auto& entry : conditioning) {
        ids.push_back(entry.first);
    }
    return ids;
}

void SupernetState::validate() const
{
    if (logits.empty()) {
        throw std::logic_error("supernet has no layers");
    }
    if (conditioning.empty()) {
        throw std::logic_error("supernet has an empty operator pool");
    }
    for (std::size_t l = 0; l < logits.size(); ++l) {
        const auto& row = logits[l];
        const bool has_exit = row.count(kExit) != 0;
        if (l == 0 && has_exit) {
            throw std::logic_error("layer 1 must not contain EXIT");
        }
        if (l > 0 && !has_exit) {
            throw std::logic_error("layer " + std::to_string(l + 1) + " is missing EXIT");
        }
        if (row.size() != conditioning.size() + (has_exit ? 1 : 0)) {
            throw std::logic_error("layer " + std::to_string(l + 1) + " logits do not match the active pool");
        }
        for (const auto& [id, value] : row) {
            if (id != kExit && conditioning.count(id) == 0) {
                throw std::logic_error("layer " + std::to_string(l + 1) + " has inactive operator '" + id + "'");
            }
            if (!std::isfinite(value)) {
                throw std::logic_error("non-finite logit for '" + id + "'");
            }
        }
    }
    for (const auto& [id, row] : conditioning) {
        if (row.size() != feature_dim) {
            throw std::logic_error("conditioning row of '" + id + "' has wrong length");
        }
    }
}

SupernetState make_supernet(const std::vector<std::string>& pool, int num_layers, std::size_t feature_dim)
{
    if (num_layers < 1) {
        throw std::invalid_argument("num_layers must be >= 1");
    }
    SupernetState state;
    state.feature_dim = feature_dim;
    state.logits.resize(static_cast<std::size_t>(num_layers));
    for (const auto& id : pool) {
        if (id == kExit || id.empty()) {
            throw std::invalid_argument("invalid operator id '" + id + "'");
        }
        state.conditioning[id] = std::vector<double>(feature_dim, 0.0);
        for (auto& row : state.logits) {
            row[id] = 0.0;
        }
    }
    for (std::size_t l = 1; l < state.logits.size(); ++l) {
        state.logits[l][kExit] = 0.0;
    }
    return state;
}

double LayerDistribution::prob_of(const std::string& choice) const
{
    for (std::size_t i = 0; i < choices.size(); ++i) {
        if (choices[i] == choice) {
            return probs[i];
        }
    }
    return 0.0;
}

LayerDistribution layer_distribution(const SupernetState& state, int layer, const QueryFeatures& features)
{
    if (features.feature_vector.size() != state.feature_dim) {
        throw std::invalid_argument("feature vector length " + std::to_string(features.feature_vector.size()) +
                                    " != supernet feature_dim " + std::to_string(state.feature_dim));
    }
    return raw_layer(state, layer, &features.feature_vector);
}

LayerDistribution base_distribution(const SupernetState& state, int layer)
{
    return raw_layer(state, layer, nullptr);
}

std::string_view to_string(Termination t)
{
    switch (t) {
    case Termination::exit: return "EXIT";
    case Termination::max_layers: return "max_layers";
    case Termination::early_exit: return "early_exit";
    }
    return "max_layers";
}

Termination termination_from_string(std::string_view s)
{
    if (s == "EXIT") return Termination::exit;
    if (s == "max_layers") return Termination::max_layers;
    if (s == "early_exit") return Termination::early_exit;
    throw std::invalid_argument("unknown termination '" + std::string(s) + "'");
}

std::vector<std::string> Architecture::operator_ids() const
{
    std::vector<std::string> ids;
    ids.reserve(steps.size());
    for (const auto& s : steps) {
        ids.push_back(s.operator_id);
    }
    return ids;
}

std::string Architecture::describe() const
{
    std::ostringstream out;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (i != 0) {
            out << " -> ";
        }
        out << steps[i].operator_id;
    }
    return out.str();
}

Architecture sample_architecture(const SupernetState& state, const QueryFeatures& features, std::uint64_t seed)
{
    Rng rng(seed);
    Architecture arch;
    for (int layer = 1; layer <= state.num_layers(); ++layer) {
        const LayerDistribution dist = layer_distribution(state, layer, features);
        const std::size_t pick = rng.categorical(dist.probs);
        if (dist.choices[pick] == kExit) {
            arch.terminated_by = Termination::exit;
            return arch;
        }
        arch.steps.push_back({layer, dist.choices[pick]});
    }
    arch.terminated_by = Termination::max_layers;
    return arch;
}

double architecture_probability(const SupernetState& state, const QueryFeatures& features, const Architecture& arch)
{
    const auto n = static_cast<int>(arch.steps.size());
    if (n < 1 || n > state.num_layers()) {
        throw std::invalid_argument("architecture length " + std::to_string(n) + " outside 1.." +
                                    std::to_string(state.num_layers()));
    }
    double p = 1.0;
    for (int i = 0; i < n; ++i) {
        const auto& step = arch.steps[static_cast<std::size_t>(i)];
        if (step.layer != i + 1) {
            throw std::invalid_argument("architecture step " + std::to_string(i) + " has layer " +
                                        std::to_string(step.layer));
        }
        if (!state.is_active(step.operator_id)) {
            throw std::invalid_argument("architecture references inactive operator '" + step.operator_id + "'");
        }
        p *= layer_distribution(state, step.layer, features).prob_of(step.operator_id);
    }
    switch (arch.terminated_by) {
    case Termination::exit:
        if (n == state.num_layers()) {
            throw std::invalid_argument("EXIT-terminated architecture already fills every layer");
        }
        p *= layer_distribution(state, n + 1, features).prob_of(kExit);
        break;
    case Termination::max_layers:
        if (n != state.num_layers()) {
            throw std::invalid_argument("max_layers termination with only " + std::to_string(n) + " steps");
        }
        break;
    case Termination::early_exit:
        break;
    }
    return p;
}

SupernetState update_probabilities(const SupernetState& state, int layer,
                                   const std::map<std::string, double>& operator_rewards,
                                   double mu, double gamma_fb)
{
    if (!(mu > 0.0 && mu <= 1.0)) {
        throw std::invalid_argument("mu must lie in (0, 1]");
    }
    const LayerDistribution old = base_distribution(state, layer);

    double mean_reward = 0.0;
    for (const auto& id : old.choices) {
        if (id == kExit) {
            continue;
        }
        auto it = operator_rewards.find(id);
        mean_reward += it == operator_rewards.end() ? 0.0 : it->second;
    }
    mean_reward /= static_cast<double>(state.conditioning.size());

    std::vector<double> target(old.probs.size());
    for (std::size_t i = 0; i < old.choices.size(); ++i) {
        double reward = 0.0;
        if (auto it = operator_rewards.find(old.choices[i]); it != operator_rewards.end()) {
            reward = it->second;
        } else if (old.choices[i] == kExit) {
            reward = mean_reward;
        }
        target[i] = std::log(std::max(old.probs[i], kProbabilityFloor)) + gamma_fb * reward;
    }
    softmax_inplace(target);

    SupernetState next = state;
    auto& row = next.logits[static_cast<std::size_t>(layer - 1)];
    for (std::size_t i = 0; i < old.choices.size(); ++i) {
        const double blended = (1.0 - mu) * old.probs[i] + mu * target[i];
        row[old.choices[i]] = std::log(std::max(blended, kProbabilityFloor));
    }
    ++next.version;
    return next;
}

SupernetState add_operator(const SupernetState& state, const OperatorSpec& op,
                           std::optional<std::vector<double>> conditioning_row)
{
    if (op.id.empty() || op.id == kExit) {
        throw std::invalid_argument("invalid operator id '" + op.id + "'");
    }
    if (state.is_active(op.id)) {
        throw std::invalid_argument("operator '" + op.id + "' is already active");
    }
    SupernetState next = state;
    for (auto& row : next.logits) {
        double sum = 0.0;
        for (const auto& id : state.active_pool()) {
            sum += row.at(id);
        }
        row[op.id] = state.conditioning.empty() ? 0.0 : sum / static_cast<double>(state.conditioning.size());
    }
    if (conditioning_row) {
        if (conditioning_row->size() != state.feature_dim) {
            throw std::invalid_argument("conditioning row length mismatch for '" + op.id + "'");
        }
        next.conditioning[op.id] = std::move(*conditioning_row);
    } else {
        std::vector<double> mean(state.feature_dim, 0.0);
        for (const auto& [id, row] : state.conditioning) {
            for (std::size_t i = 0; i < mean.size(); ++i) {
                mean[i] += row[i];
            }
        }
        if (!state.conditioning.empty()) {
            for (double& m : mean) {
                m /= static_cast<double>(state.conditioning.size());
            }
        }
        next.conditioning[op.id] = std::move(mean);
    }
    ++next.version;
    return next;
}

SupernetState remove_operator(const SupernetState& state, const std::string& id)
{
    if (!state.is_active(id)) {
        throw std::invalid_argument("operator '" + id + "' is not active");
    }
    if (state.conditioning.size() <= 1) {
        throw std::invalid_argument("refusing to remove the last operator '" + id + "'");
    }
    SupernetState next = state;
    next.conditioning.erase(id);
    for (auto& row : next.logits) {
        row.erase(id);
    }
    ++next.version;
    return next;
}

}  // namespace agentsearch
