#include "agentsearch/costmodel.hpp"

#include "agentsearch/error.hpp"
#include "agentsearch/executor.hpp"

#include <cmath>
#include <stdexcept>

namespace agentsearch {

Schedule::Schedule(std::vector<Point> points) : points_(std::move(points))
{
    if (points_.empty()) {
        throw std::invalid_argument("schedule needs at least one point");
    }
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (!(points_[i].t > points_[i - 1].t)) {
            throw std::invalid_argument("schedule times must be strictly increasing");
        }
    }
}

double Schedule::at(double t, bool* clamped) const
{
    if (points_.empty()) {
        throw std::logic_error("empty schedule");
    }
    // A single-point schedule is a constant and never out of range.
    if (clamped != nullptr) {
        *clamped = points_.size() > 1 && (t < points_.front().t || t > points_.back().t);
    }
    if (t <= points_.front().t) {
        return points_.front().value;
    }
    if (t >= points_.back().t) {
        return points_.back().value;
    }
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (t <= points_[i].t) {
            const Point& a = points_[i - 1];
            const Point& b = points_[i];
            const double frac = (t - a.t) / (b.t - a.t);
            return a.value + frac * (b.value - a.value);
        }
    }
    return points_.back().value;
}

namespace {

void require_positive_schedule(const Schedule& s, const std::string& key)
{
    if (s.points().empty()) {
        throw ConfigError(key, "schedule is empty");
    }
    for (const auto& p : s.points()) {
        if (!(p.value > 0.0)) {
            throw ConfigError(key, "values must be strictly positive");
        }
    }
}

double lookup(const Schedule& s, double t, const char* name, std::vector<std::string>* warnings)
{
    bool clamped = false;
    const double v = s.at(t, &clamped);
    if (clamped && warnings != nullptr) {
        warnings->push_back(std::string(name) + ": time " + std::to_string(t) +
                            " outside schedule range, using nearest endpoint");
    }
    return v;
}

}  // namespace

void CostContext::validate() const
{
    require_positive_schedule(token_price_per_1k, "cost.token_price_per_1k");
    require_positive_schedule(api_price, "cost.api_price");
    require_positive_schedule(load, "cost.load");
    if (!(latency.base > 0.0)) throw ConfigError("cost.latency.base", "must be > 0");
    if (!(failure.base > 0.0)) throw ConfigError("cost.failure.base", "must be > 0");
    if (!(privacy.base > 0.0)) throw ConfigError("cost.privacy.base", "must be > 0");
    if (!(load_normal > 0.0)) throw ConfigError("cost.load_normal", "must be > 0");
    if (!(beta_load >= 0.0)) throw ConfigError("beta_load", "must be >= 0");
    if (!(rho_base > 0.0)) throw ConfigError("cost.rho_base", "must be > 0");
    if (!(lambda_base > 0.0)) throw ConfigError("cost.lambda_base", "must be > 0");
    for (std::size_t k = 0; k < priority_tables.size(); ++k) {
        if (priority_tables[k].empty()) {
            throw ConfigError("cost.priority_tables[" + std::to_string(k) + "]", "table is empty");
        }
        for (const auto& [value, factor] : priority_tables[k]) {
            if (!(factor > 0.0)) {
                throw ConfigError("cost.priority_tables[" + std::to_string(k) + "]." + value, "must be > 0");
            }
        }
    }
}

double adaptive_weight(double w_base, double eta, double delta)
{
    return w_base * std::exp(eta * delta);
}

CostDimensions measure_dimensions(const ExecutionRecord& record, const CostContext& ctx, double t,
                                  std::vector<std::string>* warnings)
{
    const double token_price = lookup(ctx.token_price_per_1k, t, "token_price_per_1k", warnings) / 1000.0;
    const double api_price = lookup(ctx.api_price, t, "api_price", warnings);

    CostDimensions dims;
    dims.token_cost = static_cast<double>(record.total_tokens) * token_price;
    dims.api_cost = static_cast<double>(record.total_api_calls) * api_price;
    dims.latency_cost = record.total_latency * adaptive_weight(ctx.latency.base, ctx.latency.eta, ctx.latency.delta);
    dims.failure_cost = record.failure_rate * adaptive_weight(ctx.failure.base, ctx.failure.eta, ctx.failure.delta);
    dims.privacy_cost = record.privacy_risk * adaptive_weight(ctx.privacy.base, ctx.privacy.eta, ctx.privacy.delta);
    return dims;
}

double aggregate_cost(const CostDimensions& dims)
{
    return dims.token_cost + dims.api_cost + dims.latency_cost + dims.failure_cost + dims.privacy_cost;
}

double query_priority(const CostContext& ctx, const QueryFeatures& features)
{
    if (features.extra_factors.size() != ctx.priority_tables.size()) {
        throw ConfigError("cost.priority_tables", "query has " + std::to_string(features.extra_factors.size()) +
                                                      " factors but " + std::to_string(ctx.priority_tables.size()) +
                                                      " tables are configured");
    }
    double rho = ctx.rho_base;
    for (std::size_t k = 0; k < ctx.priority_tables.size(); ++k) {
        const auto& table = ctx.priority_tables[k];
        auto it = table.find(features.extra_factors[k]);
        if (it == table.end()) {
            throw ConfigError("cost.priority_tables[" + std::to_string(k) + "]",
                              "no entry for factor value '" + features.extra_factors[k] + "'");
        }
        rho *= it->second;
    }
    return rho;
}

double load_factor(double load, double load_normal, double beta_load)
{
    if (!(load > 0.0) || !(load_normal > 0.0)) {
        throw std::invalid_argument("load and load_normal must be > 0");
    }
    if (load <= load_normal) {
        return 1.0;
    }
    return 1.0 + beta_load * std::log(load / load_normal);
}

double dynamic_lambda(const CostContext& ctx, const QueryFeatures& features, double t,
                      std::vector<std::string>* warnings)
{
    const double rho = query_priority(ctx, features);
    const double sigma = load_factor(lookup(ctx.load, t, "load", warnings), ctx.load_normal, ctx.beta_load);
    return ctx.lambda_base * rho * sigma;
}

double score(double utility, double cost, double lambda)
{
    return utility - lambda * cost;
}

}  // namespace agentsearch
