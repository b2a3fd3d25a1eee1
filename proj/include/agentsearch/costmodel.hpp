#pragma once

#include "agentsearch/supernet.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace agentsearch {

struct ExecutionRecord;

/// Five measured cost dimensions, each already carrying its price or adaptive weight.
struct CostDimensions {
    double token_cost = 0.0;    // USD
    double api_cost = 0.0;      // USD
    double latency_cost = 0.0;  // weighted seconds
    double failure_cost = 0.0;  // weighted probability
    double privacy_cost = 0.0;  // weighted risk

    std::array<double, 5> as_array() const { return {token_cost, api_cost, latency_cost, failure_cost, privacy_cost}; }
    friend bool operator==(const CostDimensions&, const CostDimensions&) = default;
};

/// Piecewise-linear function of time; constant beyond its endpoints.
class Schedule {
public:
    struct Point {
        double t = 0.0;
        double value = 0.0;
    };

    Schedule() = default;
    explicit Schedule(double constant) : points_{{0.0, constant}} {}
    /// Points must be sorted by strictly increasing t.
    explicit Schedule(std::vector<Point> points);

    /// `clamped` is set when t falls outside [first.t, last.t].
    double at(double t, bool* clamped = nullptr) const;
    const std::vector<Point>& points() const { return points_; }

private:
    std::vector<Point> points_;
};

/// Adaptive-weight parameters for one weighted dimension.
struct WeightParams {
    double base = 1.0;
    double eta = 0.0;
    double delta = 0.0;
};

struct CostContext {
    Schedule token_price_per_1k{0.002};
    Schedule api_price{0.001};
    WeightParams latency{0.01, 0.0, 0.0};
    WeightParams failure{0.05, 0.0, 0.0};
    WeightParams privacy{0.05, 0.0, 0.0};

    Schedule load{1.0};
    double load_normal = 1.0;
    double beta_load = 0.2;

    double rho_base = 1.0;
    /// One lookup table per query factor; factor k of a query is looked up in table k.
    std::vector<std::map<std::string, double>> priority_tables;

    double lambda_base = 1.0;

    /// Throws ConfigError naming the first offending key.
    void validate() const;
};

double adaptive_weight(double w_base, double eta, double delta);

/// `warnings` receives one message per schedule lookup that fell outside the schedule range.
CostDimensions measure_dimensions(const ExecutionRecord& record, const CostContext& ctx, double t,
                                  std::vector<std::string>* warnings = nullptr);

double aggregate_cost(const CostDimensions& dims);

/// Throws ConfigError when a factor is missing from its table or the factor
/// count does not match the table count.
double query_priority(const CostContext& ctx, const QueryFeatures& features);

double load_factor(double load, double load_normal, double beta_load);

double dynamic_lambda(const CostContext& ctx, const QueryFeatures& features, double t,
                      std::vector<std::string>* warnings = nullptr);

/// utility - lambda * cost
double score(double utility, double cost, double lambda);

}  // namespace agentsearch
