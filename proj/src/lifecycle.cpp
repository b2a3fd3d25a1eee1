#include "agentsearch/lifecycle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace agentsearch {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Utility at or above this counts as a successful collaboration.
constexpr double kSuccessUtility = 0.5;

// Cost floor so zero-cost operators still get a finite efficiency.
constexpr double kCostFloor = 1e-12;

std::string format_number(double x)
{
    std::ostringstream out;
    out << x;
    return out.str();
}

}  // namespace

void UsageRecord::validate() const
{
    if (!(utility >= 0.0 && utility <= 1.0)) {
        throw std::invalid_argument("usage record '" + query_id + "': utility outside [0, 1]");
    }
    if (!(total_cost >= 0.0)) {
        throw std::invalid_argument("usage record '" + query_id + "': negative total cost");
    }
    double sum = 0.0;
    for (const auto& [id, cost] : per_operator_cost) {
        if (!(cost >= 0.0)) {
            throw std::invalid_argument("usage record '" + query_id + "': negative cost for '" + id + "'");
        }
        sum += cost;
    }
    if (std::abs(sum - total_cost) > 1e-9 * std::max(1.0, total_cost)) {
        throw std::invalid_argument("usage record '" + query_id + "': per-operator costs do not sum to total");
    }
}

UsageWindow::UsageWindow(std::size_t capacity) : capacity_(capacity)
{
    if (capacity_ == 0) {
        throw std::invalid_argument("usage window capacity must be >= 1");
    }
}

void UsageWindow::push(UsageRecord record)
{
    record.validate();
    if (records_.size() == capacity_) {
        records_.pop_front();
    }
    records_.push_back(std::move(record));
}

UsageWindow record_usage(UsageWindow window, UsageRecord record)
{
    window.push(std::move(record));
    return window;
}

// ---------------------------------------------------------------------------

void HealthWeights::validate() const
{
    if (alpha_h < 0.0 || beta_h < 0.0 || gamma_h < 0.0) {
        throw std::invalid_argument("health_weights: entries must be nonnegative");
    }
    if (std::abs(alpha_h + beta_h + gamma_h - 1.0) > 1e-9) {
        throw std::invalid_argument("health_weights: entries must sum to 1");
    }
}

double health_score(double f, double p, double e, const HealthWeights& weights)
{
    return weights.alpha_h * f + weights.beta_h * p + weights.gamma_h * e;
}

HealthReport assess_health(const UsageWindow& window, const HealthWeights& weights,
                           const std::vector<std::string>& pool)
{
    weights.validate();
    if (window.empty()) {
        throw std::invalid_argument("cannot assess health over an empty window");
    }
    const auto n = static_cast<double>(window.size());
    double overall = 0.0;
    for (const auto& r : window.records()) {
        overall += r.utility;
    }
    overall /= n;

    struct Tally {
        std::size_t count = 0;
        double utility = 0.0;
        double cost = 0.0;
    };
    std::map<std::string, Tally> tallies;
    for (const auto& id : pool) {
        tallies[id];
    }
    for (const auto& r : window.records()) {
        for (const auto& id : r.operator_ids) {
            auto it = tallies.find(id);
            if (it == tallies.end()) {
                continue;
            }
            ++it->second.count;
            it->second.utility += r.utility;
            if (auto c = r.per_operator_cost.find(id); c != r.per_operator_cost.end()) {
                it->second.cost += c->second;
            }
        }
    }

    HealthReport report;
    double lo = 0.0;
    double hi = 0.0;
    bool any_used = false;
    std::map<std::string, double> efficiency;
    for (const auto& [id, t] : tallies) {
        OperatorHealth h;
        h.f = static_cast<double>(t.count) / n;
        if (t.count > 0) {
            h.used = true;
            h.p = clamp01((t.utility / static_cast<double>(t.count) - overall + 1.0) / 2.0);
            const double raw = t.utility / std::max(t.cost, kCostFloor);
            efficiency[id] = raw;
            lo = any_used ? std::min(lo, raw) : raw;
            hi = any_used ? std::max(hi, raw) : raw;
            any_used = true;
        }
        report.operators[id] = h;
    }
    for (auto& [id, h] : report.operators) {
        if (h.used) {
            h.e = hi > lo ? (efficiency[id] - lo) / (hi - lo) : 1.0;
        }
        h.h = health_score(h.f, h.p, h.e, weights);
    }
    return report;
}

// ---------------------------------------------------------------------------

double pearson(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw std::invalid_argument("pearson: series lengths differ");
    }
    if (x.empty()) {
        return 0.0;
    }
    const auto n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        return 0.0;
    }
    return std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
}

std::vector<FusionCandidate> detect_fusion_candidates(const UsageWindow& window, double correlation_threshold,
                                                      const std::vector<std::string>& pool,
                                                      std::size_t min_co_occurrence)
{
    if (!(correlation_threshold > 0.0 && correlation_threshold <= 1.0)) {
        throw std::invalid_argument("fusion_threshold must lie in (0, 1]");
    }
    std::vector<std::string> ids = pool;
    std::sort(ids.begin(), ids.end());

    std::map<std::string, std::vector<double>> indicators;
    for (const auto& id : ids) {
        auto& series = indicators[id];
        series.reserve(window.size());
        for (const auto& r : window.records()) {
            series.push_back(r.operator_ids.count(id) != 0 ? 1.0 : 0.0);
        }
    }

    std::vector<FusionCandidate> out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            const auto& xi = indicators[ids[i]];
            const auto& xj = indicators[ids[j]];
            FusionCandidate c;
            c.pair = {ids[i], ids[j]};
            c.correlation = pearson(xi, xj);
            std::size_t successes = 0;
            std::size_t k = 0;
            for (const auto& r : window.records()) {
                if (xi[k] != 0.0 && xj[k] != 0.0) {
                    ++c.co_occurrence_count;
                    if (r.utility >= kSuccessUtility) {
                        ++successes;
                    }
                }
                ++k;
            }
            if (c.co_occurrence_count > 0) {
                c.joint_success_rate = static_cast<double>(successes) / static_cast<double>(c.co_occurrence_count);
            }
            if (c.correlation > correlation_threshold && c.co_occurrence_count >= min_co_occurrence) {
                out.push_back(std::move(c));
            }
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const FusionCandidate& a, const FusionCandidate& b) {
        return a.correlation > b.correlation;
    });
    return out;
}

std::string fusion_prompt(const FusionRequest& request)
{
    std::ostringstream out;
    out << "System: You are an expert in multi-agent system design.\n"
        << "Task: Generate a fused operator that combines the following:\n"
        << "Operator 1: {code: " << request.a.prompt_template
        << ", performance: " << format_number(request.performance_a) << "}\n"
        << "Operator 2: {code: " << request.b.prompt_template
        << ", performance: " << format_number(request.performance_b) << "}\n"
        << "Collaboration Pattern: Used together in " << request.history.co_occurrence_count << " queries\n"
        << "Success Rate: " << format_number(request.history.joint_success_rate) << "\n"
        << "Requirements: Maintain individual strengths while reducing redundancy\n";
    return out.str();
}

std::string fused_operator_id(const std::string& a, const std::string& b)
{
    return a + "+" + b;
}

namespace {

OperatorSpec compose(const FusionRequest& request, std::string prompt)
{
    const OperatorSpec& a = request.a;
    const OperatorSpec& b = request.b;
    OperatorSpec fused;
    fused.id = fused_operator_id(a.id, b.id);
    fused.version = 1;
    fused.capability_tags = a.capability_tags;
    fused.capability_tags.insert(b.capability_tags.begin(), b.capability_tags.end());
    fused.prompt_template = std::move(prompt);
    fused.base_token_cost = DeterministicComposer::kTokenRetention * (a.base_token_cost + b.base_token_cost);
    fused.base_api_calls = std::max(a.base_api_calls, b.base_api_calls);
    fused.base_latency = std::max(a.base_latency, b.base_latency);
    fused.privacy_risk = std::max(a.privacy_risk, b.privacy_risk);
    fused.provenance = Provenance::fused;
    fused.parents = {a.id, b.id};
    return fused;
}

}  // namespace

OperatorSpec DeterministicComposer::generate(const FusionRequest& request)
{
    return compose(request, request.a.prompt_template + "\n" + request.b.prompt_template);
}

OperatorSpec RemoteFusionGenerator::generate(const FusionRequest& request)
{
    const std::string prompt = fusion_prompt(request);
    const auto split = prompt.find('\n');
    OperatorSpec system;
    system.id = "fusion-generator";
    system.prompt_template = prompt.substr(std::string_view("System: ").size(), split - std::string_view("System: ").size());
    Task task;
    task.id = "fusion:" + request.a.id + "+" + request.b.id;
    task.prompt = prompt.substr(split + 1);

    StepResult reply = remote_execute(endpoint_, system, task, StepContext{});
    if (!reply.success || reply.answer.empty()) {
        throw std::runtime_error("fusion generator failed: " + reply.diagnostic);
    }
    return compose(request, reply.answer);
}

OperatorSpec generate_fused_operator(FusionGenerator& generator, const SupernetState& state,
                                     const FusionRequest& request)
{
    if (request.a.id == request.b.id) {
        throw std::invalid_argument("cannot fuse operator '" + request.a.id + "' with itself");
    }
    for (const auto* id : {&request.a.id, &request.b.id}) {
        if (!state.is_active(*id)) {
            throw std::invalid_argument("fusion parent '" + *id + "' is not active");
        }
    }
    OperatorSpec spec = generator.generate(request);
    if (spec.id.empty()) {
        spec.id = fused_operator_id(request.a.id, request.b.id);
    }
    spec.provenance = Provenance::fused;
    spec.parents = {request.a.id, request.b.id};
    return spec;
}

// ---------------------------------------------------------------------------

std::vector<std::string> evaluate_elimination(const std::map<std::string, std::vector<double>>& health_history,
                                              double tau_elim, const std::vector<std::string>& pool,
                                              const std::map<std::string, std::set<std::string>>& coverage,
                                              std::size_t min_assessments)
{
    auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) {
            s += x;
        }
        return s / static_cast<double>(v.size());
    };

    std::vector<std::pair<double, std::string>> candidates;
    for (const auto& id : pool) {
        auto it = health_history.find(id);
        if (it == health_history.end() || it->second.size() < std::max<std::size_t>(min_assessments, 1)) {
            continue;
        }
        const double mean = mean_of(it->second);
        if (mean < tau_elim) {
            candidates.emplace_back(mean, id);
        }
    }
    std::sort(candidates.begin(), candidates.end());

    std::set<std::string> remaining(pool.begin(), pool.end());
    std::vector<std::string> eliminated;
    for (const auto& [mean, id] : candidates) {
        if (remaining.size() <= 1) {
            break;
        }
        bool covered = true;
        auto tags_it = coverage.find(id);
        if (tags_it != coverage.end()) {
            for (const auto& tag : tags_it->second) {
                bool held = false;
                for (const auto& other : remaining) {
                    if (other == id) {
                        continue;
                    }
                    auto other_tags = coverage.find(other);
                    auto other_hist = health_history.find(other);
                    if (other_tags == coverage.end() || other_hist == health_history.end() ||
                        other_hist->second.empty()) {
                        continue;
                    }
                    if (other_tags->second.count(tag) != 0 && other_hist->second.back() >= tau_elim) {
                        held = true;
                        break;
                    }
                }
                if (!held) {
                    covered = false;
                    break;
                }
            }
        }
        if (covered) {
            remaining.erase(id);
            eliminated.push_back(id);
        }
    }
    return eliminated;
}

// ---------------------------------------------------------------------------

std::string_view to_string(LifecycleEventKind k)
{
    switch (k) {
    case LifecycleEventKind::assessment: return "assessment";
    case LifecycleEventKind::fusion: return "fusion";
    case LifecycleEventKind::fusion_failed: return "fusion_failed";
    case LifecycleEventKind::elimination: return "elimination";
    }
    return "assessment";
}

LifecycleEventKind lifecycle_event_kind_from_string(std::string_view s)
{
    if (s == "assessment") return LifecycleEventKind::assessment;
    if (s == "fusion") return LifecycleEventKind::fusion;
    if (s == "fusion_failed") return LifecycleEventKind::fusion_failed;
    if (s == "elimination") return LifecycleEventKind::elimination;
    throw std::invalid_argument("unknown lifecycle event kind '" + std::string(s) + "'");
}

void record_assessment(LifecycleState& lifecycle, const HealthReport& report, std::size_t history_length)
{
    for (const auto& [id, health] : report.operators) {
        auto& history = lifecycle.health_history[id];
        history.push_back(health.h);
        if (history_length > 0 && history.size() > history_length) {
            history.erase(history.begin(), history.end() - static_cast<std::ptrdiff_t>(history_length));
        }
    }
}

void apply_lifecycle_event(SupernetState& state, OperatorRegistry& registry, LifecycleState& lifecycle,
                           const LifecycleEvent& event, std::size_t history_length)
{
    switch (event.kind) {
    case LifecycleEventKind::assessment:
        record_assessment(lifecycle, event.report, history_length);
        break;
    case LifecycleEventKind::fusion:
        if (!event.fused) {
            throw std::invalid_argument("fusion event without an operator");
        }
        registry.add(*event.fused);
        state = add_operator(state, *event.fused, event.conditioning_row);
        break;
    case LifecycleEventKind::fusion_failed:
        break;
    case LifecycleEventKind::elimination:
        for (const auto& id : event.removed) {
            state = remove_operator(state, id);
            lifecycle.health_history.erase(id);
        }
        break;
    }
}

namespace {

bool already_fused(const OperatorRegistry& registry, const std::string& a, const std::string& b)
{
    for (const auto& [id, spec] : registry.all()) {
        if (spec.provenance == Provenance::fused && spec.parents.size() == 2 &&
            ((spec.parents[0] == a && spec.parents[1] == b) || (spec.parents[0] == b && spec.parents[1] == a))) {
            return true;
        }
    }
    return false;
}

std::vector<double> mean_row(const SupernetState& state, const std::string& a, const std::string& b)
{
    const auto& ra = state.conditioning.at(a);
    const auto& rb = state.conditioning.at(b);
    std::vector<double> row(ra.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
        row[i] = 0.5 * (ra[i] + rb[i]);
    }
    return row;
}

}  // namespace

LifecycleOutcome apply_lifecycle(const SupernetState& state, const OperatorRegistry& registry,
                                 const LifecycleState& lifecycle, const UsageWindow& window,
                                 const LifecycleConfig& config, FusionGenerator& generator)
{
    LifecycleOutcome out{state, registry, lifecycle, {}};
    auto emit = [&](LifecycleEvent ev) {
        apply_lifecycle_event(out.state, out.registry, out.lifecycle, ev, config.history_length);
        out.events.push_back(std::move(ev));
    };

    LifecycleEvent assessment;
    assessment.kind = LifecycleEventKind::assessment;
    assessment.report = assess_health(window, config.health_weights, state.active_pool());
    const HealthReport report = assessment.report;
    emit(std::move(assessment));

    if (config.fusion_enabled) {
        const auto candidates =
            detect_fusion_candidates(window, config.fusion_threshold, out.state.active_pool(), config.min_co_occurrence);
        auto best = std::find_if(candidates.begin(), candidates.end(), [&](const FusionCandidate& c) {
            return !already_fused(out.registry, c.pair.first, c.pair.second);
        });
        if (best != candidates.end()) {
            FusionRequest request{out.registry.at(best->pair.first), out.registry.at(best->pair.second),
                                  report.operators.at(best->pair.first).p, report.operators.at(best->pair.second).p,
                                  *best};
            LifecycleEvent ev;
            ev.candidate = *best;
            try {
                OperatorSpec fused = generate_fused_operator(generator, out.state, request);
                if (out.registry.contains(fused.id)) {
                    throw std::runtime_error("operator id '" + fused.id + "' already registered");
                }
                ev.kind = LifecycleEventKind::fusion;
                ev.conditioning_row = mean_row(out.state, best->pair.first, best->pair.second);
                ev.fused = std::move(fused);
            } catch (const std::exception& e) {
                ev.kind = LifecycleEventKind::fusion_failed;
                ev.message = e.what();
            }
            emit(std::move(ev));
        }
    }

    if (config.elimination_enabled) {
        std::map<std::string, std::set<std::string>> coverage;
        for (const auto& id : out.state.active_pool()) {
            coverage[id] = out.registry.at(id).capability_tags;
        }
        auto removed = evaluate_elimination(out.lifecycle.health_history, config.tau_elim, out.state.active_pool(),
                                            coverage, config.min_assessments);
        if (!removed.empty()) {
            LifecycleEvent ev;
            ev.kind = LifecycleEventKind::elimination;
            ev.removed = std::move(removed);
            emit(std::move(ev));
        }
    }
    return out;
}

}  // namespace agentsearch
