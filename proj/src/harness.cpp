#include "agentsearch/harness.hpp"

#include "agentsearch/costmodel.hpp"
#include "agentsearch/error.hpp"
#include "agentsearch/rng.hpp"
#include "agentsearch/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace agentsearch {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

double mean_of(const std::vector<double>& xs)
{
    return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

json window_to_json(const UsageWindow& w)
{
    json records = json::array();
    for (const auto& r : w.records()) {
        records.push_back(r);
    }
    return {{"capacity", w.capacity()}, {"records", std::move(records)}};
}

UsageWindow window_from_json(const json& j)
{
    UsageWindow w(j.at("capacity").get<std::size_t>());
    for (const auto& r : j.at("records")) {
        w.push(r.get<UsageRecord>());
    }
    return w;
}

FeedbackSignals synthesize_signals(const SignalSynthesis& s, double utility, double cost, std::uint64_t seed)
{
    Rng rng(seed);
    const double rated = rng.uniform01();
    const double rating_noise = rng.uniform(-s.rating_noise, s.rating_noise);
    const double engagement_noise = rng.uniform(-0.1, 0.1);

    FeedbackSignals f;
    if (rated < s.rating_rate) {
        f.explicit_ratings.push_back(clamp01(utility + rating_noise));
    }
    f.session_time = 20.0 + 100.0 * utility;
    f.followup_count = utility >= 0.5 ? 0 : 2;
    f.engagement = clamp01(0.2 + 0.6 * utility + engagement_noise);
    f.success_indicator = utility >= 0.5 ? 1 : 0;
    f.resource_utilization = clamp01(cost / s.cost_budget);
    return f;
}

// Splits the aggregate cost across executed operators in proportion to what
// each step would have cost on its own.
std::map<std::string, double> split_cost(const ExecutionRecord& record, const OperatorRegistry& registry,
                                         const CostContext& ctx, double t, double total)
{
    std::vector<double> shares;
    for (const auto& step : record.steps) {
        ExecutionRecord one;
        one.total_tokens = step.tokens;
        one.total_api_calls = step.api_calls;
        one.total_latency = step.latency;
        one.failure_rate = step.success ? 0.0 : 1.0;
        one.privacy_risk = registry.at(step.operator_id).privacy_risk;
        shares.push_back(std::max(0.0, aggregate_cost(measure_dimensions(one, ctx, t))));
    }
    const double sum = std::accumulate(shares.begin(), shares.end(), 0.0);
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < record.steps.size(); ++i) {
        const double frac = sum > 0.0 ? shares[i] / sum : 1.0 / static_cast<double>(record.steps.size());
        out[record.steps[i].operator_id] += total * frac;
    }
    return out;
}

double window_failure_mean(const UsageWindow& window)
{
    if (window.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (const auto& r : window.records()) {
        s += r.failure_fraction;
    }
    return s / static_cast<double>(window.size());
}

// Observed failure fraction blended with the recent window, so one unlucky
// query does not dominate the failure dimension.
double smoothed_failure_rate(double observed, const UsageWindow& window)
{
    return window.empty() ? observed : 0.5 * observed + 0.5 * window_failure_mean(window);
}

void adjust_rewards(OperatorRewards& rewards, const LifecycleEvent& event)
{
    if (event.kind == LifecycleEventKind::fusion && event.fused) {
        double sum = 0.0;
        for (const auto& [id, v] : rewards.values) {
            sum += v;
        }
        const double init = rewards.values.empty() ? 0.5 : sum / static_cast<double>(rewards.values.size());
        rewards.values[event.fused->id] = init;
    } else if (event.kind == LifecycleEventKind::elimination) {
        for (const auto& id : event.removed) {
            rewards.values.erase(id);
        }
    }
}

struct Scored {
    ExecutionRecord record;
    CostDimensions dims;
    double cost = 0.0;
    double lambda = 0.0;
    double utility = 0.0;
    bool has_utility = false;
    double objective = 0.0;
};

Scored score_query(const RunConfig& config, const CostContext& ctx, const OperatorRegistry& registry,
                   const UsageWindow& window, ExecutionBackend& backend, const Architecture& arch, const Task& task,
                   const QueryFeatures& features, double t, std::uint64_t seed, std::vector<std::string>& warnings)
{
    Scored s;
    s.record = execute_architecture(backend, registry, arch, task, config.early_exit_threshold, seed,
                                    config.ablation.early_exit);
    s.record.failure_rate = smoothed_failure_rate(s.record.failure_rate, window);
    s.dims = measure_dimensions(s.record, ctx, t, &warnings);
    s.cost = aggregate_cost(s.dims);
    s.lambda = config.ablation.dynamic_cost ? dynamic_lambda(ctx, features, t, &warnings) : ctx.lambda_base;
    s.has_utility = s.record.utility.has_value();
    s.utility = s.record.utility.value_or(0.0);
    s.objective = score(s.utility, s.cost, s.lambda);
    return s;
}

void log_warnings(EventLog& log, double t, const std::string& query_id, std::vector<std::string>& warnings)
{
    for (auto& w : warnings) {
        log.append(EventKind::warning, t, {{"query_id", query_id}, {"message", std::move(w)}});
    }
    warnings.clear();
}

}  // namespace

// ---------------------------------------------------------------------------
// State
// ---------------------------------------------------------------------------

EngineState initial_state(const RunConfig& config)
{
    config.validate();
    EngineState s;
    std::vector<std::string> pool;
    for (const auto& op : config.operators) {
        OperatorSpec spec = op;
        spec.provenance = Provenance::seed;
        spec.parents.clear();
        s.registry.add(spec);
        pool.push_back(op.id);
    }
    s.supernet = make_supernet(pool, config.max_layers, config.feature_dim);
    for (const auto& [id, row] : config.conditioning_prior) {
        s.supernet.conditioning[id] = row;
    }
    s.rewards.eta_reward = config.eta_reward;
    for (const auto& id : pool) {
        s.rewards.values[id] = config.initial_reward;
    }
    s.weights.xi = config.xi;
    s.weights.zeta = config.zeta;
    s.weights.alpha_fb = config.alpha_fb;
    s.window = UsageWindow(config.window);
    return s;
}

json state_to_json(const EngineState& s)
{
    return {{"format", "agentsearch.snapshot"},
            {"queries", s.queries},
            {"supernet", s.supernet},
            {"registry", s.registry},
            {"rewards", s.rewards},
            {"weights", s.weights},
            {"lifecycle", s.lifecycle},
            {"window", window_to_json(s.window)}};
}

EngineState state_from_json(const json& j)
{
    try {
        if (j.value("format", std::string()) != "agentsearch.snapshot") {
            throw CorruptionError("not an agentsearch snapshot");
        }
        EngineState s;
        s.queries = j.at("queries").get<std::uint64_t>();
        s.supernet = j.at("supernet").get<SupernetState>();
        s.registry = j.at("registry").get<OperatorRegistry>();
        s.rewards = j.at("rewards").get<OperatorRewards>();
        s.weights = j.at("weights").get<FeedbackWeights>();
        s.lifecycle = j.at("lifecycle").get<LifecycleState>();
        s.window = window_from_json(j.at("window"));
        for (const auto& id : s.supernet.active_pool()) {
            if (!s.registry.contains(id)) {
                throw CorruptionError("snapshot: active operator '" + id + "' missing from registry");
            }
        }
        return s;
    } catch (const json::exception& e) {
        throw CorruptionError(std::string("snapshot: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw CorruptionError(std::string("snapshot: ") + e.what());
    }
}

void save_snapshot(const EngineState& state, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    out << state_to_json(state).dump(2) << '\n';
}

EngineState load_snapshot(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open snapshot '" + path + "'");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw CorruptionError(std::string("snapshot is not valid JSON: ") + e.what());
    }
    return state_from_json(j);
}

std::unique_ptr<ExecutionBackend> make_backend(const RunConfig& config)
{
    if (config.backend == "remote") {
        return std::make_unique<RemoteBackend>(config.remote);
    }
    return std::make_unique<SimulatedBackend>(config.world);
}

std::unique_ptr<FusionGenerator> make_fusion_generator(const RunConfig& config)
{
    if (config.fusion_generator == "remote") {
        return std::make_unique<RemoteFusionGenerator>(config.remote);
    }
    return std::make_unique<DeterministicComposer>();
}

// ---------------------------------------------------------------------------
// Search
// ---------------------------------------------------------------------------

SearchResult run_search(const RunConfig& config, const std::vector<Task>& tasks)
{
    auto backend = make_backend(config);
    auto generator = make_fusion_generator(config);
    return run_search(config, tasks, *backend, *generator);
}

SearchResult run_search(const RunConfig& config, const std::vector<Task>& tasks, ExecutionBackend& backend,
                        FusionGenerator& generator)
{
    SearchResult out;
    EngineState& state = out.state;
    EventLog& log = out.log;
    state = initial_state(config);
    const CostContext ctx = config.cost_context();
    const LifecycleConfig lc = config.lifecycle_config();
    const FeedbackParams fp = config.feedback_params();

    std::uint64_t last_snapshot =
        log.append(EventKind::snapshot, 0.0, {{"config", config_to_json(config)}, {"state", state_to_json(state)}})
            .seq;
    std::vector<std::string> warnings;

    for (std::size_t q = 0; q < tasks.size(); ++q) {
        const Task& task = tasks[q];
        const double t = static_cast<double>(q);
        const QueryFeatures features = featurize(task.metadata(), config.schema);
        log.append(EventKind::query, t, {{"query_id", task.id}, {"task", task}, {"features", features}});

        const Architecture arch = sample_architecture(state.supernet, features, derive_seed(config.seed, "sample", q));
        Scored s = score_query(config, ctx, state.registry, state.window, backend, arch, task, features, t,
                               derive_seed(config.seed, "execute", q), warnings);
        for (const auto& step : s.record.steps) {
            if (!step.diagnostic.empty()) {
                warnings.push_back("step " + step.operator_id + " failed: " + step.diagnostic);
            }
        }
        if (!s.has_utility) {
            warnings.push_back("task has no ground truth; utility counted as 0 and feedback skipped");
        }

        UsageRecord usage;
        usage.query_id = task.id;
        for (const auto& id : s.record.executed.operator_ids()) {
            usage.operator_ids.insert(id);
        }
        usage.utility = s.utility;
        usage.total_cost = s.cost;
        usage.per_operator_cost = split_cost(s.record, state.registry, ctx, t, s.cost);
        usage.timestamp = t;
        usage.failure_fraction =
            s.record.steps.empty() ? 0.0
                                   : static_cast<double>(s.record.failed_steps) / static_cast<double>(s.record.steps.size());
        usage.features = features.feature_vector;
        state.window.push(usage);

        log.append(EventKind::execution, t,
                   {{"query_id", task.id},
                    {"architecture", arch},
                    {"record", s.record},
                    {"cost", s.dims},
                    {"cost_total", s.cost},
                    {"lambda", s.lambda},
                    {"utility", s.utility},
                    {"objective", s.objective},
                    {"usage", usage}});
        log_warnings(log, t, task.id, warnings);

        if (config.ablation.feedback && s.has_utility) {
            const FeedbackSignals signals =
                synthesize_signals(config.signals, s.utility, s.cost, derive_seed(config.seed, "signals", q));
            IntegrationResult r = integrate(state.supernet, state.rewards, state.weights, task.id, s.record.executed,
                                            signals, s.utility, t, fp);
            state.supernet = std::move(r.state);
            state.rewards = std::move(r.rewards);
            state.weights = r.weights;
            log.append(EventKind::feedback, t, r.event);
        }
        ++state.queries;

        try {
            state.supernet.validate();
        } catch (const std::logic_error& e) {
            throw CorruptionError("engine state invalid after query '" + task.id + "': " + e.what() +
                                  "; last good snapshot is event " + std::to_string(last_snapshot));
        }

        out.outcomes.push_back(
            {task.id, task.complexity, s.record.executed, s.utility, s.cost, s.lambda, s.objective, s.record.failed_steps});

        if (state.queries % config.window == 0) {
            if (config.ablation.lifecycle) {
                LifecycleOutcome lo =
                    apply_lifecycle(state.supernet, state.registry, state.lifecycle, state.window, lc, generator);
                state.supernet = std::move(lo.state);
                state.registry = std::move(lo.registry);
                state.lifecycle = std::move(lo.lifecycle);
                json events = json::array();
                for (const auto& ev : lo.events) {
                    adjust_rewards(state.rewards, ev);
                    switch (ev.kind) {
                    case LifecycleEventKind::fusion: ++out.metrics.fusions; break;
                    case LifecycleEventKind::fusion_failed: ++out.metrics.failed_fusions; break;
                    case LifecycleEventKind::elimination: out.metrics.eliminations += ev.removed.size(); break;
                    case LifecycleEventKind::assessment: break;
                    }
                    events.push_back(ev);
                }
                log.append(EventKind::lifecycle, t, {{"events", std::move(events)}});
            }
            last_snapshot = log.append(EventKind::snapshot, t, {{"state", state_to_json(state)}}).seq;
        }
    }
    if (!tasks.empty() && state.queries % config.window != 0) {
        log.append(EventKind::snapshot, static_cast<double>(tasks.size() - 1), {{"state", state_to_json(state)}});
    }

    RunMetrics& m = out.metrics;
    m.queries = out.outcomes.size();
    std::vector<double> u, c, o;
    for (const auto& x : out.outcomes) {
        u.push_back(x.utility);
        c.push_back(x.cost);
        o.push_back(x.objective);
    }
    m.mean_utility = mean_of(u);
    m.mean_cost = mean_of(c);
    m.mean_objective = mean_of(o);
    const std::size_t tail = std::min(config.window, o.size());
    m.final_window_objective = mean_of(std::vector<double>(o.end() - static_cast<std::ptrdiff_t>(tail), o.end()));
    m.final_pool = state.supernet.active_pool();
    return out;
}

json metrics_to_json(const RunMetrics& m)
{
    return {{"queries", m.queries},
            {"mean_utility", m.mean_utility},
            {"mean_cost", m.mean_cost},
            {"mean_objective", m.mean_objective},
            {"final_window_objective", m.final_window_objective},
            {"fusions", m.fusions},
            {"failed_fusions", m.failed_fusions},
            {"eliminations", m.eliminations},
            {"final_pool", m.final_pool}};
}

// ---------------------------------------------------------------------------
// Eval
// ---------------------------------------------------------------------------

EvalResult run_eval(const EngineState& snapshot, const RunConfig& config, const std::vector<Task>& tasks,
                    ExecutionBackend& backend, std::uint64_t seed)
{
    for (const auto& id : snapshot.supernet.active_pool()) {
        if (!snapshot.registry.contains(id)) {
            throw std::invalid_argument("snapshot/pool mismatch: operator '" + id + "' is not in the registry");
        }
    }
    if (snapshot.supernet.feature_dim != config.feature_dim) {
        throw std::invalid_argument("snapshot/pool mismatch: snapshot feature_dim " +
                                    std::to_string(snapshot.supernet.feature_dim) + " but config feature_dim " +
                                    std::to_string(config.feature_dim));
    }
    const CostContext ctx = config.cost_context();
    EvalResult out;
    std::vector<std::string> warnings;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const Task& task = tasks[i];
        const double t = static_cast<double>(snapshot.queries + i);
        const QueryFeatures features = featurize(task.metadata(), config.schema);
        const Architecture arch = sample_architecture(snapshot.supernet, features, derive_seed(seed, "eval_sample", i));
        Scored s = score_query(config, ctx, snapshot.registry, snapshot.window, backend, arch, task, features, t,
                               derive_seed(seed, "eval_execute", i), warnings);
        out.records.push_back(
            {task.id, task.complexity, s.record.executed, s.utility, s.cost, s.lambda, s.objective, s.record.failed_steps});
    }

    std::map<int, std::vector<const QueryOutcome*>> buckets;
    std::vector<double> u, c, o;
    for (const auto& r : out.records) {
        u.push_back(r.utility);
        c.push_back(r.cost);
        o.push_back(r.objective);
        buckets[std::clamp(static_cast<int>(std::floor(r.complexity)), 0, 4)].push_back(&r);
    }
    out.queries = out.records.size();
    out.mean_utility = mean_of(u);
    out.mean_cost = mean_of(c);
    out.mean_objective = mean_of(o);
    for (const auto& [k, rs] : buckets) {
        EvalBucket b;
        b.label = "[" + std::to_string(k) + "," + std::to_string(k + 1) + (k == 4 ? "]" : ")");
        b.count = rs.size();
        std::vector<double> bu, bc, bo;
        for (const auto* r : rs) {
            bu.push_back(r->utility);
            bc.push_back(r->cost);
            bo.push_back(r->objective);
        }
        b.mean_utility = mean_of(bu);
        b.mean_cost = mean_of(bc);
        b.mean_objective = mean_of(bo);
        out.by_complexity.push_back(std::move(b));
    }
    return out;
}

json eval_to_json(const EvalResult& r)
{
    json buckets = json::array();
    for (const auto& b : r.by_complexity) {
        buckets.push_back({{"complexity", b.label},
                           {"count", b.count},
                           {"mean_utility", b.mean_utility},
                           {"mean_cost", b.mean_cost},
                           {"mean_objective", b.mean_objective}});
    }
    json records = json::array();
    for (const auto& q : r.records) {
        records.push_back({{"query_id", q.query_id},
                           {"complexity", q.complexity},
                           {"architecture", q.architecture},
                           {"utility", q.utility},
                           {"cost", q.cost},
                           {"lambda", q.lambda},
                           {"objective", q.objective},
                           {"failed_steps", q.failed_steps}});
    }
    return {{"queries", r.queries},
            {"mean_utility", r.mean_utility},
            {"mean_cost", r.mean_cost},
            {"mean_objective", r.mean_objective},
            {"by_complexity", std::move(buckets)},
            {"records", std::move(records)}};
}

// ---------------------------------------------------------------------------
// Task generation
// ---------------------------------------------------------------------------

namespace {

std::vector<std::pair<std::string, double>> mix_from_json(const json& j, const std::string& key)
{
    if (!j.is_object() || j.empty()) {
        throw ConfigError(key, "must be a non-empty object of weights");
    }
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [name, w] : j.items()) {
        if (!w.is_number() || w.get<double>() < 0.0) {
            throw ConfigError(key + "." + name, "weight must be a number >= 0");
        }
        out.emplace_back(name, w.get<double>());
    }
    return out;
}

std::size_t draw(Rng& rng, const std::vector<std::pair<std::string, double>>& mix)
{
    double total = 0.0;
    for (const auto& [name, w] : mix) {
        total += w;
    }
    std::vector<double> probs;
    for (const auto& [name, w] : mix) {
        probs.push_back(w / total);
    }
    return rng.categorical(probs);
}

void validate_mix(const std::vector<std::pair<std::string, double>>& mix, const std::string& key)
{
    double total = 0.0;
    for (const auto& [name, w] : mix) {
        if (!(w >= 0.0)) {
            throw ConfigError(key + "." + name, "weight must be >= 0");
        }
        total += w;
    }
    if (!(total > 0.0)) {
        throw ConfigError(key, "weights must not all be zero");
    }
}

}  // namespace

TaskGenSpec task_spec_from_json(const json& j)
{
    TaskGenSpec spec;
    if (!j.is_object()) {
        throw ConfigError("<root>", "task spec must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "count") {
                spec.count = value.get<std::size_t>();
            } else if (key == "seed") {
                spec.seed = value.get<std::uint64_t>();
            } else if (key == "domain_mix") {
                spec.domain_mix = mix_from_json(value, key);
            } else if (key == "tier_mix") {
                spec.tier_mix = mix_from_json(value, key);
            } else if (key == "complexity_mean") {
                spec.complexity_mean = value.get<double>();
            } else if (key == "complexity_spread") {
                spec.complexity_spread = value.get<double>();
            } else if (key == "required_tags") {
                spec.required_tags = value.get<std::map<std::string, std::set<std::string>>>();
            } else if (key == "factor_levels") {
                spec.factor_levels = value.get<std::vector<std::vector<std::string>>>();
            } else if (key == "id_prefix") {
                spec.id_prefix = value.get<std::string>();
            } else {
                throw ConfigError(key, "unknown key");
            }
        } catch (const json::exception& e) {
            throw ConfigError(key, std::string("wrong type: ") + e.what());
        }
    }
    return spec;
}

std::vector<Task> gen_tasks(const TaskGenSpec& spec)
{
    if (!(spec.complexity_mean >= 0.0 && spec.complexity_mean <= kMaxComplexity)) {
        throw ConfigError("complexity_mean", "must be in [0, 5]");
    }
    if (!(spec.complexity_spread >= 0.0)) {
        throw ConfigError("complexity_spread", "must be >= 0");
    }
    validate_mix(spec.domain_mix, "domain_mix");
    validate_mix(spec.tier_mix, "tier_mix");
    for (std::size_t k = 0; k < spec.factor_levels.size(); ++k) {
        if (spec.factor_levels[k].empty()) {
            throw ConfigError("factor_levels[" + std::to_string(k) + "]", "must not be empty");
        }
    }

    const double m = spec.complexity_mean;
    const double half = std::min({spec.complexity_spread, m, kMaxComplexity - m});
    const std::size_t width = std::to_string(spec.count == 0 ? 0 : spec.count - 1).size();

    Rng rng(derive_seed(spec.seed, "gen_tasks"));
    std::vector<Task> tasks;
    tasks.reserve(spec.count);
    for (std::size_t i = 0; i < spec.count; ++i) {
        Task task;
        std::string index = std::to_string(i);
        task.id = spec.id_prefix + std::string(width - index.size(), '0') + index;
        task.domain = spec.domain_mix[draw(rng, spec.domain_mix)].first;
        task.tier = spec.tier_mix[draw(rng, spec.tier_mix)].first;
        task.complexity = std::clamp(m + rng.uniform(-half, half), 0.0, kMaxComplexity);
        for (const auto& levels : spec.factor_levels) {
            const auto pick = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(levels.size()));
            task.factors.push_back(levels[std::min(pick, levels.size() - 1)]);
        }
        if (auto it = spec.required_tags.find(task.domain); it != spec.required_tags.end()) {
            task.required_tags = it->second;
        }
        char answer[32];
        std::snprintf(answer, sizeof(answer), "ans-%08llx",
                      static_cast<unsigned long long>(derive_seed(spec.seed, "answer", i) & 0xffffffffULL));
        task.ground_truth = std::string(answer);
        task.prompt = "Solve " + task.domain + " problem " + task.id + ".";
        tasks.push_back(std::move(task));
    }
    return tasks;
}

void write_tasks(const std::vector<Task>& tasks, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    for (const auto& t : tasks) {
        out << json(t).dump() << '\n';
    }
}

std::vector<Task> read_tasks(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open task file '" + path + "'");
    }
    std::vector<Task> tasks;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            tasks.push_back(json::parse(line).get<Task>());
        } catch (const json::exception& e) {
            throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return tasks;
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

ReplayResult replay(const EventLog& log, const std::optional<RunConfig>& config)
{
    ReplayResult out;
    const auto& entries = log.entries();
    if (entries.empty()) {
        if (!config) {
            throw CorruptionError("empty event log and no config to start from");
        }
        out.config = *config;
        out.state = initial_state(*config);
        return out;
    }
    const auto& first = entries.front();
    if (first.kind != EventKind::snapshot || !first.payload.contains("config")) {
        throw CorruptionError("event log does not start with the initial snapshot");
    }
    try {
        out.config = config ? *config : config_from_json(first.payload.at("config"));
    } catch (const ConfigError& e) {
        throw CorruptionError(std::string("logged config is invalid: ") + e.what());
    }
    out.state = state_from_json(first.payload.at("state"));
    out.events_applied = 1;

    EngineState& state = out.state;
    const FeedbackParams fp = out.config.feedback_params();
    for (std::size_t i = 1; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (e.seq != i) {
            throw CorruptionError("event log sequence gap at position " + std::to_string(i));
        }
        try {
            switch (e.kind) {
            case EventKind::query:
            case EventKind::warning:
                break;
            case EventKind::execution:
                state.window.push(e.payload.at("usage").get<UsageRecord>());
                ++state.queries;
                break;
            case EventKind::feedback: {
                const FeedbackEvent fe = e.payload.get<FeedbackEvent>();
                IntegrationResult r =
                    integrate_signals(state.supernet, state.rewards, state.weights, fe.query_id, fe.operator_ids, fe.fe,
                                      fe.fi, fe.fs, fe.realized_utility, fe.t, fp);
                if (r.event.rewards_after != fe.rewards_after || r.event.omega_after != fe.omega_after) {
                    throw CorruptionError("feedback event " + std::to_string(e.seq) + " does not reproduce");
                }
                state.supernet = std::move(r.state);
                state.rewards = std::move(r.rewards);
                state.weights = r.weights;
                break;
            }
            case EventKind::lifecycle:
                for (const auto& item : e.payload.at("events")) {
                    const LifecycleEvent ev = item.get<LifecycleEvent>();
                    apply_lifecycle_event(state.supernet, state.registry, state.lifecycle, ev,
                                          out.config.history_length);
                    adjust_rewards(state.rewards, ev);
                }
                break;
            case EventKind::snapshot:
                if (state_to_json(state) != e.payload.at("state")) {
                    throw CorruptionError("snapshot event " + std::to_string(e.seq) +
                                          " does not match the replayed state");
                }
                break;
            }
        } catch (const json::exception& ex) {
            throw CorruptionError("event " + std::to_string(e.seq) + ": " + ex.what());
        }
        ++out.events_applied;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Explain
// ---------------------------------------------------------------------------

std::string explain_query(const EventLog& log, const std::string& query_id, const ExplainOptions& options,
                          ExecutionBackend* backend)
{
    const auto& entries = log.entries();
    std::optional<std::size_t> query_seq;
    for (const auto& e : entries) {
        if (e.kind == EventKind::query && e.payload.value("query_id", std::string()) == query_id) {
            query_seq = e.seq;
            break;
        }
    }
    if (!query_seq) {
        throw std::invalid_argument("query '" + query_id + "' not found in the event log");
    }
    const EventLogEntry* exec = nullptr;
    for (std::size_t i = *query_seq + 1; i < entries.size(); ++i) {
        if (entries[i].kind == EventKind::execution && entries[i].payload.value("query_id", std::string()) == query_id) {
            exec = &entries[i];
            break;
        }
    }
    if (exec == nullptr) {
        throw CorruptionError("query '" + query_id + "' has no execution event");
    }

    const ReplayResult before = replay(log.prefix(*query_seq));
    const RunConfig& config = before.config;
    const EngineState& state = before.state;
    const auto& qpayload = entries[*query_seq].payload;
    const Task task = qpayload.at("task").get<Task>();
    const QueryFeatures features = qpayload.at("features").get<QueryFeatures>();
    const Architecture arch = exec->payload.at("architecture").get<Architecture>();
    const CostDimensions dims = exec->payload.at("cost").get<CostDimensions>();
    const double t = entries[*query_seq].t;

    const DecisionTrace trace =
        build_trace(state.supernet, state.registry, config.schema, features, query_id, arch, dims, state.window,
                    config.neighbours);

    std::vector<std::pair<std::size_t, std::string>> swaps = options.counterfactuals;
    if (swaps.empty() && options.auto_counterfactuals) {
        for (std::size_t i = 0; i < trace.steps.size(); ++i) {
            const auto& dist = trace.steps[i].distribution;
            std::optional<std::size_t> best;
            for (std::size_t c = 0; c < dist.choices.size(); ++c) {
                if (dist.choices[c] == kExit || dist.choices[c] == trace.steps[i].operator_id) {
                    continue;
                }
                if (!best || dist.probs[c] > dist.probs[*best]) {
                    best = c;
                }
            }
            if (best) {
                swaps.emplace_back(i, dist.choices[*best]);
            }
        }
    }

    std::vector<CounterfactualResult> cfs;
    if (!swaps.empty()) {
        std::unique_ptr<ExecutionBackend> owned;
        if (backend == nullptr) {
            owned = make_backend(config);
            backend = owned.get();
        }
        const CostContext ctx = config.cost_context();
        OutcomeEstimator estimator = [&](const Architecture& g, std::uint64_t seed) {
            const ExecutionRecord r = execute_architecture(*backend, state.registry, g, task,
                                                           config.early_exit_threshold, seed, config.ablation.early_exit);
            return OutcomeSample{r.utility.value_or(0.0), aggregate_cost(measure_dimensions(r, ctx, t))};
        };
        for (const auto& [pos, alt] : swaps) {
            cfs.push_back(counterfactual(state.supernet, estimator, arch, pos, alt, options.samples,
                                         derive_seed(options.seed, query_id, pos)));
        }
    }

    std::optional<AttentionMap> attention;
    if (options.attention) {
        std::vector<OperatorSpec> ops;
        std::set<std::string> seen;
        for (const auto& step : arch.steps) {
            if (seen.insert(step.operator_id).second) {
                ops.push_back(state.registry.at(step.operator_id));
            }
        }
        std::vector<std::string> labels;
        for (std::size_t i = 0; i < features.feature_vector.size(); ++i) {
            labels.push_back(config.schema.component_name(i));
            if (labels.back() == "pad") {
                labels.back() = "pad" + std::to_string(i);
            }
        }
        attention = attention_map(features.feature_vector, ops, labels);
    }
    return render_report(trace, cfs, attention, options.format);
}

}  // namespace agentsearch
