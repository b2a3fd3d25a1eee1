#include "agentsearch/config.hpp"

#include "agentsearch/error.hpp"
#include "agentsearch/serialization.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

namespace agentsearch {

namespace {

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported as unknown.
class Section {
public:
    Section(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix))
    {
        if (!j_.is_object()) {
            throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "must be an object");
        }
    }

    std::string key(const std::string& name) const { return prefix_.empty() ? name : prefix_ + "." + name; }

    bool has(const std::string& name) const { return j_.contains(name); }

    const json& raw(const std::string& name)
    {
        seen_.insert(name);
        return j_.at(name);
    }

    template <class T>
    void get(const std::string& name, T& out)
    {
        if (!has(name)) {
            return;
        }
        if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
            const json& v = raw(name);
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
                throw ConfigError(key(name), "expected a nonnegative integer");
            }
        }
        try {
            out = raw(name).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(key(name), std::string("wrong type: ") + e.what());
        } catch (const std::exception& e) {
            throw ConfigError(key(name), e.what());
        }
    }

    Section sub(const std::string& name) { return Section(raw(name), key(name)); }

    void finish() const
    {
        for (const auto& item : j_.items()) {
            if (seen_.count(item.key()) == 0) {
                throw ConfigError(key(item.key()), "unknown key");
            }
        }
    }

private:
    const json& j_;
    std::string prefix_;
    std::set<std::string> seen_;
};

Schedule schedule_from_json(const json& j, const std::string& key)
{
    if (j.is_number()) {
        return Schedule(j.get<double>());
    }
    if (!j.is_array() || j.empty()) {
        throw ConfigError(key, "expected a number or a list of [t, value] pairs");
    }
    std::vector<Schedule::Point> points;
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            throw ConfigError(key, "schedule points must be [t, value] pairs");
        }
        points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    try {
        return Schedule(std::move(points));
    } catch (const std::exception& e) {
        throw ConfigError(key, e.what());
    }
}

json schedule_to_json(const Schedule& s)
{
    const auto& pts = s.points();
    if (pts.size() == 1 && pts[0].t == 0.0) {
        return pts[0].value;
    }
    json out = json::array();
    for (const auto& p : pts) {
        out.push_back({p.t, p.value});
    }
    return out;
}

void read_weight_params(Section& parent, const std::string& name, WeightParams& w)
{
    if (!parent.has(name)) {
        return;
    }
    Section s = parent.sub(name);
    s.get("base", w.base);
    s.get("eta", w.eta);
    s.get("delta", w.delta);
    s.finish();
}

json weight_params_to_json(const WeightParams& w)
{
    return {{"base", w.base}, {"eta", w.eta}, {"delta", w.delta}};
}

void require(bool ok, const std::string& key, const std::string& what)
{
    if (!ok) {
        throw ConfigError(key, what);
    }
}

bool finite(double x) { return std::isfinite(x); }

// "remote.timeout_seconds: must be > 0" -> ConfigError("remote.timeout_seconds", ...)
[[noreturn]] void rethrow_keyed(const std::exception& e, const std::string& fallback_key)
{
    const std::string msg = e.what();
    const auto colon = msg.find(": ");
    if (colon != std::string::npos && msg.find(' ') > colon) {
        throw ConfigError(msg.substr(0, colon), msg.substr(colon + 2));
    }
    throw ConfigError(fallback_key, msg);
}

OperatorSpec make_op(std::string id, std::set<std::string> tags, std::string prompt, double tokens, int calls,
                     double latency, double privacy)
{
    OperatorSpec op;
    op.id = std::move(id);
    op.capability_tags = std::move(tags);
    op.prompt_template = std::move(prompt);
    op.base_token_cost = tokens;
    op.base_api_calls = calls;
    op.base_latency = latency;
    op.privacy_risk = privacy;
    return op;
}

}  // namespace

std::vector<OperatorSpec> default_operators()
{
    return {
        make_op("cot", {"cot"}, "Think step by step, then give the final answer on the last line.", 400, 1, 1.2, 0.05),
        make_op("refine", {"refine"}, "Check the previous answer for mistakes and restate a corrected final answer.",
                350, 1, 1.0, 0.05),
        make_op("debate", {"debate"}, "Argue two candidate solutions against each other and keep the stronger one.",
                900, 3, 2.5, 0.1),
        make_op("ensemble", {"ensemble"}, "Write three independent answers and return the majority answer.", 1200, 3,
                2.0, 0.1),
        make_op("self_consistency", {"self_consistency"},
                "Sample several reasoning paths and return the most frequent final answer.", 1000, 5, 2.2, 0.1),
        make_op("react", {"react"}, "Alternate between reasoning and tool calls until the answer is found.", 700, 2,
                3.0, 0.2),
    };
}

RunConfig default_config()
{
    RunConfig c;
    c.operators = default_operators();
    c.world.base = 1.0;
    for (const auto& op : c.operators) {
        for (const auto& tag : op.capability_tags) {
            c.world.tag_quality[tag] = 1.0;
        }
    }
    c.world.synergy[{"cot", "refine"}] = 0.5;
    c.world.noise_scale = 0.5;
    return c;
}

void RunConfig::validate() const
{
    require(max_layers >= 1, "max_layers", "must be >= 1");
    require(tau_elim >= 0.0 && tau_elim <= 1.0, "tau_elim", "must be in [0, 1]");
    require(alpha_fb >= 0.0 && finite(alpha_fb), "alpha_fb", "must be a finite value >= 0");
    require(mu > 0.0 && mu <= 1.0, "mu", "must be in (0, 1]");
    require(gamma_fb >= 0.0 && finite(gamma_fb), "gamma_fb", "must be a finite value >= 0");
    require(beta_load >= 0.0 && finite(beta_load), "beta_load", "must be a finite value >= 0");
    require(window >= 1, "window", "must be >= 1");
    require(fusion_threshold > 0.0 && fusion_threshold <= 1.0, "fusion_threshold", "must be in (0, 1]");
    require(eta_reward > 0.0 && eta_reward <= 1.0, "eta_reward", "must be in (0, 1]");
    require(initial_reward >= 0.0 && initial_reward <= 1.0, "initial_reward", "must be in [0, 1]");
    require(early_exit_threshold > 0.0 && early_exit_threshold <= 1.0, "early_exit_threshold", "must be in (0, 1]");
    require(!schema.domains.empty(), "schema.domains", "must not be empty");
    require(!schema.tiers.empty(), "schema.tiers", "must not be empty");
    require(feature_dim >= schema.required_dim(), "feature_dim",
            "must be >= " + std::to_string(schema.required_dim()) + " for the configured schema");
    require(backend == "simulated" || backend == "remote", "backend", "must be 'simulated' or 'remote'");
    require(fusion_generator == "composer" || fusion_generator == "remote", "fusion_generator",
            "must be 'composer' or 'remote'");
    require(neighbours >= 1, "neighbours", "must be >= 1");

    require(!operators.empty(), "operators", "must list at least one operator");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < operators.size(); ++i) {
        const auto& op = operators[i];
        const std::string k = "operators[" + std::to_string(i) + "]";
        require(!op.id.empty(), k + ".id", "must not be empty");
        require(op.id != kExit, k + ".id", "'" + kExit + "' is reserved");
        require(ids.insert(op.id).second, k + ".id", "duplicate operator id '" + op.id + "'");
        require(op.base_token_cost >= 0.0, k + ".base_token_cost", "must be >= 0");
        require(op.base_api_calls >= 0, k + ".base_api_calls", "must be >= 0");
        require(op.base_latency >= 0.0, k + ".base_latency", "must be >= 0");
        require(op.privacy_risk >= 0.0 && op.privacy_risk <= 1.0, k + ".privacy_risk", "must be in [0, 1]");
    }
    for (const auto& [id, row] : conditioning_prior) {
        require(ids.count(id) != 0, "conditioning_prior." + id, "not a configured operator");
        require(row.size() == feature_dim, "conditioning_prior." + id,
                "row length must equal feature_dim (" + std::to_string(feature_dim) + ")");
    }

    require(min_co_occurrence >= 1, "lifecycle.min_co_occurrence", "must be >= 1");
    require(min_assessments >= 1, "lifecycle.min_assessments", "must be >= 1");
    require(history_length >= min_assessments, "lifecycle.history_length", "must be >= lifecycle.min_assessments");
    try {
        health_weights.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("lifecycle.health_weights", e.what());
    }

    for (double x : xi) require(x >= 0.0, "feedback.xi", "entries must be >= 0");
    for (double x : zeta) require(x >= 0.0, "feedback.zeta", "entries must be >= 0");
    require(signals.rating_rate >= 0.0 && signals.rating_rate <= 1.0, "feedback.rating_rate", "must be in [0, 1]");
    require(signals.rating_noise >= 0.0, "feedback.rating_noise", "must be >= 0");
    require(signals.cost_budget > 0.0, "feedback.cost_budget", "must be > 0");

    cost_context().validate();

    require(world.noise_scale >= 0.0, "world.noise_scale", "must be >= 0");
    require(world.token_jitter >= 0.0 && world.token_jitter <= 0.1, "world.token_jitter", "must be in [0, 0.1]");
    require(world.latency_jitter >= 0.0 && world.latency_jitter < 1.0, "world.latency_jitter", "must be in [0, 1)");
    try {
        remote.validate();
    } catch (const std::invalid_argument& e) {
        rethrow_keyed(e, "remote");
    }
}

CostContext RunConfig::cost_context() const
{
    CostContext c = cost;
    c.beta_load = beta_load;
    return c;
}

LifecycleConfig RunConfig::lifecycle_config() const
{
    LifecycleConfig c;
    c.window = window;
    c.tau_elim = tau_elim;
    c.fusion_threshold = fusion_threshold;
    c.min_co_occurrence = min_co_occurrence;
    c.health_weights = health_weights;
    c.min_assessments = min_assessments;
    c.history_length = history_length;
    return c;
}

FeedbackParams RunConfig::feedback_params() const { return {mu, gamma_fb}; }

// ---------------------------------------------------------------------------

RunConfig config_from_json(const json& j)
{
    RunConfig c = default_config();
    Section root(j, "");
    root.get("max_layers", c.max_layers);
    root.get("tau_elim", c.tau_elim);
    root.get("alpha_fb", c.alpha_fb);
    root.get("mu", c.mu);
    root.get("gamma_fb", c.gamma_fb);
    root.get("beta_load", c.beta_load);
    root.get("window", c.window);
    root.get("fusion_threshold", c.fusion_threshold);
    root.get("eta_reward", c.eta_reward);
    root.get("initial_reward", c.initial_reward);
    root.get("early_exit_threshold", c.early_exit_threshold);
    root.get("feature_dim", c.feature_dim);
    root.get("seed", c.seed);
    root.get("backend", c.backend);
    root.get("fusion_generator", c.fusion_generator);
    root.get("neighbours", c.neighbours);

    if (root.has("schema")) {
        Section s = root.sub("schema");
        s.get("domains", c.schema.domains);
        s.get("tiers", c.schema.tiers);
        s.finish();
    }
    c.schema.feature_dim = c.feature_dim;

    if (root.has("operators")) {
        const json& ops = root.raw("operators");
        if (!ops.is_array()) {
            throw ConfigError("operators", "must be a list");
        }
        c.operators.clear();
        for (std::size_t i = 0; i < ops.size(); ++i) {
            try {
                c.operators.push_back(ops[i].get<OperatorSpec>());
            } catch (const std::exception& e) {
                throw ConfigError("operators[" + std::to_string(i) + "]", e.what());
            }
        }
        // A custom pool starts from a neutral world unless the world section says otherwise.
        c.world.tag_quality.clear();
        c.world.synergy.clear();
    }
    root.get("conditioning_prior", c.conditioning_prior);

    if (root.has("lifecycle")) {
        Section s = root.sub("lifecycle");
        s.get("min_co_occurrence", c.min_co_occurrence);
        s.get("min_assessments", c.min_assessments);
        s.get("history_length", c.history_length);
        if (s.has("health_weights")) {
            std::array<double, 3> w{};
            s.get("health_weights", w);
            c.health_weights = {w[0], w[1], w[2]};
        }
        s.finish();
    }

    if (root.has("feedback")) {
        Section s = root.sub("feedback");
        s.get("xi", c.xi);
        s.get("zeta", c.zeta);
        s.get("rating_rate", c.signals.rating_rate);
        s.get("rating_noise", c.signals.rating_noise);
        s.get("cost_budget", c.signals.cost_budget);
        s.finish();
    }

    if (root.has("cost")) {
        Section s = root.sub("cost");
        if (s.has("token_price_per_1k")) {
            c.cost.token_price_per_1k = schedule_from_json(s.raw("token_price_per_1k"), s.key("token_price_per_1k"));
        }
        if (s.has("api_price")) c.cost.api_price = schedule_from_json(s.raw("api_price"), s.key("api_price"));
        if (s.has("load")) c.cost.load = schedule_from_json(s.raw("load"), s.key("load"));
        read_weight_params(s, "latency", c.cost.latency);
        read_weight_params(s, "failure", c.cost.failure);
        read_weight_params(s, "privacy", c.cost.privacy);
        s.get("load_normal", c.cost.load_normal);
        s.get("rho_base", c.cost.rho_base);
        s.get("priority_tables", c.cost.priority_tables);
        s.get("lambda_base", c.cost.lambda_base);
        s.finish();
    }

    if (root.has("world")) {
        Section s = root.sub("world");
        s.get("base", c.world.base);
        s.get("tag_quality", c.world.tag_quality);
        if (s.has("synergy")) {
            const json& syn = s.raw("synergy");
            if (!syn.is_array()) {
                throw ConfigError("world.synergy", "must be a list of {first, second, value}");
            }
            c.world.synergy.clear();
            for (const auto& item : syn) {
                try {
                    c.world.synergy[{item.at("first").get<std::string>(), item.at("second").get<std::string>()}] =
                        item.at("value").get<double>();
                } catch (const json::exception& e) {
                    throw ConfigError("world.synergy", e.what());
                }
            }
        }
        s.get("operator_bonus", c.world.operator_bonus);
        s.get("noise_scale", c.world.noise_scale);
        s.get("token_jitter", c.world.token_jitter);
        s.get("latency_jitter", c.world.latency_jitter);
        s.get("master_seed", c.world.master_seed);
        s.get("tasks", c.world.tasks);
        s.finish();
    }

    if (root.has("remote")) {
        Section s = root.sub("remote");
        s.get("base_url", c.remote.base_url);
        s.get("path", c.remote.path);
        s.get("model", c.remote.model);
        s.get("timeout_seconds", c.remote.timeout_seconds);
        s.get("max_retries", c.remote.max_retries);
        s.get("backoff_base_seconds", c.remote.backoff_base_seconds);
        s.get("backoff_factor", c.remote.backoff_factor);
        s.get("temperature", c.remote.temperature);
        s.get("token_accounting", c.remote.token_accounting);
        s.finish();
    }

    if (root.has("ablation")) {
        Section s = root.sub("ablation");
        s.get("lifecycle", c.ablation.lifecycle);
        s.get("feedback", c.ablation.feedback);
        s.get("dynamic_cost", c.ablation.dynamic_cost);
        s.get("early_exit", c.ablation.early_exit);
        s.finish();
    }

    root.finish();
    c.validate();
    return c;
}

json config_to_json(const RunConfig& c)
{
    json j;
    j["max_layers"] = c.max_layers;
    j["tau_elim"] = c.tau_elim;
    j["alpha_fb"] = c.alpha_fb;
    j["mu"] = c.mu;
    j["gamma_fb"] = c.gamma_fb;
    j["beta_load"] = c.beta_load;
    j["window"] = c.window;
    j["fusion_threshold"] = c.fusion_threshold;
    j["eta_reward"] = c.eta_reward;
    j["initial_reward"] = c.initial_reward;
    j["early_exit_threshold"] = c.early_exit_threshold;
    j["feature_dim"] = c.feature_dim;
    j["seed"] = c.seed;
    j["backend"] = c.backend;
    j["fusion_generator"] = c.fusion_generator;
    j["neighbours"] = c.neighbours;
    j["schema"] = {{"domains", c.schema.domains}, {"tiers", c.schema.tiers}};
    j["operators"] = c.operators;
    j["conditioning_prior"] = c.conditioning_prior;
    j["lifecycle"] = {{"min_co_occurrence", c.min_co_occurrence},
                      {"min_assessments", c.min_assessments},
                      {"history_length", c.history_length},
                      {"health_weights",
                       {c.health_weights.alpha_h, c.health_weights.beta_h, c.health_weights.gamma_h}}};
    j["feedback"] = {{"xi", c.xi},
                     {"zeta", c.zeta},
                     {"rating_rate", c.signals.rating_rate},
                     {"rating_noise", c.signals.rating_noise},
                     {"cost_budget", c.signals.cost_budget}};
    j["cost"] = {{"token_price_per_1k", schedule_to_json(c.cost.token_price_per_1k)},
                 {"api_price", schedule_to_json(c.cost.api_price)},
                 {"load", schedule_to_json(c.cost.load)},
                 {"latency", weight_params_to_json(c.cost.latency)},
                 {"failure", weight_params_to_json(c.cost.failure)},
                 {"privacy", weight_params_to_json(c.cost.privacy)},
                 {"load_normal", c.cost.load_normal},
                 {"rho_base", c.cost.rho_base},
                 {"priority_tables", c.cost.priority_tables},
                 {"lambda_base", c.cost.lambda_base}};
    json synergy = json::array();
    for (const auto& [pair, value] : c.world.synergy) {
        synergy.push_back({{"first", pair.first}, {"second", pair.second}, {"value", value}});
    }
    j["world"] = {{"base", c.world.base},
                  {"tag_quality", c.world.tag_quality},
                  {"synergy", std::move(synergy)},
                  {"operator_bonus", c.world.operator_bonus},
                  {"noise_scale", c.world.noise_scale},
                  {"token_jitter", c.world.token_jitter},
                  {"latency_jitter", c.world.latency_jitter},
                  {"master_seed", c.world.master_seed},
                  {"tasks", c.world.tasks}};
    j["remote"] = {{"base_url", c.remote.base_url},
                   {"path", c.remote.path},
                   {"model", c.remote.model},
                   {"timeout_seconds", c.remote.timeout_seconds},
                   {"max_retries", c.remote.max_retries},
                   {"backoff_base_seconds", c.remote.backoff_base_seconds},
                   {"backoff_factor", c.remote.backoff_factor},
                   {"temperature", c.remote.temperature},
                   {"token_accounting", c.remote.token_accounting}};
    j["ablation"] = {{"lifecycle", c.ablation.lifecycle},
                     {"feedback", c.ablation.feedback},
                     {"dynamic_cost", c.ablation.dynamic_cost},
                     {"early_exit", c.ablation.early_exit}};
    return j;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config", "cannot open '" + path + "'");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

// ---------------------------------------------------------------------------

namespace {

const std::set<std::string> kIntegerKeys{"max_layers", "window", "feature_dim", "seed", "neighbours"};
const std::set<std::string> kStringKeys{"backend", "fusion_generator"};

}  // namespace

const std::vector<std::string>& scalar_config_keys()
{
    static const std::vector<std::string> keys{
        "max_layers",  "tau_elim",       "alpha_fb",       "mu",
        "gamma_fb",    "beta_load",      "window",         "fusion_threshold",
        "eta_reward",  "initial_reward", "early_exit_threshold", "feature_dim",
        "seed",        "backend",        "fusion_generator",     "neighbours",
    };
    return keys;
}

void set_scalar_key(json& j, const std::string& key, const std::string& value)
{
    const auto& keys = scalar_config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw ConfigError(key, "not a scalar configuration key");
    }
    if (kStringKeys.count(key) != 0) {
        j[key] = value;
        return;
    }
    if (kIntegerKeys.count(key) != 0) {
        if (key == "seed") {
            std::uint64_t v = 0;
            auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc() || end != value.data() + value.size()) {
                throw ConfigError(key, "expected a nonnegative integer, got '" + value + "'");
            }
            j[key] = v;
            return;
        }
        long long v = 0;
        auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || end != value.data() + value.size()) {
            throw ConfigError(key, "expected an integer, got '" + value + "'");
        }
        if (v < 0) {
            throw ConfigError(key, "must be >= 0");
        }
        j[key] = v;
        return;
    }
    try {
        j[key] = parse_double(value);
    } catch (const std::invalid_argument&) {
        throw ConfigError(key, "expected a number, got '" + value + "'");
    }
}

}  // namespace agentsearch
