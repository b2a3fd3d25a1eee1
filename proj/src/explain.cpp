#include "agentsearch/explain.hpp"

#include "agentsearch/rng.hpp"
#include "agentsearch/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace agentsearch {

namespace {

const std::map<std::pair<std::string, std::string>, std::string>& rule_table()
{
    static const std::map<std::pair<std::string, std::string>, std::string> rules = {
        {{"cot", "high_complexity"}, "step-by-step decomposition of a high-complexity query"},
        {{"cot", "low_complexity"}, "a short explicit reasoning chain"},
        {{"cot", "domain:math"}, "explicit arithmetic reasoning"},
        {{"cot", "domain:basic_math"}, "explicit arithmetic reasoning"},
        {{"refine", "high_complexity"}, "iterative correction of intermediate errors"},
        {{"refine", "low_complexity"}, "a final consistency pass"},
        {{"refine", "domain:code"}, "repairing generated code"},
        {{"debate", "high_complexity"}, "cross-examining competing solutions"},
        {{"debate", "domain:math"}, "cross-checking numeric answers"},
        {{"ensemble", "high_complexity"}, "aggregating independent candidate answers"},
        {{"ensemble", "domain:code"}, "selecting among candidate programs"},
        {{"self_consistency", "domain:math"}, "majority voting over sampled solutions"},
        {{"self_consistency", "high_complexity"}, "majority voting over sampled solutions"},
        {{"react", "domain:tool"}, "interleaving reasoning with tool calls"},
        {{"code_test", "domain:code"}, "running tests against generated code"},
        {{"reflexion", "domain:code"}, "learning from failed attempts"},
        {{"reflexion", "high_complexity"}, "learning from failed attempts"},
    };
    return rules;
}

std::string describe_feature(const std::string& feature)
{
    if (feature == "high_complexity") return "a high-complexity query";
    if (feature == "low_complexity") return "a low-complexity query";
    if (feature.rfind("domain:", 0) == 0) return feature.substr(7) + " queries";
    return feature;
}

constexpr double kHighComplexity = 3.0;

std::string complexity_band(double complexity)
{
    return complexity >= kHighComplexity ? "high_complexity" : "low_complexity";
}

// Feature component contributing most to the operator's conditioning offset.
std::string dominant_feature(const SupernetState& state, const FeatureSchema& schema,
                             const QueryFeatures& features, const std::string& op)
{
    const auto& row = state.conditioning.at(op);
    double best = 0.0;
    std::optional<std::size_t> best_i;
    for (std::size_t i = 0; i < std::min(row.size(), features.feature_vector.size()); ++i) {
        const double c = std::abs(row[i] * features.feature_vector[i]);
        if (c > best) {
            best = c;
            best_i = i;
        }
    }
    if (best_i) {
        const std::string name = schema.component_name(*best_i);
        if (name.rfind("domain:", 0) == 0) {
            return name;
        }
        return complexity_band(features.complexity);
    }
    return features.complexity >= kHighComplexity ? "high_complexity" : "domain:" + features.domain_tag;
}

double sample_std(const std::vector<double>& xs, double mean)
{
    if (xs.size() < 2) {
        return 0.0;
    }
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double mean_of(const std::vector<double>& xs)
{
    if (xs.empty()) {
        return 0.0;
    }
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

UtilityPrediction predict_utility(const UsageWindow& history, const std::vector<double>& features, std::size_t k)
{
    std::vector<std::pair<double, std::size_t>> by_distance;
    const auto& records = history.records();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& f = records[i].features;
        if (f.size() != features.size() || f.empty()) {
            continue;
        }
        double d2 = 0.0;
        for (std::size_t c = 0; c < f.size(); ++c) {
            d2 += (f[c] - features[c]) * (f[c] - features[c]);
        }
        by_distance.emplace_back(std::sqrt(d2), i);
    }
    std::stable_sort(by_distance.begin(), by_distance.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    UtilityPrediction out;
    const std::size_t n = std::min(k, by_distance.size());
    out.neighbours = n;
    out.low_evidence = n < k;
    out.no_history = n == 0;
    std::vector<double> utilities;
    utilities.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        utilities.push_back(records[by_distance[i].second].utility);
    }
    out.mean = mean_of(utilities);
    out.std = sample_std(utilities, out.mean);
    return out;
}

std::string rationale_phrase(const std::set<std::string>& tags, const std::string& dominant_feature)
{
    if (tags.empty()) {
        return "general-purpose processing of " + describe_feature(dominant_feature);
    }
    std::string out;
    for (const auto& tag : tags) {
        if (!out.empty()) {
            out += " and ";
        }
        auto it = rule_table().find({tag, dominant_feature});
        out += it != rule_table().end() ? it->second
                                        : "its " + tag + " capability on " + describe_feature(dominant_feature);
    }
    return out;
}

DecisionTrace build_trace(const SupernetState& state, const OperatorRegistry& registry,
                          const FeatureSchema& schema, const QueryFeatures& features, const std::string& query_id,
                          const Architecture& arch, const CostDimensions& cost, const UsageWindow& history,
                          std::size_t k)
{
    DecisionTrace trace;
    trace.query_id = query_id;
    trace.domain = features.domain_tag;
    trace.complexity = features.complexity;
    trace.terminated_by = arch.terminated_by;
    for (const auto& step : arch.steps) {
        TraceStep t;
        t.layer = step.layer;
        t.operator_id = step.operator_id;
        t.distribution = layer_distribution(state, step.layer, features);
        t.confidence = t.distribution.prob_of(step.operator_id);
        t.rationale = rationale_phrase(registry.at(step.operator_id).capability_tags,
                                       dominant_feature(state, schema, features, step.operator_id));
        trace.steps.push_back(std::move(t));
    }
    trace.predicted_utility = predict_utility(history, features.feature_vector, k);
    trace.cost_breakdown = cost;
    trace.historical_mean = trace.predicted_utility.mean;
    trace.historical_count = trace.predicted_utility.neighbours;
    return trace;
}

// ---------------------------------------------------------------------------

CounterfactualResult counterfactual(const SupernetState& state, const OutcomeEstimator& estimator,
                                    const Architecture& arch, std::size_t position, const std::string& alternative,
                                    std::size_t n_samples, std::uint64_t seed)
{
    if (position >= arch.steps.size()) {
        throw std::out_of_range("counterfactual position " + std::to_string(position) + " outside architecture");
    }
    if (!state.is_active(alternative)) {
        throw std::invalid_argument("alternative operator '" + alternative + "' is not active");
    }
    CounterfactualResult out;
    out.position = position;
    out.original = arch.steps[position].operator_id;
    out.alternative = alternative;
    if (alternative == out.original) {
        return out;
    }
    if (n_samples == 0) {
        throw std::invalid_argument("counterfactual needs at least one sample");
    }

    Architecture swapped = arch;
    swapped.steps[position].operator_id = alternative;

    std::vector<double> du;
    std::vector<double> dc;
    du.reserve(n_samples);
    dc.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const std::uint64_t s = derive_seed(seed, "counterfactual", i);
        const OutcomeSample base = estimator(arch, s);
        const OutcomeSample alt = estimator(swapped, s);
        du.push_back(alt.utility - base.utility);
        dc.push_back(alt.cost - base.cost);
    }
    out.n_samples = n_samples;
    out.delta_performance = mean_of(du);
    out.delta_cost = mean_of(dc);
    out.std_performance = sample_std(du, out.delta_performance);
    out.std_cost = sample_std(dc, out.delta_cost);
    return out;
}

// ---------------------------------------------------------------------------

std::vector<double> tag_embedding(const std::set<std::string>& tags, std::size_t dim)
{
    std::vector<double> out(dim, 0.0);
    for (const auto& tag : tags) {
        const std::uint64_t h = fnv1a(tag);
        for (std::size_t i = 0; i < dim; ++i) {
            const std::uint64_t bits = mix64(h ^ mix64(i + 1));
            out[i] += static_cast<double>(bits >> 11) * 0x1.0p-53 * 2.0 - 1.0;
        }
    }
    return out;
}

AttentionMap attention_map(const std::vector<double>& features, const std::vector<OperatorSpec>& operators,
                           std::vector<std::string> row_labels)
{
    if (operators.empty()) {
        throw std::invalid_argument("attention map needs at least one operator");
    }
    AttentionMap map;
    if (row_labels.empty()) {
        for (std::size_t i = 0; i < features.size(); ++i) {
            row_labels.push_back("f" + std::to_string(i));
        }
    }
    if (row_labels.size() != features.size()) {
        throw std::invalid_argument("attention row labels do not match the feature vector");
    }
    map.row_labels = std::move(row_labels);

    std::vector<std::vector<double>> embeddings;
    for (const auto& op : operators) {
        map.operators.push_back(op.id);
        embeddings.push_back(tag_embedding(op.capability_tags, features.size()));
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
        std::vector<double> row(operators.size());
        for (std::size_t j = 0; j < operators.size(); ++j) {
            row[j] = features[i] * embeddings[j][i];
        }
        const double hi = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (double& x : row) {
            x = std::exp(x - hi);
            total += x;
        }
        for (double& x : row) {
            x /= total;
        }
        map.weights.push_back(std::move(row));
    }
    return map;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

nlohmann::json report_tree(const DecisionTrace& trace, const std::vector<CounterfactualResult>& counterfactuals,
                           const std::optional<AttentionMap>& attention)
{
    using nlohmann::json;
    json tree;
    tree["query"] = {{"id", trace.query_id}, {"domain", trace.domain}, {"complexity", trace.complexity}};

    json ops = json::array();
    json rationale = json::array();
    for (const auto& s : trace.steps) {
        ops.push_back(s.operator_id);
        json dist = json::object();
        for (std::size_t i = 0; i < s.distribution.choices.size(); ++i) {
            dist[s.distribution.choices[i]] = s.distribution.probs[i];
        }
        rationale.push_back({{"operator", s.operator_id},
                             {"layer", s.layer},
                             {"reason", s.rationale},
                             {"confidence", s.confidence},
                             {"distribution", std::move(dist)}});
    }
    tree["architecture"] = {{"operators", std::move(ops)},
                            {"terminated_by", std::string(to_string(trace.terminated_by))}};
    tree["rationale"] = std::move(rationale);
    tree["prediction"] = {{"mean", trace.predicted_utility.mean},
                          {"std", trace.predicted_utility.std},
                          {"neighbours", trace.predicted_utility.neighbours},
                          {"low_evidence", trace.predicted_utility.low_evidence},
                          {"no_history", trace.predicted_utility.no_history}};
    tree["cost"] = {{"token", trace.cost_breakdown.token_cost},
                    {"api", trace.cost_breakdown.api_cost},
                    {"latency", trace.cost_breakdown.latency_cost},
                    {"failure", trace.cost_breakdown.failure_cost},
                    {"privacy", trace.cost_breakdown.privacy_cost},
                    {"total", aggregate_cost(trace.cost_breakdown)}};
    tree["history"] = {{"mean", trace.historical_mean}, {"count", trace.historical_count}};

    json cfs = json::array();
    for (const auto& c : counterfactuals) {
        cfs.push_back({{"position", c.position},
                       {"original", c.original},
                       {"alternative", c.alternative},
                       {"delta_performance", c.delta_performance},
                       {"delta_cost", c.delta_cost},
                       {"std_performance", c.std_performance},
                       {"std_cost", c.std_cost},
                       {"samples", c.n_samples}});
    }
    tree["counterfactuals"] = std::move(cfs);

    if (attention) {
        json rows = json::array();
        for (std::size_t i = 0; i < attention->weights.size(); ++i) {
            rows.push_back({{"feature", attention->row_labels[i]}, {"weights", attention->weights[i]}});
        }
        tree["attention"] = {{"operators", attention->operators}, {"rows", std::move(rows)}};
    } else {
        tree["attention"] = nullptr;
    }
    return tree;
}

namespace {

std::string num(const nlohmann::json& v) { return format_double(v.get<double>()); }

std::string join(const std::vector<std::string>& parts, const std::string& sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i != 0) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

std::vector<std::string> split(const std::string& s, const std::string& sep)
{
    std::vector<std::string> out;
    if (s.empty()) {
        return out;
    }
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + sep.size();
    }
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

std::string after(const std::string& s, const std::string& prefix)
{
    if (!starts_with(s, prefix)) {
        throw std::invalid_argument("report line does not start with '" + prefix + "': " + s);
    }
    return s.substr(prefix.size());
}

// "k1=v1, k2=v2" -> map
std::map<std::string, std::string> key_values(const std::string& s)
{
    std::map<std::string, std::string> out;
    for (const auto& part : split(s, ", ")) {
        const auto eq = part.rfind('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("expected key=value, got '" + part + "'");
        }
        out[part.substr(0, eq)] = part.substr(eq + 1);
    }
    return out;
}

const char* kPlusMinus = "\xC2\xB1";

}  // namespace

std::string render_text(const nlohmann::json& tree)
{
    std::ostringstream out;
    const auto& q = tree.at("query");
    out << "Query Analysis: Domain: " << q.at("domain").get<std::string>() << ", Complexity: " << num(q.at("complexity"))
        << "\n";
    out << "Query Id: " << q.at("id").get<std::string>() << "\n";

    const auto& arch = tree.at("architecture");
    out << "Selected Architecture: " << join(arch.at("operators").get<std::vector<std::string>>(), " -> ") << "\n";
    out << "Terminated By: " << arch.at("terminated_by").get<std::string>() << "\n";

    out << "Selection Rationale:\n";
    bool first = true;
    for (const auto& step : tree.at("rationale")) {
        out << "  - " << step.at("operator").get<std::string>() << ": " << (first ? "Selected for " : "Added due to ")
            << step.at("reason").get<std::string>() << " (confidence: " << num(step.at("confidence")) << ")\n";
        out << "    layer: " << step.at("layer").get<int>() << "\n";
        std::vector<std::string> dist;
        for (const auto& [choice, p] : step.at("distribution").items()) {
            dist.push_back(choice + "=" + num(p));
        }
        out << "    distribution: " << join(dist, ", ") << "\n";
        first = false;
    }

    const auto& pred = tree.at("prediction");
    out << "Performance Prediction: Expected accuracy: " << num(pred.at("mean")) << kPlusMinus << num(pred.at("std"))
        << "\n";
    out << "    neighbours=" << pred.at("neighbours").get<std::size_t>()
        << ", low_evidence=" << (pred.at("low_evidence").get<bool>() ? "true" : "false")
        << ", no_history=" << (pred.at("no_history").get<bool>() ? "true" : "false") << "\n";

    const auto& cost = tree.at("cost");
    out << "Cost Analysis: Estimated cost: token=" << num(cost.at("token")) << ", api=" << num(cost.at("api"))
        << ", latency=" << num(cost.at("latency")) << ", failure=" << num(cost.at("failure"))
        << ", privacy=" << num(cost.at("privacy")) << ", total=" << num(cost.at("total")) << "\n";

    const auto& hist = tree.at("history");
    out << "Historical Context: Similar queries achieved " << num(hist.at("mean"))
        << " (n=" << hist.at("count").get<std::size_t>() << ")\n";

    const auto& cfs = tree.at("counterfactuals");
    if (cfs.empty()) {
        out << "Counterfactuals: none\n";
    } else {
        out << "Counterfactuals:\n";
        for (const auto& c : cfs) {
            out << "  - position " << c.at("position").get<std::size_t>() << ": "
                << c.at("original").get<std::string>() << " -> " << c.at("alternative").get<std::string>()
                << ": delta_performance=" << num(c.at("delta_performance"))
                << ", delta_cost=" << num(c.at("delta_cost")) << ", std_performance=" << num(c.at("std_performance"))
                << ", std_cost=" << num(c.at("std_cost")) << ", samples=" << c.at("samples").get<std::size_t>()
                << "\n";
        }
    }

    const auto& att = tree.at("attention");
    if (att.is_null()) {
        out << "Attention: none\n";
    } else {
        out << "Attention:\n";
        out << "  operators: " << join(att.at("operators").get<std::vector<std::string>>(), ", ") << "\n";
        for (const auto& row : att.at("rows")) {
            std::vector<std::string> ws;
            for (const auto& w : row.at("weights")) {
                ws.push_back(num(w));
            }
            out << "  " << row.at("feature").get<std::string>() << ": " << join(ws, ", ") << "\n";
        }
    }
    return out.str();
}

nlohmann::json parse_text_report(const std::string& text)
{
    using nlohmann::json;
    std::vector<std::string> lines;
    {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            lines.push_back(line);
        }
    }
    std::size_t i = 0;
    auto next = [&]() -> const std::string& {
        if (i >= lines.size()) {
            throw std::invalid_argument("report ended early");
        }
        return lines[i++];
    };
    auto peek_indented = [&]() { return i < lines.size() && starts_with(lines[i], "  "); };

    json tree;
    {
        const std::string rest = after(next(), "Query Analysis: Domain: ");
        const auto comma = rest.rfind(", Complexity: ");
        tree["query"]["domain"] = rest.substr(0, comma);
        tree["query"]["complexity"] = parse_double(rest.substr(comma + std::string(", Complexity: ").size()));
        tree["query"]["id"] = after(next(), "Query Id: ");
    }
    tree["architecture"]["operators"] = split(after(next(), "Selected Architecture: "), " -> ");
    tree["architecture"]["terminated_by"] = after(next(), "Terminated By: ");

    after(next(), "Selection Rationale:");
    tree["rationale"] = json::array();
    while (peek_indented()) {
        const std::string head = after(next(), "  - ");
        const auto colon = head.find(": ");
        const auto conf = head.rfind(" (confidence: ");
        std::string reason = head.substr(colon + 2, conf - colon - 2);
        if (starts_with(reason, "Selected for ")) {
            reason = reason.substr(13);
        } else {
            reason = after(reason, "Added due to ");
        }
        json step;
        step["operator"] = head.substr(0, colon);
        step["reason"] = reason;
        const std::string conf_text = head.substr(conf + 14);
        step["confidence"] = parse_double(conf_text.substr(0, conf_text.size() - 1));
        step["layer"] = std::stoi(after(next(), "    layer: "));
        json dist = json::object();
        for (const auto& [choice, p] : key_values(after(next(), "    distribution: "))) {
            dist[choice] = parse_double(p);
        }
        step["distribution"] = std::move(dist);
        tree["rationale"].push_back(std::move(step));
    }

    {
        const std::string rest = after(next(), "Performance Prediction: Expected accuracy: ");
        const auto pm = rest.find(kPlusMinus);
        tree["prediction"]["mean"] = parse_double(rest.substr(0, pm));
        tree["prediction"]["std"] = parse_double(rest.substr(pm + std::string(kPlusMinus).size()));
        const auto kv = key_values(after(next(), "    "));
        tree["prediction"]["neighbours"] = static_cast<std::size_t>(std::stoull(kv.at("neighbours")));
        tree["prediction"]["low_evidence"] = kv.at("low_evidence") == "true";
        tree["prediction"]["no_history"] = kv.at("no_history") == "true";
    }
    {
        const auto kv = key_values(after(next(), "Cost Analysis: Estimated cost: "));
        for (const char* key : {"token", "api", "latency", "failure", "privacy", "total"}) {
            tree["cost"][key] = parse_double(kv.at(key));
        }
    }
    {
        const std::string rest = after(next(), "Historical Context: Similar queries achieved ");
        const auto open = rest.rfind(" (n=");
        tree["history"]["mean"] = parse_double(rest.substr(0, open));
        tree["history"]["count"] =
            static_cast<std::size_t>(std::stoull(rest.substr(open + 4, rest.size() - open - 5)));
    }

    tree["counterfactuals"] = json::array();
    const std::string cf_head = next();
    if (cf_head != "Counterfactuals: none") {
        after(cf_head, "Counterfactuals:");
        while (peek_indented()) {
            const std::string rest = after(next(), "  - position ");
            const auto colon = rest.find(": ");
            const auto arrow = rest.find(" -> ", colon);
            const auto colon2 = rest.find(": ", arrow);
            json c;
            c["position"] = static_cast<std::size_t>(std::stoull(rest.substr(0, colon)));
            c["original"] = rest.substr(colon + 2, arrow - colon - 2);
            c["alternative"] = rest.substr(arrow + 4, colon2 - arrow - 4);
            const auto kv = key_values(rest.substr(colon2 + 2));
            for (const char* key : {"delta_performance", "delta_cost", "std_performance", "std_cost"}) {
                c[key] = parse_double(kv.at(key));
            }
            c["samples"] = static_cast<std::size_t>(std::stoull(kv.at("samples")));
            tree["counterfactuals"].push_back(std::move(c));
        }
    }

    const std::string att_head = next();
    if (att_head == "Attention: none") {
        tree["attention"] = nullptr;
    } else {
        after(att_head, "Attention:");
        json att;
        att["operators"] = split(after(next(), "  operators: "), ", ");
        att["rows"] = json::array();
        while (peek_indented()) {
            const std::string rest = after(next(), "  ");
            const auto sep = rest.rfind(": ");
            json w = json::array();
            for (const auto& x : split(rest.substr(sep + 2), ", ")) {
                w.push_back(parse_double(x));
            }
            att["rows"].push_back({{"feature", rest.substr(0, sep)}, {"weights", std::move(w)}});
        }
        tree["attention"] = std::move(att);
    }
    return tree;
}

std::string render_report(const DecisionTrace& trace, const std::vector<CounterfactualResult>& counterfactuals,
                          const std::optional<AttentionMap>& attention, ReportFormat format)
{
    const auto tree = report_tree(trace, counterfactuals, attention);
    return format == ReportFormat::text ? render_text(tree) : tree.dump(2);
}

}  // namespace agentsearch
