#include "agentsearch/executor.hpp"
#include "agentsearch/harness.hpp"
#include "support/mock_server.hpp"
#include "support/worlds.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace agentsearch;
using agentsearch::testing::MockChatServer;

namespace {

const std::string kFixture = std::string(AGENTSEARCH_FIXTURES) + "/mock_remote.json";

// Returns preset confidences in order; throws where the script says so.
class ScriptedBackend final : public ExecutionBackend {
public:
    explicit ScriptedBackend(std::vector<double> confidences, int throw_at = -1)
        : confidences_(std::move(confidences)), throw_at_(throw_at) {}

    StepResult execute_step(const OperatorSpec& op, const Task&, const StepContext& context, std::uint64_t) override
    {
        contexts.push_back(context.text);
        const int i = calls_++;
        if (i == throw_at_) throw std::runtime_error("backend exploded");
        StepResult r;
        r.operator_id = op.id;
        r.answer = "answer-" + std::to_string(i);
        r.tokens = 10 * (i + 1);
        r.api_calls = 1;
        r.latency = 0.5;
        r.success = true;
        r.confidence = confidences_.at(static_cast<std::size_t>(i));
        return r;
    }

    std::vector<std::string> contexts;

private:
    std::vector<double> confidences_;
    int throw_at_;
    int calls_ = 0;
};

OperatorRegistry registry_of(const std::vector<std::string>& ids)
{
    OperatorRegistry reg;
    for (const auto& id : ids) reg.add(agentsearch::testing::op(id, {id}, 100, 1, 1.0));
    return reg;
}

Architecture chain(const std::vector<std::string>& ids)
{
    Architecture a;
    for (std::size_t i = 0; i < ids.size(); ++i) a.steps.push_back({static_cast<int>(i) + 1, ids[i]});
    a.terminated_by = Termination::max_layers;
    return a;
}

Task task_with_truth()
{
    Task t;
    t.id = "q1";
    t.domain = "math";
    t.complexity = 0.0;
    t.required_tags = {"cot"};
    t.ground_truth = "ans-0000002a";
    t.prompt = "What is 6 * 7?";
    return t;
}

RemoteEndpoint endpoint_for(const MockChatServer& server, const std::string& scenario)
{
    RemoteEndpoint e;
    e.base_url = server.base_url();
    e.path = MockChatServer::path(scenario);
    e.backoff_base_seconds = 0.01;
    e.timeout_seconds = 5.0;
    return e;
}

}  // namespace

TEST_CASE("utility uses normalized exact match")
{
    CHECK(utility("42", std::string("42")) == 1.0);
    CHECK(utility(" 42 ", std::string("42")) == 1.0);
    CHECK(utility("Ans-X", std::string("ans-x")) == 1.0);
    CHECK(utility("41", std::string("42")) == 0.0);
    CHECK_FALSE(utility("42", std::nullopt).has_value());
}

TEST_CASE("early exit")
{
    const auto reg = registry_of({"A", "B", "C"});
    const auto task = task_with_truth();
    ScriptedBackend all({0.5, 0.6, 0.99});
    const auto full = execute_architecture(all, reg, chain({"A", "B", "C"}), task, 1.0, 1);
    CHECK(full.steps.size() == 3);
    CHECK(full.executed.terminated_by == Termination::max_layers);

    ScriptedBackend first({0.95, 0.1, 0.1});
    const auto one = execute_architecture(first, reg, chain({"A", "B", "C"}), task, 0.9, 1);
    CHECK(one.steps.size() == 1);
    CHECK(one.executed.terminated_by == Termination::early_exit);

    ScriptedBackend off({0.95, 0.1, 0.1});
    CHECK(execute_architecture(off, reg, chain({"A", "B", "C"}), task, 0.9, 1, false).steps.size() == 3);

    // Confidence on the last step does not relabel the termination.
    ScriptedBackend last({0.1, 0.1, 0.95});
    CHECK(execute_architecture(last, reg, chain({"A", "B", "C"}), task, 0.9, 1).executed.terminated_by ==
          Termination::max_layers);

    ScriptedBackend dummy({0.1});
    CHECK_THROWS_AS(execute_architecture(dummy, reg, chain({"A"}), task, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(execute_architecture(dummy, reg, Architecture{}, task, 0.9, 1), std::invalid_argument);
}

TEST_CASE("context passing and backend failures")
{
    const auto reg = registry_of({"A", "B", "C"});
    ScriptedBackend b({0.1, 0.1, 0.1}, 1);
    const auto rec = execute_architecture(b, reg, chain({"A", "B", "C"}), task_with_truth(), 0.9, 3);
    REQUIRE(rec.steps.size() == 3);
    CHECK(b.contexts == std::vector<std::string>{"", "answer-0", "answer-0"});
    CHECK_FALSE(rec.steps[1].success);
    CHECK(rec.steps[1].diagnostic.find("backend exploded") != std::string::npos);
    CHECK(rec.failed_steps == 1);
    CHECK(rec.failure_rate == doctest::Approx(1.0 / 3.0));
    CHECK(rec.total_tokens == 10 + 30);
    CHECK(rec.final_answer == "answer-2");
    CHECK(rec.utility == 0.0);
}

TEST_CASE("simulated execution: closed-form probability and determinism")
{
    SimulatedWorld w;
    w.base = -1.0;
    w.tag_quality = {{"cot", 2.5}, {"refine", 1.0}};
    const auto cot = agentsearch::testing::op("cot", {"cot"}, 400, 1, 1.0);
    auto task = task_with_truth();
    task.required_tags = {"cot", "refine", "mystery"};
    const auto r = simulated_execute(w, cot, task, {}, 5);
    CHECK(std::abs(r.confidence - 1.0 / (1.0 + std::exp(-1.5))) < 1e-15);

    const auto again = simulated_execute(w, cot, task, {}, 5);
    CHECK(again.tokens == r.tokens);
    CHECK(again.success == r.success);
    CHECK(again.latency == r.latency);
    CHECK(std::abs(r.tokens - 400) <= 40);

    auto hard = task;
    hard.complexity = 5.0;
    const auto none = agentsearch::testing::op("none", {}, 100, 1, 1.0);
    CHECK(simulated_execute(w, none, hard, {}, 1).confidence < 0.5);

    StepContext ctx;
    ctx.prior_operator_ids = {"refine"};
    w.synergy[{"refine", "cot"}] = 0.7;
    CHECK(std::abs(w.success_logit(cot, task, ctx) - (-1.0 + 2.5 + 0.7)) < 1e-15);
    ctx.prior_tags = {"refine"};
    CHECK(std::abs(w.success_logit(cot, task, ctx) - (-1.0 + 2.5 + 1.0 + 0.7)) < 1e-15);
}

TEST_CASE("simulated success frequency matches the logistic within 3 sigma")
{
    SimulatedWorld w;
    w.base = 0.3;
    const auto a = agentsearch::testing::op("a", {}, 100, 1, 1.0);
    auto task = task_with_truth();
    task.required_tags = {};
    const double p = 1.0 / (1.0 + std::exp(-0.3));
    const int n = 100000;
    int wins = 0;
    for (int s = 0; s < n; ++s) wins += simulated_execute(w, a, task, {}, static_cast<std::uint64_t>(s)).success;
    CHECK(std::abs(static_cast<double>(wins) / n - p) < 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("simulated architecture totals equal per-step sums and are reproducible")
{
    const auto cfg = agentsearch::testing::efficacy_config(3, true);
    OperatorRegistry reg;
    for (const auto& o : cfg.operators) reg.add(o);
    SimulatedBackend backend(cfg.world);
    const auto task = agentsearch::testing::efficacy_tasks(1, 9).front();
    const auto arch = chain({"cot", "refine", "debate"});
    const auto rec = execute_architecture(backend, reg, arch, task, 1.0, 77);
    std::int64_t tokens = 0;
    int calls = 0;
    double latency = 0.0;
    for (const auto& s : rec.steps) {
        tokens += s.tokens;
        calls += s.api_calls;
        latency += s.latency;
    }
    CHECK(rec.steps.size() == 3);
    CHECK(rec.total_tokens == tokens);
    CHECK(rec.total_api_calls == calls);
    CHECK(rec.total_latency == doctest::Approx(latency).epsilon(1e-15));

    const auto rec2 = execute_architecture(backend, reg, arch, task, 1.0, 77);
    CHECK(rec2.total_tokens == rec.total_tokens);
    CHECK(rec2.final_answer == rec.final_answer);
    CHECK(rec2.total_latency == rec.total_latency);

    Task stranger = task;
    stranger.id = "not-in-world";
    SimulatedWorld strict = cfg.world;
    strict.tasks = {task};
    SimulatedBackend strict_backend(strict);
    const auto failed = execute_architecture(strict_backend, reg, chain({"cot"}), stranger, 0.9, 1);
    CHECK(failed.failed_steps == 1);
}

TEST_CASE("remote: success pass-through and response shapes")
{
    MockChatServer server(kFixture);
    const auto op = agentsearch::testing::op("cot", {"cot"}, 100, 1, 1.0);
    const auto task = task_with_truth();

    const auto r = remote_execute(endpoint_for(server, "success"), op, task, {});
    CHECK(r.success);
    CHECK(r.answer == "ans-0000002a");
    CHECK(r.tokens == 42);
    CHECK(r.attempts == 1);
    CHECK(r.confidence == doctest::Approx(0.8));
    const auto sent = nlohmann::json::parse(server.last_request("success"));
    CHECK(sent["model"] == "gpt-4o-mini");
    CHECK(sent["messages"].size() >= 2);

    const auto c = remote_execute(endpoint_for(server, "choices"), op, task, {});
    CHECK(c.success);
    CHECK(c.tokens == 12);

    const auto est = remote_execute(endpoint_for(server, "no_usage"), op, task, {});
    CHECK(est.success);
    CHECK(est.tokens > 0);
    CHECK(est.diagnostic.find("estimated") != std::string::npos);
}

TEST_CASE("remote: retry then succeed")
{
    MockChatServer server(kFixture);
    const auto op = agentsearch::testing::op("cot", {"cot"}, 100, 1, 1.0);
    auto e = endpoint_for(server, "flaky");
    e.max_retries = 3;
    const auto r = remote_execute(e, op, task_with_truth(), {});
    CHECK(r.success);
    CHECK(r.attempts == 3);
    CHECK(server.hits("flaky") == 3);
    CHECK(r.tokens == 24);

    auto down = endpoint_for(server, "down");
    down.max_retries = 2;
    const auto d = remote_execute(down, op, task_with_truth(), {});
    CHECK_FALSE(d.success);
    CHECK(d.attempts == 3);
    CHECK(d.diagnostic.find("500") != std::string::npos);

    const auto rej = remote_execute(endpoint_for(server, "rejected"), op, task_with_truth(), {});
    CHECK_FALSE(rej.success);
    CHECK(rej.attempts == 1);
}

TEST_CASE("remote: timeout, malformed body and unreachable host become failed steps")
{
    MockChatServer server(kFixture);
    const auto op = agentsearch::testing::op("cot", {"cot"}, 100, 1, 1.0);
    auto slow = endpoint_for(server, "slow");
    slow.timeout_seconds = 0.3;
    slow.max_retries = 0;
    const auto t = remote_execute(slow, op, task_with_truth(), {});
    CHECK_FALSE(t.success);
    CHECK(t.latency >= 0.3);

    const auto m = remote_execute(endpoint_for(server, "malformed"), op, task_with_truth(), {});
    CHECK_FALSE(m.success);
    CHECK(m.diagnostic.find("malformed") != std::string::npos);

    RemoteEndpoint nowhere;
    nowhere.base_url = "http://127.0.0.1:1";
    nowhere.max_retries = 1;
    nowhere.backoff_base_seconds = 0.01;
    nowhere.timeout_seconds = 0.5;
    const auto n = remote_execute(nowhere, op, task_with_truth(), {});
    CHECK_FALSE(n.success);
    CHECK(n.attempts == 2);
}

TEST_CASE("remote backend inside a pipeline never aborts the run")
{
    MockChatServer server(kFixture);
    const auto reg = registry_of({"A", "B"});
    RemoteBackend bad(endpoint_for(server, "malformed"));
    const auto rec = execute_architecture(bad, reg, chain({"A", "B"}), task_with_truth(), 0.9, 1);
    CHECK(rec.steps.size() == 2);
    CHECK(rec.failed_steps == 2);
    CHECK(rec.utility == 0.0);

    RemoteBackend good(endpoint_for(server, "success"));
    const auto ok = execute_architecture(good, reg, chain({"A", "B"}), task_with_truth(), 0.9, 1);
    CHECK(ok.failed_steps == 0);
    CHECK(ok.utility == 1.0);
}
