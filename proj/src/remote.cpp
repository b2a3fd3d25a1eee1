#include "agentsearch/executor.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <thread>

namespace agentsearch {

using json = nlohmann::json;

void RemoteEndpoint::validate() const
{
    if (!(timeout_seconds > 0.0)) throw std::invalid_argument("remote.timeout_seconds: must be > 0");
    if (max_retries < 0) throw std::invalid_argument("remote.max_retries: must be >= 0");
    if (!(backoff_base_seconds >= 0.0)) throw std::invalid_argument("remote.backoff_base_seconds: must be >= 0");
    if (token_accounting != "usage" && token_accounting != "estimate") {
        throw std::invalid_argument("remote.token_accounting: must be 'usage' or 'estimate'");
    }
}

std::string build_chat_request(const RemoteEndpoint& endpoint, const OperatorSpec& op, const Task& task,
                               const StepContext& context)
{
    std::string user = task.prompt.empty() ? "Task " + task.id : task.prompt;
    if (!context.text.empty()) {
        user += "\n\nPrior answers:\n" + context.text;
    }
    json body = {
        {"model", endpoint.model},
        {"temperature", endpoint.temperature},
        {"messages", json::array({
            {{"role", "system"}, {"content", op.prompt_template}},
            {{"role", "user"}, {"content", user}},
        })},
    };
    return body.dump();
}

namespace {

enum class AttemptOutcome { ok, retryable, fatal };

struct Attempt {
    AttemptOutcome outcome = AttemptOutcome::fatal;
    std::string diagnostic;
    std::string content;
    std::int64_t tokens = 0;
    double confidence = 0.0;
};

std::int64_t estimate_tokens(const std::string& text) { return static_cast<std::int64_t>((text.size() + 3) / 4); }

// Accepts both the bare {content, usage} shape and the choices[0].message.content shape.
Attempt parse_response(const RemoteEndpoint& endpoint, const std::string& request, const std::string& body)
{
    Attempt a;
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        a.diagnostic = "malformed response: body is not a JSON object";
        return a;
    }
    const json* content = nullptr;
    if (doc.contains("content") && doc["content"].is_string()) {
        content = &doc["content"];
    } else if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
        const json& choice = doc["choices"][0];
        if (choice.contains("message") && choice["message"].contains("content") &&
            choice["message"]["content"].is_string()) {
            content = &choice["message"]["content"];
        }
    }
    if (content == nullptr) {
        a.diagnostic = "malformed response: no content field";
        return a;
    }
    a.content = content->get<std::string>();

    const bool has_usage = doc.contains("usage") && doc["usage"].is_object() &&
                           doc["usage"].contains("prompt_tokens") && doc["usage"].contains("completion_tokens") &&
                           doc["usage"]["prompt_tokens"].is_number() && doc["usage"]["completion_tokens"].is_number();
    if (endpoint.token_accounting == "usage" && has_usage) {
        a.tokens = doc["usage"]["prompt_tokens"].get<std::int64_t>() + doc["usage"]["completion_tokens"].get<std::int64_t>();
    } else {
        a.tokens = estimate_tokens(request) + estimate_tokens(a.content);
        if (endpoint.token_accounting == "usage") {
            a.diagnostic = "usage missing; tokens estimated";
        }
    }
    if (doc.contains("confidence") && doc["confidence"].is_number()) {
        a.confidence = std::clamp(doc["confidence"].get<double>(), 0.0, 1.0);
    }
    a.outcome = AttemptOutcome::ok;
    return a;
}

Attempt attempt_once(const RemoteEndpoint& endpoint, const std::string& request)
{
    httplib::Client client(endpoint.base_url);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(endpoint.timeout_seconds));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    auto res = client.Post(endpoint.path, request, "application/json");
    Attempt a;
    if (!res) {
        a.outcome = AttemptOutcome::retryable;
        a.diagnostic = "transport error: " + httplib::to_string(res.error());
        return a;
    }
    if (res->status == 429 || res->status >= 500) {
        a.outcome = AttemptOutcome::retryable;
        a.diagnostic = "http status " + std::to_string(res->status);
        return a;
    }
    if (res->status < 200 || res->status >= 300) {
        a.diagnostic = "http status " + std::to_string(res->status);
        return a;
    }
    return parse_response(endpoint, request, res->body);
}

}  // namespace

StepResult remote_execute(const RemoteEndpoint& endpoint, const OperatorSpec& op, const Task& task,
                          const StepContext& context)
{
    StepResult out;
    out.operator_id = op.id;
    out.api_calls = 0;

    const auto started = std::chrono::steady_clock::now();
    try {
        endpoint.validate();
        const std::string request = build_chat_request(endpoint, op, task, context);
        double backoff = endpoint.backoff_base_seconds;
        for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
                backoff *= endpoint.backoff_factor;
            }
            ++out.api_calls;
            out.attempts = attempt + 1;
            Attempt a = attempt_once(endpoint, request);
            out.diagnostic = a.diagnostic;
            if (a.outcome == AttemptOutcome::ok) {
                out.success = true;
                out.answer = std::move(a.content);
                out.tokens = a.tokens;
                out.confidence = a.confidence;
                break;
            }
            if (a.outcome == AttemptOutcome::fatal) {
                break;
            }
        }
    } catch (const std::exception& e) {
        out.success = false;
        out.diagnostic = std::string("remote step failed: ") + e.what();
    }
    out.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
}

}  // namespace agentsearch
