#include "forecrew/narrative.hpp"

#include <cstdlib>

#include "httplib.h"

#include "text.hpp"

namespace forecrew {

namespace {

constexpr std::string_view kNarrativeLead = "extract all task relation changes in the specified JSON format: ";
constexpr std::string_view kNarrativeTail = "\n\nPlease output your response";

const char *kReask =
    "Your previous reply could not be read. Respond with only a JSON object of the form "
    "{\"changes\": [{\"constraint_type\": <number>, \"parameters\": [<value1>, <value2>, ...]}]} and nothing else.";

std::string env_or(const char *name, std::string fallback = {}) {
    const char *v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

} // namespace

HttpChatClient::HttpChatClient(std::string url, std::string model, std::string token, double timeout_seconds)
    : url_(std::move(url)), model_(std::move(model)), token_(std::move(token)), timeout_(timeout_seconds) {}

std::unique_ptr<HttpChatClient> HttpChatClient::from_env() {
    const auto url = env_or("FORECREW_LLM_URL");
    if (url.empty()) return nullptr;
    return std::make_unique<HttpChatClient>(url, env_or("FORECREW_LLM_MODEL", "default"), env_or("FORECREW_LLM_TOKEN"));
}

std::string HttpChatClient::complete(const std::vector<ChatMessage> &messages) {
    if (url_.rfind("http://", 0) != 0) {
        throw Error(ErrorCode::ClientUnavailable, "only http:// endpoints are supported: " + url_);
    }
    const auto slash = url_.find('/', 7);
    const std::string origin = url_.substr(0, slash);
    const std::string path = slash == std::string::npos ? "/v1/chat/completions" : url_.substr(slash);

    Json body = {{"model", model_}, {"temperature", 0}, {"messages", Json::array()}};
    for (const auto &m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});

    httplib::Client cli(origin);
    const auto secs = static_cast<time_t>(timeout_);
    cli.set_connection_timeout(10);
    cli.set_read_timeout(secs);
    cli.set_write_timeout(secs);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw Error(ErrorCode::ClientUnavailable, "request to " + url_ + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw Error(ErrorCode::ClientUnavailable, "endpoint answered HTTP " + std::to_string(res->status));
    }
    try {
        const auto doc = Json::parse(res->body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception &e) {
        throw Error(ErrorCode::ClientUnavailable, std::string("unexpected completion payload: ") + e.what());
    }
}

std::string RuleBasedClient::complete(const std::vector<ChatMessage> &messages) {
    if (messages.empty()) return R"({"changes": []})";
    // The narrative sits between the template's lead-in and closing instruction.
    const std::string *prompt = nullptr;
    for (const auto &m : messages) {
        if (m.role == "user" && text::contains(m.content, kNarrativeLead)) prompt = &m.content;
    }
    if (!prompt) return R"({"changes": []})";
    const auto a = prompt->find(kNarrativeLead) + kNarrativeLead.size();
    const auto b = prompt->rfind(kNarrativeTail);
    const auto narrative = prompt->substr(a, b == std::string::npos || b < a ? std::string::npos : b - a);
    try {
        return save_deltas(rule_parse(narrative, kb_));
    } catch (const Error &) {
        return R"({"changes": []})";
    }
}

Extraction extract(std::string_view narrative, const TaskKnowledgeBase &kb, LanguageModelClient &client) {
    const auto prompt = render_prompt(kb, narrative);
    std::vector<ChatMessage> messages = {{"system", prompt.system}, {"user", prompt.user}};
    Extraction result;
    DeltaParseResult parsed;
    for (int attempt = 1;; ++attempt) {
        result.attempts = attempt;
        result.raw_response = client.complete(messages);
        try {
            parsed = parse_deltas_lenient(result.raw_response);
            break;
        } catch (const Error &e) {
            if (attempt == 2) throw Error(ErrorCode::ResponseNotJson, "model reply is not a delta document: " + e.detail());
            messages.push_back({"assistant", result.raw_response});
            messages.push_back({"user", kReask});
        }
    }
    result.diagnostics = parsed.diagnostics;
    for (auto &d : parsed.deltas) {
        if (auto why = check_delta(kb.instance(), d)) {
            result.diagnostics.push_back("dropped " + describe(d) + ": " + *why);
        } else {
            result.deltas.push_back(std::move(d));
        }
    }
    return result;
}

} // namespace forecrew
