#include "corpusmap/llm.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "corpusmap/error.hpp"
#include "corpusmap/http_util.hpp"

namespace corpusmap::llm {

namespace prompts {
#include "corpusmap/prompts.inc"
}  // namespace prompts

std::string StubLlm::complete(const std::vector<ChatMessage>&) const
{
    fail(ErrorCode::provider_unavailable, "the stub LLM has no completion endpoint");
}

RemoteLlm::RemoteLlm(RemoteEndpoint endpoint, int max_tokens)
    : endpoint_(std::move(endpoint)), max_tokens_(max_tokens)
{
    if (endpoint_.url.empty()) fail(ErrorCode::invalid_argument, "RemoteLlm: endpoint URL is empty");
}

std::string RemoteLlm::complete(const std::vector<ChatMessage>& messages) const
{
    const UrlParts url = split_url(endpoint_.url);
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    const nlohmann::json body{
        {"model", endpoint_.model}, {"messages", msgs}, {"temperature", 0}, {"max_tokens", max_tokens_}};

    httplib::Client client(url.base);
    client.set_connection_timeout(endpoint_.timeout_seconds, 0);
    client.set_read_timeout(endpoint_.timeout_seconds, 0);
    auto res = client.Post(url.path, body.dump(), "application/json");
    if (!res) fail(ErrorCode::provider_unavailable, "LLM transport error: " + httplib::to_string(res.error()));
    if (res->status != 200) fail(ErrorCode::provider_unavailable, "LLM returned HTTP " + std::to_string(res->status));
    try {
        const auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::provider_unavailable, std::string("malformed LLM response: ") + e.what());
    }
}

std::unique_ptr<LlmProvider> make_llm(const EngineConfig& cfg)
{
    if (cfg.llm.url.empty()) return std::make_unique<StubLlm>();
    return std::make_unique<RemoteLlm>(cfg.llm, cfg.llm_max_tokens);
}

std::string render(std::string_view tpl, const std::vector<std::pair<std::string_view, std::string>>& vars)
{
    std::string out;
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        const auto open = tpl.find("{{", pos);
        if (open == std::string_view::npos) break;
        const auto close = tpl.find("}}", open + 2);
        if (close == std::string_view::npos) break;
        out.append(tpl.substr(pos, open - pos));
        const std::string_view name = tpl.substr(open + 2, close - open - 2);
        bool found = false;
        for (const auto& [key, value] : vars) {
            if (key == name) {
                out.append(value);
                found = true;
                break;
            }
        }
        if (!found) out.append(tpl.substr(open, close + 2 - open));
        pos = close + 2;
    }
    out.append(tpl.substr(pos));
    return out;
}

}  // namespace corpusmap::llm
