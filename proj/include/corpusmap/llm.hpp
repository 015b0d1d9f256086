#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "corpusmap/config.hpp"

namespace corpusmap::llm {

struct ChatMessage {
    std::string role;
    std::string content;
};

enum class Kind { stub, remote };

/// Text generator behind labeling, routing and answering. The stub kind has
/// no completion endpoint: every caller implements a format-defined offline
/// rule for it, and falls back to that rule (marked degraded) when a remote
/// call fails.
class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    virtual Kind kind() const = 0;
    /// Throws Error(provider_unavailable) on failure.
    virtual std::string complete(const std::vector<ChatMessage>& messages) const = 0;
};

class StubLlm final : public LlmProvider {
public:
    Kind kind() const override { return Kind::stub; }
    std::string complete(const std::vector<ChatMessage>& messages) const override;
};

/// Chat-completions style client: POST {model, messages, temperature: 0,
/// max_tokens}; reads choices[0].message.content.
class RemoteLlm final : public LlmProvider {
public:
    RemoteLlm(RemoteEndpoint endpoint, int max_tokens);
    Kind kind() const override { return Kind::remote; }
    std::string complete(const std::vector<ChatMessage>& messages) const override;

private:
    RemoteEndpoint endpoint_;
    int max_tokens_;
};

std::unique_ptr<LlmProvider> make_llm(const EngineConfig& cfg);

/// Replaces each "{{name}}" with its value.
std::string render(std::string_view tpl, const std::vector<std::pair<std::string_view, std::string>>& vars);

/// Versioned prompt templates compiled in from prompts/*.txt.
namespace prompts {
extern const std::string_view label;
extern const std::string_view route;
extern const std::string_view corpus_answer;
extern const std::string_view document_answer;
}  // namespace prompts

}  // namespace corpusmap::llm
