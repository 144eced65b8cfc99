#pragma once

#include "augrag/http.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

namespace augrag {

/// Text-completion backend used by the augmenter and the generator.
class LlmClient {
public:
    virtual ~LlmClient() = default;

    /// Throws ClientError when the backend fails.
    virtual std::string complete(const std::string& prompt) = 0;
    virtual std::string identity() const = 0;
};

struct RemoteLlmConfig {
    HttpSettings http;
    int max_tokens = 256;
    double temperature = 0.0;
    std::optional<std::uint64_t> seed;
    std::ptrdiff_t max_in_flight = 4;

    void validate() const;
};

/// Client for the model server's POST /generate endpoint. At most
/// max_in_flight requests run at once.
class RemoteLlmClient : public LlmClient {
public:
    explicit RemoteLlmClient(RemoteLlmConfig cfg);

    std::string complete(const std::string& prompt) override;
    std::string identity() const override;

private:
    RemoteLlmConfig cfg_;
    std::counting_semaphore<1024> in_flight_;
};

struct StubRule {
    std::string contains;  ///< case-insensitive substring of the prompt
    std::string response;  ///< response template
};

/// Expand a stub response template against the prompt it answers:
/// {prompt} and {query} become the whole prompt, {context_words:N} the first
/// N words between <context> and </context> (or of the prompt if absent).
std::string render_stub_response(const std::string& response_template, const std::string& prompt);

/// Deterministic in-process client for hermetic runs and tests.
class StubLlmClient : public LlmClient {
public:
    using Responder = std::function<std::string(const std::string& prompt)>;

    explicit StubLlmClient(Responder responder, std::string name = "stub");

    /// Always answers with `response_template` rendered against the prompt.
    static std::unique_ptr<StubLlmClient> fixed(std::string response_template);

    /// First matching rule wins; without a match the fallback is used, and
    /// with no fallback the call fails with ClientError.
    static std::unique_ptr<StubLlmClient> from_rules(std::vector<StubRule> rules,
                                                     std::optional<std::string> fallback);

    /// Rule file: {"rules": [{"contains": ..., "response": ...}], "default": ...}
    static std::unique_ptr<StubLlmClient> from_file(const std::filesystem::path& path);

    std::string complete(const std::string& prompt) override;
    std::string identity() const override { return name_; }
    std::size_t calls() const { return calls_.load(); }

private:
    Responder responder_;
    std::string name_;
    std::atomic<std::size_t> calls_{0};
};

} // namespace augrag
