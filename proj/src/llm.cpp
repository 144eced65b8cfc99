#include "augrag/llm.hpp"

#include "augrag/error.hpp"
#include "augrag/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace augrag {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string context_words(const std::string& prompt, std::size_t n) {
    std::string_view body = prompt;
    auto open = body.find("<context>");
    auto close = body.find("</context>");
    if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
        body = body.substr(open + 9, close - open - 9);
    }
    auto words = split_whitespace(body);
    std::string out;
    for (std::size_t i = 0; i < words.size() && i < n; ++i) {
        if (i > 0) {
            out.push_back(' ');
        }
        out.append(words[i]);
    }
    return out;
}

} // namespace

void RemoteLlmConfig::validate() const {
    if (max_tokens < 1) {
        throw InputError("llm client: max_tokens must be >= 1");
    }
    if (!(temperature >= 0.0)) {
        throw InputError("llm client: temperature must be >= 0");
    }
    if (http.retries < 0) {
        throw InputError("llm client: retries must be >= 0");
    }
    if (max_in_flight < 1 || max_in_flight > 1024) {
        throw InputError("llm client: max_in_flight must be in [1, 1024]");
    }
}

RemoteLlmClient::RemoteLlmClient(RemoteLlmConfig cfg) : cfg_(std::move(cfg)), in_flight_(cfg_.max_in_flight) {
    cfg_.validate();
}

std::string RemoteLlmClient::complete(const std::string& prompt) {
    json body;
    body["prompt"] = prompt;
    body["max_tokens"] = cfg_.max_tokens;
    body["temperature"] = cfg_.temperature;
    if (cfg_.seed) {
        body["seed"] = *cfg_.seed;
    }
    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<1024>& sem;
        ~Release() { sem.release(); }
    } release{in_flight_};
    json reply = post_json(cfg_.http, "/generate", body);
    if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
        throw ClientError("/generate reply lacks a string \"text\" field");
    }
    return reply["text"].get<std::string>();
}

std::string RemoteLlmClient::identity() const {
    return "remote:" + cfg_.http.endpoint;
}

std::string render_stub_response(const std::string& response_template, const std::string& prompt) {
    std::string out = replace_all(response_template, "{prompt}", prompt);
    out = replace_all(out, "{query}", prompt);
    const std::string_view marker = "{context_words:";
    std::size_t pos = 0;
    while ((pos = out.find(marker, pos)) != std::string::npos) {
        auto end = out.find('}', pos);
        if (end == std::string::npos) {
            break;
        }
        std::size_t n = 0;
        const char* first = out.data() + pos + marker.size();
        auto [p, ec] = std::from_chars(first, out.data() + end, n);
        if (ec != std::errc() || p != out.data() + end) {
            throw InputError("stub response: bad {context_words:N} placeholder");
        }
        auto words = context_words(prompt, n);
        out.replace(pos, end + 1 - pos, words);
        pos += words.size();
    }
    return out;
}

StubLlmClient::StubLlmClient(Responder responder, std::string name)
    : responder_(std::move(responder)), name_(std::move(name)) {}

std::unique_ptr<StubLlmClient> StubLlmClient::fixed(std::string response_template) {
    return std::make_unique<StubLlmClient>(
        [t = std::move(response_template)](const std::string& prompt) { return render_stub_response(t, prompt); },
        "stub:fixed");
}

std::unique_ptr<StubLlmClient> StubLlmClient::from_rules(std::vector<StubRule> rules,
                                                         std::optional<std::string> fallback) {
    for (auto& r : rules) {
        r.contains = lower(r.contains);
    }
    return std::make_unique<StubLlmClient>(
        [rules = std::move(rules), fallback = std::move(fallback)](const std::string& prompt) {
            const std::string haystack = lower(prompt);
            for (const auto& r : rules) {
                if (haystack.find(r.contains) != std::string::npos) {
                    return render_stub_response(r.response, prompt);
                }
            }
            if (fallback) {
                return render_stub_response(*fallback, prompt);
            }
            throw ClientError("stub client: no rule matches the prompt");
        },
        "stub:rules");
}

std::unique_ptr<StubLlmClient> StubLlmClient::from_file(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path.string()));
    } catch (const json::exception& e) {
        throw InputError("stub rule file " + path.string() + ": " + e.what());
    }
    std::vector<StubRule> rules;
    std::optional<std::string> fallback;
    try {
        for (const auto& r : j.value("rules", json::array())) {
            rules.push_back({r.at("contains").get<std::string>(), r.at("response").get<std::string>()});
        }
        if (j.contains("default") && !j["default"].is_null()) {
            fallback = j["default"].get<std::string>();
        }
    } catch (const json::exception& e) {
        throw InputError("stub rule file " + path.string() + ": " + e.what());
    }
    auto client = from_rules(std::move(rules), std::move(fallback));
    client->name_ = "stub:" + path.filename().string();
    return client;
}

std::string StubLlmClient::complete(const std::string& prompt) {
    ++calls_;
    return responder_(prompt);
}

} // namespace augrag
