#include "augrag/http.hpp"

#include "augrag/error.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <thread>

namespace augrag {

namespace {

template <typename Send>
nlohmann::json request_json(const HttpSettings& http, const std::string& what, Send send) {
    if (http.endpoint.rfind("http://", 0) != 0) {
        throw ClientError("unsupported endpoint (expected http://host:port): " + http.endpoint);
    }
    httplib::Client cli(http.endpoint);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(http.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(http.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());

    std::string last_error;
    auto delay = http.backoff;
    for (int attempt = 0; attempt <= http.retries; ++attempt) {
        if (attempt > 0) {
            spdlog::debug("retrying {} (attempt {}): {}", what, attempt + 1, last_error);
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
        auto res = send(cli);
        if (!res) {
            last_error = "request failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "server returned HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw ClientError(what + " returned HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception&) {
            throw ClientError(what + ": reply is not valid JSON");
        }
    }
    throw ClientError(what + " failed after " + std::to_string(http.retries + 1) + " attempts: " + last_error);
}

} // namespace

nlohmann::json post_json(const HttpSettings& http, const std::string& path, const nlohmann::json& body) {
    const std::string payload = body.dump();
    return request_json(http, "POST " + http.endpoint + path,
                        [&](httplib::Client& cli) { return cli.Post(path, payload, "application/json"); });
}

nlohmann::json get_json(const HttpSettings& http, const std::string& path) {
    return request_json(http, "GET " + http.endpoint + path, [&](httplib::Client& cli) { return cli.Get(path); });
}

ServerHealth check_health(const HttpSettings& http) {
    auto reply = get_json(http, "/health");
    ServerHealth h;
    try {
        h.status = reply.at("status").get<std::string>();
        h.models = reply.value("models", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw ClientError(std::string("/health reply does not match the protocol: ") + e.what());
    }
    return h;
}

} // namespace augrag
