#pragma once

#include <json.hpp>

#include <chrono>
#include <string>
#include <vector>

namespace augrag {

struct HttpSettings {
    std::string endpoint; ///< scheme://host:port, http only
    std::chrono::milliseconds timeout{30000};
    int retries = 2;
    std::chrono::milliseconds backoff{100};
};

/// POST a JSON body and parse the JSON reply. Connection failures and 5xx
/// replies are retried with exponential backoff; anything else non-2xx, or
/// a reply that is not JSON, throws ClientError.
nlohmann::json post_json(const HttpSettings& http, const std::string& path, const nlohmann::json& body);


/// GET with the same retry and error rules as post_json.
nlohmann::json get_json(const HttpSettings& http, const std::string& path);

struct ServerHealth {
    std::string status;
    std::vector<std::string> models;
    bool ok() const { return status == "ok"; }
};

/// GET /health. Throws ClientError when unreachable or malformed.
ServerHealth check_health(const HttpSettings& http);

} // namespace augrag
