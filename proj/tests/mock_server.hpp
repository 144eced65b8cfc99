#pragma once
// In-process HTTP server speaking the model-server wire protocol.

#include <httplib.h>
#include <json.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace augrag::test {

class MockServer {
public:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    MockServer() = default;
    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;
    ~MockServer() { stop(); }

    void post(const std::string& path, Handler h) {
        server_.Post(path, [this, h](const httplib::Request& req, httplib::Response& res) {
            ++requests_;
            h(req, res);
        });
    }
    void get(const std::string& path, Handler h) {
        server_.Get(path, [this, h](const httplib::Request& req, httplib::Response& res) {
            ++requests_;
            h(req, res);
        });
    }

    /// Bind to an ephemeral port and serve on a background thread.
    void start() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int requests() const { return requests_.load(); }

    static void reply(httplib::Response& res, const nlohmann::json& j, int status = 200) {
        res.status = status;
        res.set_content(j.dump(), "application/json");
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> requests_{0};
};

/// Endpoint nobody listens on.
inline std::string dead_endpoint() {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    socklen_t len = sizeof addr;
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return "http://127.0.0.1:" + std::to_string(ntohs(addr.sin_port));
}

} // namespace augrag::test
