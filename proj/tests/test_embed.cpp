#include "augrag/embed.hpp"
#include "augrag/error.hpp"
#include "augrag/text.hpp"

#include "mock_server.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>

using namespace augrag;
using augrag::test::MockServer;

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream(p) << s;
}

std::string hex64(char c) {
    return std::string(64, c);
}

} // namespace

TEST_CASE("text hash ignores surrounding whitespace") {
    CHECK(embed_text_hash("  hello world \n") == embed_text_hash("hello world"));
    CHECK(embed_text_hash("hello world") == sha256_hex("hello world"));
    CHECK(embed_text_hash("hello") != embed_text_hash("hello world"));
}

TEST_CASE("precomputed vectors round-trip in input order") {
    test::TempDir dir("embed");
    std::vector<PrecomputedEntry> entries = {
        {"alpha text", DenseVector(std::vector<double>{1, 0, 0})},
        {"beta text", DenseVector(std::vector<double>{0, 1, 0})},
        {"gamma text", DenseVector(std::vector<double>{0, 0.25, -1.5})},
        {"alpha text", DenseVector(std::vector<double>{9, 9, 9})},
    };
    write_precomputed(dir / "v.txt", entries);
    auto p = load_precomputed(dir / "v.txt");
    CHECK(p->size() == 3);
    CHECK(p->expected_dim() == 3);
    CHECK(p->contains(" beta text "));
    CHECK_FALSE(p->contains("delta"));

    std::vector<std::string> texts{"gamma text", "alpha text", "beta text", "alpha text"};
    auto out = p->embed_texts(texts);
    REQUIRE(out.size() == 4);
    CHECK(out[0].values == std::vector<double>{0, 0.25, -1.5});
    CHECK(out[1].values == std::vector<double>{1, 0, 0});
    CHECK(out[2].values == std::vector<double>{0, 1, 0});
    CHECK(out[3] == out[1]);
    CHECK(p->backend_calls() == 1);

    SUBCASE("cache serves repeated texts") {
        p->embed("alpha text");
        p->embed_texts(texts);
        CHECK(p->backend_calls() == 1);
        p->set_cache_enabled(false);
        p->embed("alpha text");
        CHECK(p->backend_calls() == 2);
    }
    SUBCASE("unknown text and empty list") {
        CHECK_THROWS_AS(p->embed("never seen"), InputError);
        CHECK_THROWS_AS(p->embed_texts({}), InputError);
    }
}

TEST_CASE("malformed precomputed files are rejected") {
    test::TempDir dir("embed-bad");
    auto expect_error = [&](const std::string& content, const std::string& needle) {
        write_text(dir / "f.txt", content);
        try {
            load_precomputed(dir / "f.txt");
            FAIL("expected an error");
        } catch (const InputError& e) {
            CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
        }
    };
    expect_error("", "empty file");
    expect_error("dimension=2 count=1\n", "malformed header");
    expect_error("dim=0 count=0\n", "dim must be positive");
    expect_error("dim=2 count=2\n" + hex64('a') + " 1 2\n" + hex64('b') + " 1\n", "row 2");
    expect_error("dim=2 count=1\n" + hex64('a') + " 1 x\n", "bad value");
    expect_error("dim=2 count=1\nnothex 1 2\n", "sha256");
    expect_error("dim=2 count=2\n" + hex64('a') + " 1 2\n" + hex64('a') + " 3 4\n", "duplicate");
    expect_error("dim=2 count=3\n" + hex64('a') + " 1 2\n", "declares 3");
    CHECK_THROWS_AS(load_precomputed(dir / "missing.txt"), InputError);
}

TEST_CASE("hashing provider") {
    HashingEmbeddingProvider h(32);
    CHECK(h.identity() == "hashing:32");
    auto a = h.embed("The river boat drifts");
    CHECK(a.dim() == 32);
    CHECK(a.norm() == doctest::Approx(1.0));
    HashingEmbeddingProvider h2(32);
    CHECK(h2.embed("the RIVER boat drifts") == a);
    auto b = h.embed("river boat");
    auto c = h.embed("galaxy comet orbit");
    CHECK(cosine(a, b) > cosine(a, c));
    CHECK(h.embed("  ").norm() == 0.0);
    CHECK_THROWS_AS(HashingEmbeddingProvider(0), InputError);
}

TEST_CASE("remote provider speaks POST /embed") {
    MockServer server;
    std::atomic<int> batches{0};
    server.post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        ++batches;
        nlohmann::json vectors = nlohmann::json::array();
        for (const auto& t : body.at("texts")) {
            auto s = t.get<std::string>();
            vectors.push_back({static_cast<double>(s.size()), 1.0, 0.0, -1.0});
        }
        MockServer::reply(res, {{"vectors", vectors}, {"dim", 4}, {"model", "mock"}});
    });
    server.start();

    RemoteEmbeddingConfig cfg;
    cfg.http.endpoint = server.endpoint();
    cfg.expected_dim = 4;
    cfg.batch_size = 2;
    RemoteEmbeddingProvider p(cfg);
    CHECK(p.identity() == "remote:" + server.endpoint());
    std::vector<std::string> texts{"a", "bb", "ccc", "bb", "dddd", "eeeee"};
    auto out = p.embed_texts(texts);
    REQUIRE(out.size() == 6);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        CHECK(out[i].values[0] == static_cast<double>(texts[i].size()));
    }
    CHECK(batches.load() == 3);
    p.embed("ccc");
    CHECK(batches.load() == 3);

    SUBCASE("dimension mismatch is reported") {
        RemoteEmbeddingConfig wrong = cfg;
        wrong.expected_dim = 768;
        RemoteEmbeddingProvider q(wrong);
        CHECK_THROWS_AS(q.embed("x"), DimensionError);
    }
}

TEST_CASE("remote provider detects a 384 vs 768 server") {
    MockServer server;
    server.post("/embed", [](const httplib::Request& req, httplib::Response& res) {
        auto n = nlohmann::json::parse(req.body).at("texts").size();
        nlohmann::json vectors = nlohmann::json::array();
        for (std::size_t i = 0; i < n; ++i) {
            vectors.push_back(std::vector<double>(384, 0.1));
        }
        MockServer::reply(res, {{"vectors", vectors}, {"dim", 384}, {"model", "small"}});
    });
    server.start();
    RemoteEmbeddingConfig cfg;
    cfg.http.endpoint = server.endpoint();
    cfg.expected_dim = 768;
    RemoteEmbeddingProvider p(cfg);
    try {
        p.embed("query");
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        CHECK(std::string(e.what()).find("384") != std::string::npos);
        CHECK(std::string(e.what()).find("768") != std::string::npos);
    }
}

TEST_CASE("remote provider protocol errors") {
    MockServer server;
    server.post("/embed", [](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        if (body.at("texts").at(0) == "short") {
            MockServer::reply(res, {{"vectors", nlohmann::json::array()}, {"dim", 2}});
        } else if (body.at("texts").at(0) == "bad") {
            MockServer::reply(res, {{"error", "empty"}}, 400);
        } else {
            res.set_content("not json", "text/plain");
        }
    });
    server.start();
    RemoteEmbeddingConfig cfg;
    cfg.http.endpoint = server.endpoint();
    cfg.expected_dim = 2;
    cfg.http.retries = 0;
    RemoteEmbeddingProvider p(cfg);
    CHECK_THROWS_AS(p.embed("short"), ClientError);
    CHECK_THROWS_AS(p.embed("bad"), ClientError);
    CHECK_THROWS_AS(p.embed("other"), ClientError);
}

TEST_CASE("unreachable embedding endpoint raises ClientError") {
    RemoteEmbeddingConfig cfg;
    cfg.http.endpoint = test::dead_endpoint();
    cfg.http.retries = 1;
    cfg.http.backoff = std::chrono::milliseconds(1);
    cfg.http.timeout = std::chrono::milliseconds(500);
    cfg.expected_dim = 4;
    RemoteEmbeddingProvider p(cfg);
    CHECK_THROWS_AS(p.embed("x"), ClientError);
    cfg.http.endpoint = "https://example.invalid";
    RemoteEmbeddingProvider q(cfg);
    CHECK_THROWS_AS(q.embed("x"), ClientError);
}

TEST_CASE("health check") {
    MockServer server;
    server.get("/health", [](const httplib::Request&, httplib::Response& res) {
        MockServer::reply(res, {{"status", "ok"}, {"models", {"encoder", "llm"}}});
    });
    server.start();
    HttpSettings http;
    http.endpoint = server.endpoint();
    auto h = check_health(http);
    CHECK(h.ok());
    CHECK(h.models == std::vector<std::string>{"encoder", "llm"});

    http.endpoint = test::dead_endpoint();
    http.retries = 0;
    CHECK_THROWS_AS(check_health(http), ClientError);
}
