#include "augrag/cli.hpp"
#include "augrag/corpus.hpp"

#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace augrag;
using nlohmann::json;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args, const std::string& input = "") {
    std::istringstream in(input);
    std::ostringstream out, err;
    int code = cli::execute(args, in, out, err);
    return {code, out.str(), err.str()};
}

std::vector<json> json_lines(const std::string& s) {
    std::vector<json> out;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) {
            out.push_back(json::parse(line));
        }
    }
    return out;
}

/// Corpus directory, chunk file and TF-IDF bundle shared by the query tests.
struct Workspace {
    test::TempDir dir{"cli"};
    std::string chunks = (dir / "chunks.jsonl").string();
    std::string bundle = (dir / "idx.bin").string();

    Workspace() {
        std::filesystem::create_directories(dir / "corpus");
        std::ofstream(dir / "corpus" / "a.txt")
            << "Hallucination is fluent model output that no source supports. "
               "Retrieval grounds the answer in documents. Short one. "
               "Large language models predict the next token from context.";
        std::ofstream(dir / "corpus" / "b.txt")
            << "The sky looks blue because air scatters short wavelengths. "
               "Sunsets turn red when light crosses more atmosphere.";
        auto r = run({"ingest", "--input", (dir / "corpus").string(), "--min-chars", "15", "--out", chunks});
        REQUIRE(r.code == 0);
        r = run({"index", "--chunks", chunks, "--encoding", "tfidf", "--out", bundle});
        REQUIRE(r.code == 0);
    }
};

} // namespace

TEST_CASE("ingest writes a chunk file") {
    Workspace ws;
    auto chunks = read_chunks_jsonl(ws.chunks);
    CHECK(chunks.size() == 5);
    CHECK(chunks[0].doc_id == "a");
    auto r = run({"--json", "ingest", "--input", (ws.dir / "corpus").string(), "--out", ws.chunks});
    CHECK(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["documents"] == 2);
    CHECK(j["chunks"] == 5);
}

TEST_CASE("augmented query with a stub augmenter prints ranked passages") {
    Workspace ws;
    auto r = run({"query", "--index", ws.bundle, "--mode", "augmented", "--k", "3",
                  "--augmenter-response", "Hallucination is fluent model output that no source supports.",
                  "Define hallucination"});
    CHECK(r.code == 0);
    CHECK(r.out.find("pseudo-document: Hallucination is fluent") != std::string::npos);
    CHECK(r.out.find("[1] score 1.0000  chunk 0") != std::string::npos);
    CHECK(r.out.find("window 0-2") != std::string::npos);
}

TEST_CASE("query --json output parses") {
    Workspace ws;
    auto r = run({"--json", "query", "--index", ws.bundle, "--k", "2", "--generate", "--generator-response",
                  "{context_words:3}", "why is the sky blue"});
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["mode"] == "raw");
    CHECK(j["encoding"] == "tfidf");
    CHECK(j["hits"].size() == 2);
    CHECK(j["hits"][0]["chunk_id"] == 3);
    CHECK(j["passages"][0]["member_chunk_ids"] == json::array({3, 4}));
    CHECK(j["answer"] == "[1] The sky");
}

TEST_CASE("repl answers one query per line") {
    Workspace ws;
    auto r = run({"--json", "query", "--index", ws.bundle, "--k", "1", "--repl"},
                 "sky blue\n\nhallucination source\n");
    REQUIRE(r.code == 0);
    auto lines = json_lines(r.out);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0]["hits"][0]["chunk_id"] == 3);
    CHECK(lines[1]["hits"][0]["chunk_id"] == 0);
}

TEST_CASE("usage errors exit 1 with help on the error stream") {
    auto r = run({"ingest", "--input", "x", "--out", "y", "--bogus"});
    CHECK(r.code == 1);
    CHECK(r.out.empty());
    CHECK(r.err.find("error:") != std::string::npos);
    CHECK(r.err.find("--min-chars") != std::string::npos);

    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({}).code == 1);
    CHECK(run({"query", "--index", "x", "--mode", "sideways", "q"}).code == 1);
}

TEST_CASE("bad input files exit 1") {
    test::TempDir dir("cli-bad");
    auto r = run({"ingest", "--input", (dir / "missing").string(), "--out", (dir / "c.jsonl").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("error:") != std::string::npos);
    CHECK(run({"query", "--index", (dir / "none.bin").string(), "q"}).code == 1);
}

TEST_CASE("unreachable endpoint exits 1") {
    Workspace ws;
    auto r = run({"query", "--index", ws.bundle, "--generate", "--generator-endpoint", "http://127.0.0.1:1", "q sky"});
    CHECK(r.code == 1);
    CHECK(r.err.find("model endpoint") != std::string::npos);
}

TEST_CASE("help succeeds for every verb") {
    for (const char* verb :
         {"ingest", "fit-tfidf", "train-pvec", "embed", "reduce", "index", "query", "run", "eval", "bench"}) {
        auto r = run({verb, "--help"});
        CHECK(r.code == 0);
        CHECK_FALSE(r.out.empty());
    }
}

TEST_CASE("config file values yield to command-line flags") {
    Workspace ws;
    const auto cfg = ws.dir / "cfg.json";
    std::ofstream(cfg) << R"({"json": true, "query": {"index": ")" << ws.bundle << R"(", "k": 1}})";
    auto r = run({"--config", cfg.string(), "query", "sky blue"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["hits"].size() == 1);
    r = run({"--config", cfg.string(), "query", "--k", "3", "sky blue"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["hits"].size() == 3);

    std::ofstream(cfg) << R"({"query": {"nonsense": 1}})";
    CHECK(run({"--config", cfg.string(), "query", "--index", ws.bundle, "q"}).code == 1);
}

TEST_CASE("bench --predict prints formula values") {
    auto r = run({"--json", "bench", "--predict", "--n", "1000", "--m", "50"});
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["tfidf"] == 50000.0);
}
