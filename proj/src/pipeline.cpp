#include "augrag/pipeline.hpp"

#include "augrag/error.hpp"
#include "augrag/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace augrag {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

std::string resolve_endpoint(const std::string& configured, const std::string& fallback) {
    if (!configured.empty()) {
        return configured;
    }
    if (!fallback.empty()) {
        return fallback;
    }
    auto env = default_endpoint_from_env();
    if (env.empty()) {
        throw InputError(std::string("no model endpoint configured and ") + kEndpointEnv + " is unset");
    }
    return env;
}

AugmentFallback parse_fallback(std::string_view s) {
    if (s == "passthrough") {
        return AugmentFallback::passthrough;
    }
    if (s == "fail") {
        return AugmentFallback::fail;
    }
    throw InputError("unknown augmentation fallback: " + std::string(s));
}

Encoding encoding_for(RetrieverKind r) {
    switch (r) {
    case RetrieverKind::tfidf:
        return Encoding::tfidf;
    case RetrieverKind::pvec:
        return Encoding::pvec;
    case RetrieverKind::bert_umap:
        return Encoding::dense_reduced;
    case RetrieverKind::none:
        break;
    }
    throw InputError("retriever 'none' has no encoding");
}

// Memoizes completions so each query is rewritten once per run, whatever
// the number of retrievers.
class MemoClient : public LlmClient {
public:
    explicit MemoClient(LlmClient& inner) : inner_(inner) {}

    std::string complete(const std::string& prompt) override {
        {
            std::lock_guard lock(mu_);
            if (auto it = memo_.find(prompt); it != memo_.end()) {
                return it->second;
            }
        }
        std::string text = inner_.complete(prompt);
        std::lock_guard lock(mu_);
        return memo_.emplace(prompt, std::move(text)).first->second;
    }
    std::string identity() const override { return inner_.identity(); }

private:
    LlmClient& inner_;
    std::mutex mu_;
    std::map<std::string, std::string> memo_;
};

struct Job {
    std::size_t query = 0;
    RagMode mode = RagMode::no_rag;
    RetrieverKind retriever = RetrieverKind::none;
};

struct JobResult {
    ordered_json record;
    std::optional<ordered_json> trace;
    bool error = false;
};

struct Retriever {
    std::unique_ptr<IndexBundle> bundle;
    std::unique_ptr<QueryEncoder> encoder;
    std::string error;
};

template <typename E, std::size_t N>
std::vector<E> canonical(const std::vector<E>& given, const E (&order)[N]) {
    std::vector<E> out;
    for (E e : order) {
        if (std::find(given.begin(), given.end(), e) != given.end()) {
            out.push_back(e);
        }
    }
    return out;
}

} // namespace

std::string default_endpoint_from_env() {
    const char* v = std::getenv(kEndpointEnv);
    return v ? std::string(v) : std::string();
}

ClientSpec parse_client_spec(const json& j, const fs::path& base_dir) try {
    ClientSpec c;
    const auto type = j.value("type", std::string("remote"));
    if (type == "stub") {
        if (j.contains("rules")) {
            c.kind = ClientSpec::Kind::stub_rules;
            c.rules = resolve(base_dir, j.at("rules").get<std::string>());
        } else if (j.contains("response")) {
            c.kind = ClientSpec::Kind::stub_fixed;
            c.fixed_response = j.at("response").get<std::string>();
        } else {
            throw InputError("stub client needs \"rules\" or \"response\"");
        }
    } else if (type == "remote") {
        c.kind = ClientSpec::Kind::remote;
        c.remote.http.endpoint = j.value("endpoint", std::string());
        c.remote.http.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30000));
        c.remote.http.retries = j.value("retries", 2);
        c.remote.max_tokens = j.value("max_tokens", 256);
        c.remote.temperature = j.value("temperature", 0.0);
        if (j.contains("seed")) {
            c.remote.seed = j.at("seed").get<std::uint64_t>();
        }
        c.remote.max_in_flight = j.value("max_in_flight", 4);
    } else {
        throw InputError("unknown client type: " + type);
    }
    return c;
} catch (const json::exception& e) {
    throw InputError(std::string("client spec: ") + e.what());
}

std::unique_ptr<LlmClient> make_llm_client(const ClientSpec& spec, const std::string& default_endpoint) {
    switch (spec.kind) {
    case ClientSpec::Kind::stub_fixed:
        return StubLlmClient::fixed(spec.fixed_response);
    case ClientSpec::Kind::stub_rules:
        return StubLlmClient::from_file(spec.rules);
    case ClientSpec::Kind::remote: {
        RemoteLlmConfig cfg = spec.remote;
        cfg.http.endpoint = resolve_endpoint(cfg.http.endpoint, default_endpoint);
        return std::make_unique<RemoteLlmClient>(cfg);
    }
    }
    throw InputError("unknown client kind");
}

EmbeddingSpec parse_embedding_spec(const json& j, const fs::path& base_dir) try {
    EmbeddingSpec e;
    const auto type = j.value("type", std::string("none"));
    if (type == "none") {
        e.kind = EmbeddingSpec::Kind::none;
    } else if (type == "hashing") {
        e.kind = EmbeddingSpec::Kind::hashing;
        e.dim = j.value("dim", std::size_t{256});
    } else if (type == "file") {
        e.kind = EmbeddingSpec::Kind::file;
        e.vectors = resolve(base_dir, j.at("vectors").get<std::string>());
    } else if (type == "remote") {
        e.kind = EmbeddingSpec::Kind::remote;
        e.dim = j.at("dim").get<std::size_t>();
        e.endpoint = j.value("endpoint", std::string());
        e.batch_size = j.value("batch_size", std::size_t{32});
    } else {
        throw InputError("unknown embedding type: " + type);
    }
    return e;
} catch (const json::exception& e) {
    throw InputError(std::string("embedding spec: ") + e.what());
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingSpec& spec,
                                                           const std::string& default_endpoint) {
    switch (spec.kind) {
    case EmbeddingSpec::Kind::none:
        return nullptr;
    case EmbeddingSpec::Kind::hashing:
        return std::make_unique<HashingEmbeddingProvider>(spec.dim);
    case EmbeddingSpec::Kind::file:
        return load_precomputed(spec.vectors);
    case EmbeddingSpec::Kind::remote: {
        RemoteEmbeddingConfig cfg;
        cfg.http.endpoint = resolve_endpoint(spec.endpoint, default_endpoint);
        cfg.expected_dim = spec.dim;
        cfg.batch_size = spec.batch_size;
        return std::make_unique<RemoteEmbeddingProvider>(cfg);
    }
    }
    throw InputError("unknown embedding kind");
}

void RunSpec::validate() const {
    if (queries.empty()) {
        throw InputError("run spec: no queries");
    }
    std::vector<std::string> ids;
    for (const auto& q : queries) {
        if (trim(q.id).empty()) {
            throw InputError("run spec: query with blank id");
        }
        if (trim(q.text).empty()) {
            throw InputError("run spec: query " + q.id + " has blank text");
        }
        ids.push_back(q.id);
    }
    std::sort(ids.begin(), ids.end());
    if (auto it = std::adjacent_find(ids.begin(), ids.end()); it != ids.end()) {
        throw InputError("run spec: duplicate query id " + *it);
    }
    if (regimes.empty()) {
        throw InputError("run spec: no regimes");
    }
    const bool rag = std::any_of(regimes.begin(), regimes.end(), [](RagMode m) { return m != RagMode::no_rag; });
    if (rag && retrievers.empty()) {
        throw InputError("run spec: RAG regimes need at least one retriever");
    }
    if (k == 0) {
        throw InputError("run spec: k must be >= 1");
    }
    if (workers == 0) {
        throw InputError("run spec: workers must be >= 1");
    }
    generation.validate();
    AugmentTemplate check(augment_template);
    (void)check;
}

RunSpec parse_run_spec(const json& j, const fs::path& base_dir) {
    try {
        RunSpec s;
        const auto& corpus = j.at("corpus");
        s.corpus = resolve(base_dir, corpus.at("path").get<std::string>());
        const auto format = corpus.value("format", std::string("plain"));
        if (format == "plain") {
            s.corpus_format = DocFormat::plain;
        } else if (format == "jsonl") {
            s.corpus_format = DocFormat::jsonl;
        } else {
            throw InputError("unknown corpus format: " + format);
        }
        s.chunking.min_chars = corpus.value("min_chars", s.chunking.min_chars);

        for (const auto& q : j.at("queries")) {
            s.queries.push_back({q.at("id").get<std::string>(), q.at("text").get<std::string>()});
        }
        if (j.contains("regimes")) {
            std::vector<RagMode> given;
            for (const auto& r : j.at("regimes")) {
                given.push_back(parse_rag_mode(r.get<std::string>()));
            }
            s.regimes = canonical(given, {RagMode::no_rag, RagMode::rag_raw, RagMode::rag_augmented});
        }
        if (j.contains("retrievers")) {
            std::vector<RetrieverKind> given;
            for (const auto& r : j.at("retrievers")) {
                auto kind = parse_retriever(r.get<std::string>());
                if (kind == RetrieverKind::none) {
                    throw InputError("retriever 'none' is implied by no_rag and cannot be listed");
                }
                given.push_back(kind);
            }
            s.retrievers = canonical(given, {RetrieverKind::tfidf, RetrieverKind::pvec, RetrieverKind::bert_umap});
        }
        s.k = j.value("k", s.k);

        if (j.contains("pvec")) {
            const auto& p = j.at("pvec");
            s.build.pvec.dim = p.value("dim", s.build.pvec.dim);
            s.build.pvec.epochs = p.value("epochs", s.build.pvec.epochs);
            s.build.pvec.negative_samples = p.value("negative_samples", s.build.pvec.negative_samples);
            s.build.pvec.initial_lr = p.value("initial_lr", s.build.pvec.initial_lr);
            s.build.pvec.final_lr = p.value("final_lr", s.build.pvec.final_lr);
            s.build.pvec.min_count = p.value("min_count", s.build.pvec.min_count);
            s.build.pvec.seed = p.value("seed", s.build.pvec.seed);
            s.build.infer_epochs = p.value("infer_epochs", s.build.infer_epochs);
            s.build.infer_seed = p.value("infer_seed", s.build.infer_seed);
        }
        if (j.contains("umap")) {
            const auto& u = j.at("umap");
            s.build.reducer.out_dim = u.value("out_dim", s.build.reducer.out_dim);
            s.build.reducer.n_neighbors = u.value("n_neighbors", s.build.reducer.n_neighbors);
            s.build.reducer.layout_epochs = u.value("layout_epochs", s.build.reducer.layout_epochs);
            s.build.reducer.learning_rate = u.value("learning_rate", s.build.reducer.learning_rate);
            s.build.reducer.negative_rate = u.value("negative_rate", s.build.reducer.negative_rate);
            s.build.reducer.seed = u.value("seed", s.build.reducer.seed);
        }
        if (j.contains("embeddings")) {
            s.embeddings = parse_embedding_spec(j.at("embeddings"), base_dir);
        }
        if (j.contains("augmenter")) {
            s.augmenter = parse_client_spec(j.at("augmenter"), base_dir);
        }
        if (j.contains("generator")) {
            s.generator = parse_client_spec(j.at("generator"), base_dir);
        }
        s.augment_template = j.value("augment_template", s.augment_template);
        s.fallback = parse_fallback(j.value("fallback", std::string("passthrough")));
        if (j.contains("generation")) {
            const auto& g = j.at("generation");
            s.generation.max_words = g.value("max_words", s.generation.max_words);
            s.generation.prompt_template = g.value("template", s.generation.prompt_template);
            s.generation.max_prompt_chars = g.value("max_prompt_chars", s.generation.max_prompt_chars);
        }
        s.workers = j.value("workers", s.workers);
        if (j.contains("output")) {
            const auto& o = j.at("output");
            if (o.contains("run")) {
                s.run_out = resolve(base_dir, o.at("run").get<std::string>());
            }
            if (o.contains("trace")) {
                s.trace_out = resolve(base_dir, o.at("trace").get<std::string>());
            }
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw InputError(std::string("run spec: ") + e.what());
    }
}

RunSpec load_run_spec(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_file(path.string()));
    } catch (const json::parse_error& e) {
        throw InputError("run spec " + path.string() + ": " + e.what());
    }
    return parse_run_spec(j, path.parent_path());
}

std::size_t expected_record_count(const RunSpec& spec) {
    std::size_t per_query = 0;
    for (auto m : spec.regimes) {
        per_query += m == RagMode::no_rag ? 1 : spec.retrievers.size();
    }
    return spec.queries.size() * per_query;
}

RunOutput run_pipeline(const RunSpec& spec, const RunDeps& deps) {
    spec.validate();
    const auto docs = load_documents(spec.corpus, spec.corpus_format);
    const auto chunks = chunk_corpus(docs, spec.chunking);
    spdlog::info("run: {} documents, {} chunks, {} queries", docs.size(), chunks.size(), spec.queries.size());

    const bool any_rag =
        std::any_of(spec.regimes.begin(), spec.regimes.end(), [](RagMode m) { return m != RagMode::no_rag; });
    const bool augmented = std::find(spec.regimes.begin(), spec.regimes.end(), RagMode::rag_augmented) !=
                           spec.regimes.end();

    std::unique_ptr<LlmClient> own_generator;
    LlmClient* generator = deps.generator;
    if (!generator) {
        own_generator = make_llm_client(spec.generator, deps.default_endpoint);
        generator = own_generator.get();
    }
    std::unique_ptr<LlmClient> own_augmenter;
    std::unique_ptr<MemoClient> augmenter;
    if (augmented) {
        LlmClient* base = deps.augmenter;
        if (!base) {
            own_augmenter = make_llm_client(spec.augmenter, deps.default_endpoint);
            base = own_augmenter.get();
        }
        augmenter = std::make_unique<MemoClient>(*base);
    }

    // Retriever build failures are kept and reported on each affected record.
    std::unique_ptr<EmbeddingProvider> own_embedder;
    EmbeddingProvider* embedder = deps.embedder;
    std::map<RetrieverKind, Retriever> retrievers;
    if (any_rag) {
        for (auto kind : spec.retrievers) {
            Retriever& r = retrievers[kind];
            try {
                EmbeddingProvider* provider = nullptr;
                if (kind == RetrieverKind::bert_umap) {
                    if (!embedder && !own_embedder) {
                        if (spec.embeddings.kind == EmbeddingSpec::Kind::none) {
                            throw InputError("bert_umap retriever needs an embeddings section");
                        }
                        own_embedder = make_embedding_provider(spec.embeddings, deps.default_endpoint);
                    }
                    provider = embedder ? embedder : own_embedder.get();
                }
                r.bundle = std::make_unique<IndexBundle>(
                    IndexBundle::build(chunks, encoding_for(kind), spec.build, provider));
                r.encoder = r.bundle->make_encoder(provider);
                spdlog::info("run: built {} index over {} chunks", to_string(kind), r.bundle->index().size());
            } catch (const std::exception& e) {
                r.error = e.what();
                spdlog::warn("run: {} retriever unavailable: {}", to_string(kind), r.error);
            }
        }
    }

    std::vector<Job> jobs;
    for (std::size_t q = 0; q < spec.queries.size(); ++q) {
        for (auto mode : spec.regimes) {
            if (mode == RagMode::no_rag) {
                jobs.push_back({q, mode, RetrieverKind::none});
                continue;
            }
            for (auto r : spec.retrievers) {
                jobs.push_back({q, mode, r});
            }
        }
    }

    const AugmentTemplate tmpl(spec.augment_template);
    auto execute = [&](const Job& job) {
        const auto& query = spec.queries[job.query];
        JobResult out;
        ordered_json rec;
        rec["query_id"] = query.id;
        rec["query"] = query.text;
        rec["mode"] = to_string(job.mode);
        rec["retriever"] = to_string(job.retriever);
        rec["augmented_query"] = nullptr;
        try {
            AnswerMeta meta{query.text, job.mode, job.retriever, {}};
            std::string prompt;
            if (job.mode == RagMode::no_rag) {
                prompt = build_prompt(query.text, {}, spec.generation).text;
            } else {
                const Retriever& r = retrievers.at(job.retriever);
                if (!r.encoder) {
                    throw InputError(std::string(to_string(job.retriever)) + " retriever unavailable: " + r.error);
                }
                RetrievalContext ctx;
                ctx.chunks = r.bundle->chunks();
                ctx.index = &r.bundle->index();
                ctx.encoder = r.encoder.get();
                ctx.augmenter = augmenter.get();
                ctx.augment_template = tmpl;
                ctx.fallback = spec.fallback;
                const auto qmode = job.mode == RagMode::rag_augmented ? QueryMode::augmented : QueryMode::raw;
                auto retrieved = retrieve_passages(ctx, query.text, qmode, RetrievalConfig{spec.k});
                if (retrieved.augmentation) {
                    rec["augmented_query"] = retrieved.augmentation->text;
                }
                auto rendered = build_prompt(query.text, retrieved.passages, spec.generation);
                prompt = std::move(rendered.text);
                meta.passages = std::move(rendered.passages);

                ordered_json trace;
                trace["query_id"] = query.id;
                trace["retriever"] = to_string(job.retriever);
                const auto details = trace_record(query.text, retrieved);
                for (auto& [key, value] : details.items()) {
                    trace[key] = value;
                }
                if (retrieved.augmentation && !retrieved.augmentation->error.empty()) {
                    trace["augment_error"] = retrieved.augmentation->error;
                }
                out.trace = std::move(trace);
            }
            Answer a = generate_answer(*generator, prompt, std::move(meta));
            rec["text"] = a.text;
            rec["passages_used"] = json(a.passages_used);
            rec["error"] = nullptr;
        } catch (const std::exception& e) {
            rec["text"] = nullptr;
            rec["passages_used"] = ordered_json::array();
            rec["error"] = e.what();
            out.error = true;
            spdlog::warn("run: {} {} {} failed: {}", query.id, to_string(job.mode), to_string(job.retriever),
                         e.what());
        }
        out.record = std::move(rec);
        return out;
    };

    std::vector<JobResult> results(jobs.size());
    const std::size_t workers = std::min(spec.workers, jobs.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            results[i] = execute(jobs[i]);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < jobs.size(); i = next++) {
                    results[i] = execute(jobs[i]);
                }
            });
        }
    }

    RunOutput out;
    for (auto& r : results) {
        out.errors += r.error ? 1 : 0;
        out.records.push_back(std::move(r.record));
        if (r.trace) {
            out.traces.push_back(std::move(*r.trace));
        }
    }
    spdlog::info("run: {} records, {} errors", out.records.size(), out.errors);
    return out;
}

std::string to_jsonl(std::span<const ordered_json> lines) {
    std::string s;
    for (const auto& l : lines) {
        s += l.dump();
        s.push_back('\n');
    }
    return s;
}

void write_run(const RunOutput& out, const fs::path& run_path, const fs::path& trace_path) {
    write_file(run_path.string(), to_jsonl(out.records));
    if (!trace_path.empty()) {
        write_file(trace_path.string(), to_jsonl(out.traces));
    }
}

RunRecord parse_run_record(const json& j) {
    RunRecord r;
    r.query_id = j.at("query_id").get<std::string>();
    r.mode = parse_rag_mode(j.at("mode").get<std::string>());
    r.retriever = parse_retriever(j.at("retriever").get<std::string>());
    if (j.contains("augmented_query") && !j.at("augmented_query").is_null()) {
        r.augmented_query = j.at("augmented_query").get<std::string>();
    }
    if (j.contains("error") && !j.at("error").is_null()) {
        r.error = j.at("error").get<std::string>();
        return r;
    }
    r.answer = j.get<Answer>();
    return r;
}

std::vector<RunRecord> read_run_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot read run file: " + path.string());
    }
    std::vector<RunRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        try {
            out.push_back(parse_run_record(json::parse(line)));
        } catch (const json::exception& e) {
            throw InputError(path.string() + ": bad run record on line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

} // namespace augrag
