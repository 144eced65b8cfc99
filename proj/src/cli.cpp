#include "augrag/cli.hpp"

#include "augrag/bundle.hpp"
#include "augrag/cost.hpp"
#include "augrag/error.hpp"
#include "augrag/evaluate.hpp"
#include "augrag/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace augrag::cli {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// Config files are JSON: top-level keys set global flags, an object under a
// verb name sets that verb's flags. Values given on the command line win.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            j = json::parse(input);
        } catch (const json::parse_error& e) {
            throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) {
            throw CLI::ConversionError("config file must hold a JSON object");
        }
        std::vector<CLI::ConfigItem> items;
        collect(j, {}, items);
        return items;
    }

private:
    static std::string scalar(const json& v) {
        if (v.is_string()) {
            return v.get<std::string>();
        }
        if (v.is_boolean()) {
            return v.get<bool>() ? "true" : "false";
        }
        return v.dump();
    }

    static void collect(const json& obj, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
        for (const auto& [key, value] : obj.items()) {
            if (value.is_object()) {
                auto next = parents;
                next.push_back(key);
                collect(value, next, out);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value) {
                    item.inputs.push_back(scalar(v));
                }
            } else {
                item.inputs.push_back(scalar(value));
            }
            out.push_back(std::move(item));
        }
    }
};

struct Io {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
    bool json = false;
};

void emit_json(Io& io, const ordered_json& j) {
    io.out << j.dump() << '\n';
}

std::vector<Chunk> load_chunks(const std::string& path) {
    auto chunks = read_chunks_jsonl(path);
    if (chunks.empty()) {
        throw InputError("no chunks in " + path);
    }
    return chunks;
}

/// Embedding source flags shared by several verbs.
struct ProviderFlags {
    std::string provider;  // file | hashing | remote; empty means infer
    std::string vectors;
    std::size_t dim = 0;
    std::string endpoint;

    void add(CLI::App* app) {
        app->add_option("--provider", provider, "Embedding source")
            ->check(CLI::IsMember({"file", "hashing", "remote"}));
        app->add_option("--vectors", vectors, "Precomputed vector file (implies --provider file)");
        app->add_option("--dim", dim, "Embedding dimension (hashing and remote)");
        app->add_option("--endpoint", endpoint, "Model server URL (default: $AUGRAG_MODEL_ENDPOINT)");
    }

    std::unique_ptr<EmbeddingProvider> make() const {
        EmbeddingSpec spec;
        std::string kind = provider.empty() ? (vectors.empty() ? "" : "file") : provider;
        if (kind.empty()) {
            throw InputError("no embedding source: pass --vectors FILE or --provider hashing|remote");
        }
        if (kind == "file") {
            if (vectors.empty()) {
                throw InputError("--provider file needs --vectors");
            }
            spec.kind = EmbeddingSpec::Kind::file;
            spec.vectors = vectors;
        } else {
            if (dim == 0) {
                throw InputError("--provider " + kind + " needs --dim");
            }
            spec.kind = kind == "hashing" ? EmbeddingSpec::Kind::hashing : EmbeddingSpec::Kind::remote;
            spec.dim = dim;
            spec.endpoint = endpoint;
        }
        return make_embedding_provider(spec, "");
    }
};

/// LLM client flags: a stub rule file, a fixed stub response, or the remote server.
struct ClientFlags {
    std::string prefix;
    std::string rules;
    std::string response;
    std::string endpoint;
    int max_tokens = 256;

    explicit ClientFlags(std::string p) : prefix(std::move(p)) {}

    void add(CLI::App* app) {
        app->add_option("--" + prefix + "-rules", rules, "Stub rule file for the " + prefix);
        app->add_option("--" + prefix + "-response", response, "Fixed stub response template for the " + prefix);
        app->add_option("--" + prefix + "-endpoint", endpoint, "Model server URL for the " + prefix);
        app->add_option("--" + prefix + "-max-tokens", max_tokens, "Token limit for remote " + prefix + " calls");
    }

    std::unique_ptr<LlmClient> make() const {
        ClientSpec spec;
        if (!rules.empty()) {
            spec.kind = ClientSpec::Kind::stub_rules;
            spec.rules = rules;
        } else if (!response.empty()) {
            spec.kind = ClientSpec::Kind::stub_fixed;
            spec.fixed_response = response;
        } else {
            spec.kind = ClientSpec::Kind::remote;
            spec.remote.http.endpoint = endpoint;
            spec.remote.max_tokens = max_tokens;
        }
        return make_llm_client(spec, "");
    }
};

ordered_json passage_json(const ContextPassage& p) {
    ordered_json j;
    j["center_chunk_id"] = p.center_chunk_id;
    j["member_chunk_ids"] = p.member_chunk_ids;
    j["score"] = p.score;
    j["text"] = p.text;
    return j;
}

std::string fixed(double v, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            auto v = std::stoull(item, &pos);
            if (pos != item.size()) {
                throw std::invalid_argument(item);
            }
            out.push_back(v);
        } catch (const std::exception&) {
            throw InputError("bad size list entry: " + item);
        }
    }
    return out;
}

// ---- verbs ----

struct IngestArgs {
    std::string input;
    std::string format = "plain";
    std::size_t min_chars = 15;
    std::string out;
};

void cmd_ingest(Io& io, const IngestArgs& a) {
    auto docs = load_documents(a.input, a.format == "jsonl" ? DocFormat::jsonl : DocFormat::plain);
    ChunkConfig cfg;
    cfg.min_chars = a.min_chars;
    auto chunks = chunk_corpus(docs, cfg);
    if (chunks.empty()) {
        throw InputError("no sentence in the corpus is longer than " + std::to_string(a.min_chars) + " characters");
    }
    write_chunks_jsonl(a.out, chunks);
    if (io.json) {
        emit_json(io, {{"documents", docs.size()}, {"chunks", chunks.size()}, {"out", a.out}});
    } else {
        io.out << "ingested " << docs.size() << " documents into " << chunks.size() << " chunks: " << a.out << '\n';
    }
}

struct FitTfidfArgs {
    std::string chunks;
    std::string out;
};

void cmd_fit_tfidf(Io& io, const FitTfidfArgs& a) {
    auto chunks = load_chunks(a.chunks);
    auto model = TfIdfModel::fit(chunks);
    model.save(a.out);
    const auto& v = model.vocabulary();
    if (io.json) {
        emit_json(io, {{"n_docs", v.n_docs}, {"terms", v.size()}, {"avg_unique_terms", v.avg_unique_terms},
                       {"out", a.out}});
    } else {
        io.out << "tfidf: " << v.size() << " terms over " << v.n_docs << " chunks: " << a.out << '\n';
    }
}

struct TrainPvecArgs {
    std::string chunks;
    std::string out;
    PvConfig cfg;
};

void cmd_train_pvec(Io& io, const TrainPvecArgs& a) {
    auto chunks = load_chunks(a.chunks);
    PvTrainStats stats;
    auto model = PvModel::train(chunks, a.cfg, &stats);
    model.save(a.out);
    const double final_loss = stats.epoch_loss.empty() ? 0.0 : stats.epoch_loss.back();
    if (io.json) {
        emit_json(io, {{"chunks", chunks.size()},
                       {"vocabulary", model.vocabulary().size()},
                       {"dim", a.cfg.dim},
                       {"epochs", a.cfg.epochs},
                       {"final_loss", final_loss},
                       {"out", a.out}});
    } else {
        io.out << "pvec: " << chunks.size() << " chunks, dim " << a.cfg.dim << ", " << a.cfg.epochs
               << " epochs, final loss " << fixed(final_loss, 4) << ": " << a.out << '\n';
    }
}

struct EmbedArgs {
    std::string chunks;
    std::string texts;
    std::string out;
    ProviderFlags provider;
};

void cmd_embed(Io& io, const EmbedArgs& a) {
    std::vector<std::string> texts;
    if (!a.chunks.empty()) {
        for (const auto& c : load_chunks(a.chunks)) {
            texts.push_back(c.text);
        }
    }
    if (!a.texts.empty()) {
        std::istringstream in(read_file(a.texts));
        std::string line;
        while (std::getline(in, line)) {
            if (!trim(line).empty()) {
                texts.emplace_back(trim(line));
            }
        }
    }
    if (texts.empty()) {
        throw InputError("embed: nothing to embed (pass --chunks and/or --texts)");
    }
    auto provider = a.provider.make();
    auto vectors = provider->embed_texts(texts);
    std::vector<PrecomputedEntry> entries;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        entries.push_back({texts[i], std::move(vectors[i])});
    }
    write_precomputed(a.out, entries);
    if (io.json) {
        emit_json(io, {{"texts", texts.size()}, {"dim", provider->expected_dim()}, {"provider", provider->identity()},
                       {"out", a.out}});
    } else {
        io.out << "embedded " << texts.size() << " texts (dim " << provider->expected_dim() << ", "
               << provider->identity() << "): " << a.out << '\n';
    }
}

struct ReduceArgs {
    std::string chunks;
    std::string out;
    ProviderFlags provider;
    ReducerConfig cfg;
};

void cmd_reduce(Io& io, const ReduceArgs& a) {
    auto chunks = load_chunks(a.chunks);
    auto provider = a.provider.make();
    auto reducer = Reducer::fit(embed_chunks(*provider, chunks), a.cfg);
    reducer.save(a.out);
    if (io.json) {
        emit_json(io, {{"points", chunks.size()}, {"input_dim", reducer.input_dim()}, {"out_dim", a.cfg.out_dim},
                       {"n_neighbors", a.cfg.n_neighbors}, {"out", a.out}});
    } else {
        io.out << "reduced " << chunks.size() << " vectors from " << reducer.input_dim() << " to " << a.cfg.out_dim
               << " dimensions: " << a.out << '\n';
    }
}

struct IndexArgs {
    std::string chunks;
    std::string encoding = "tfidf";
    std::string model;
    std::string out;
    ProviderFlags provider;
    BundleOptions opts;
};

void cmd_index(Io& io, IndexArgs& a) {
    auto chunks = load_chunks(a.chunks);
    const Encoding enc = parse_encoding(a.encoding);
    std::unique_ptr<EmbeddingProvider> provider;
    if (enc == Encoding::dense_reduced || enc == Encoding::dense_full) {
        provider = a.provider.make();
    }
    auto bundle = [&]() -> IndexBundle {
        if (a.model.empty()) {
            return IndexBundle::build(std::move(chunks), enc, a.opts, provider.get());
        }
        switch (enc) {
        case Encoding::tfidf:
            return IndexBundle::from_tfidf(std::move(chunks), TfIdfModel::load(a.model));
        case Encoding::pvec:
            return IndexBundle::from_pvec(std::move(chunks), PvModel::load(a.model), a.opts.infer_epochs,
                                          a.opts.infer_seed);
        case Encoding::dense_reduced:
            return IndexBundle::from_reducer(std::move(chunks), Reducer::load(a.model),
                                             {provider->identity(), provider->expected_dim()});
        case Encoding::dense_full:
            break;
        }
        throw InputError("index: --model does not apply to encoding " + a.encoding);
    }();
    bundle.save(a.out);
    if (io.json) {
        emit_json(io, {{"encoding", to_string(bundle.encoding())},
                       {"metric", to_string(bundle.index().metric())},
                       {"chunks", bundle.chunks().size()},
                       {"out", a.out}});
    } else {
        io.out << "index (" << to_string(bundle.encoding()) << ", " << to_string(bundle.index().metric()) << ") over "
               << bundle.chunks().size() << " chunks: " << a.out << '\n';
    }
}

struct QueryArgs {
    std::string index;
    std::string mode = "raw";
    std::size_t k = 3;
    std::string text;
    bool repl = false;
    bool generate = false;
    std::size_t max_words = 60;
    std::string fallback = "passthrough";
    ProviderFlags provider;
    ClientFlags augmenter{"augmenter"};
    ClientFlags generator{"generator"};
};

void cmd_query(Io& io, QueryArgs& a) {
    auto bundle = IndexBundle::load(a.index);
    const QueryMode mode = parse_query_mode(a.mode);
    std::unique_ptr<EmbeddingProvider> provider;
    if (bundle.encoding() == Encoding::dense_reduced || bundle.encoding() == Encoding::dense_full) {
        provider = a.provider.make();
    }
    auto encoder = bundle.make_encoder(provider.get());
    std::unique_ptr<LlmClient> augmenter;
    if (mode == QueryMode::augmented) {
        augmenter = a.augmenter.make();
    }
    std::unique_ptr<LlmClient> generator;
    GenConfig gen;
    gen.max_words = a.max_words;
    if (a.generate) {
        generator = a.generator.make();
    }

    RetrievalContext ctx;
    ctx.chunks = bundle.chunks();
    ctx.index = &bundle.index();
    ctx.encoder = encoder.get();
    ctx.augmenter = augmenter.get();
    ctx.fallback = a.fallback == "fail" ? AugmentFallback::fail : AugmentFallback::passthrough;

    // Each query is handled on its own; nothing carries over between them.
    auto answer_one = [&](const std::string& query) {
        auto r = retrieve_passages(ctx, query, mode, RetrievalConfig{a.k});
        std::optional<Answer> answer;
        if (generator) {
            auto prompt = build_prompt(query, r.passages, gen);
            RagMode rag = mode == QueryMode::augmented ? RagMode::rag_augmented : RagMode::rag_raw;
            RetrieverKind kind = bundle.encoding() == Encoding::tfidf  ? RetrieverKind::tfidf
                                 : bundle.encoding() == Encoding::pvec ? RetrieverKind::pvec
                                                                       : RetrieverKind::bert_umap;
            answer = generate_answer(*generator, prompt.text, {query, rag, kind, prompt.passages});
        }
        if (io.json) {
            ordered_json j;
            j["query"] = query;
            j["mode"] = to_string(mode);
            j["encoding"] = to_string(bundle.encoding());
            j["searched_text"] = r.searched_text;
            j["augmented"] = r.augmentation ? r.augmentation->augmented : false;
            auto hits = ordered_json::array();
            for (const auto& h : r.result.hits) {
                hits.push_back({{"chunk_id", h.chunk_id}, {"score", h.score}});
            }
            j["hits"] = std::move(hits);
            auto passages = ordered_json::array();
            for (const auto& p : r.passages) {
                passages.push_back(passage_json(p));
            }
            j["passages"] = std::move(passages);
            j["answer"] = answer ? ordered_json(answer->text) : ordered_json(nullptr);
            emit_json(io, j);
            return;
        }
        io.out << "query: " << query << '\n';
        if (r.augmentation) {
            io.out << (r.augmentation->augmented ? "pseudo-document: " : "augmentation failed, searched raw query: ")
                   << r.searched_text << '\n';
        }
        for (std::size_t i = 0; i < r.passages.size(); ++i) {
            const auto& p = r.passages[i];
            io.out << '[' << i + 1 << "] score " << fixed(p.score, 4) << "  chunk " << p.center_chunk_id
                   << "  window " << p.member_chunk_ids.front() << '-' << p.member_chunk_ids.back() << '\n'
                   << "    " << p.text << '\n';
        }
        if (answer) {
            io.out << "answer: " << answer->text << '\n';
        }
    };

    if (!a.repl) {
        if (trim(a.text).empty()) {
            throw InputError("query: no query text given");
        }
        answer_one(a.text);
        return;
    }
    if (!trim(a.text).empty()) {
        answer_one(a.text);
    }
    std::string line;
    while (true) {
        if (!io.json) {
            io.out << "> " << std::flush;
        }
        if (!std::getline(io.in, line)) {
            break;
        }
        auto q = trim(line);
        if (q.empty()) {
            continue;
        }
        if (q == ":quit" || q == ":q") {
            break;
        }
        try {
            answer_one(std::string(q));
        } catch (const InputError& e) {
            io.err << "error: " << e.what() << '\n';
        } catch (const ClientError& e) {
            io.err << "error: " << e.what() << '\n';
        }
    }
}

struct RunArgs {
    std::string spec;
    std::string out;
    std::string trace;
    std::size_t workers = 0;
};

void cmd_run(Io& io, const RunArgs& a) {
    auto spec = load_run_spec(a.spec);
    if (!a.out.empty()) {
        spec.run_out = a.out;
    }
    if (!a.trace.empty()) {
        spec.trace_out = a.trace;
    }
    if (a.workers > 0) {
        spec.workers = a.workers;
    }
    if (spec.run_out.empty()) {
        throw InputError("run: no output path (set output.run in the spec or pass --out)");
    }
    auto result = run_pipeline(spec);
    write_run(result, spec.run_out, spec.trace_out);
    if (io.json) {
        emit_json(io, {{"records", result.records.size()},
                       {"errors", result.errors},
                       {"run", spec.run_out.string()},
                       {"trace", spec.trace_out.string()}});
    } else {
        io.out << "run: " << result.records.size() << " records (" << result.errors << " errors): " << spec.run_out.string()
               << '\n';
    }
}

struct EvalArgs {
    std::string run;
    std::string judgments;
    std::size_t max_words = 60;
    std::string csv;
};

void cmd_eval(Io& io, const EvalArgs& a) {
    if (a.run.empty() && a.judgments.empty()) {
        throw InputError("eval: pass --run and/or --judgments");
    }
    ordered_json j;
    if (!a.judgments.empty()) {
        std::vector<EvalRecord> records;
        for (auto& row : load_judgments(a.judgments)) {
            records.push_back(make_record(row.query_id, row.system, row.judgment));
        }
        auto table = aggregate(records);
        if (!a.csv.empty()) {
            write_file(a.csv, table.to_csv());
        }
        if (io.json) {
            auto cells = ordered_json::array();
            auto cell = [&](SystemId s) {
                auto m = table.cell(s);
                cells.push_back({{"mode", to_string(s.mode)},
                                 {"retriever", to_string(s.retriever)},
                                 {"mean", m ? ordered_json(*m) : ordered_json(nullptr)},
                                 {"n", table.count(s)}});
            };
            cell({RagMode::no_rag, RetrieverKind::none});
            for (auto mode : {RagMode::rag_raw, RagMode::rag_augmented}) {
                for (auto r : ScoreTable::kRetrievers) {
                    cell({mode, r});
                }
            }
            j["scores"] = std::move(cells);
        } else {
            io.out << "Mean score (" << records.size() << " judgments)\n" << table.to_text();
        }
    }
    if (!a.run.empty()) {
        std::vector<Answer> answers;
        std::size_t errors = 0;
        for (auto& r : read_run_file(a.run)) {
            if (r.answer) {
                answers.push_back(std::move(*r.answer));
            } else {
                ++errors;
            }
        }
        auto proxies = summarize_proxies(answers, a.max_words);
        if (io.json) {
            auto rows = ordered_json::array();
            for (const auto& [sys, st] : proxies) {
                rows.push_back({{"mode", to_string(sys.mode)},
                                {"retriever", to_string(sys.retriever)},
                                {"answers", st.answers},
                                {"constraint_rate", st.constraint_rate},
                                {"mean_grounding", st.mean_grounding ? ordered_json(*st.mean_grounding)
                                                                     : ordered_json(nullptr)}});
            }
            j["proxies"] = std::move(rows);
            j["error_records"] = errors;
        } else {
            io.out << "Automated checks (" << answers.size() << " answers, " << errors << " error records)\n";
            const std::string limit_col = "within " + std::to_string(a.max_words) + " words";
            auto pad = [](std::string s, std::size_t w) {
                s.resize(std::max(s.size() + 2, w), ' ');
                return s;
            };
            io.out << pad("mode", 16) << pad("retriever", 12) << pad("answers", 9) << pad(limit_col, 0)
                   << "grounding\n";
            for (const auto& [sys, st] : proxies) {
                io.out << pad(std::string(to_string(sys.mode)), 16) << pad(std::string(to_string(sys.retriever)), 12)
                       << pad(std::to_string(st.answers), 9) << pad(fixed(st.constraint_rate, 2), limit_col.size() + 2)
                       << (st.mean_grounding ? fixed(*st.mean_grounding, 3) : std::string("-"))
                       << '\n';
            }
        }
    }
    if (io.json) {
        emit_json(io, j);
    }
}

struct BenchArgs {
    std::vector<std::string> methods{"tfidf_retrieval", "dense_pairwise"};
    std::string sizes = "1000,2000,4000,8000";
    CostParams params{1000, 50, 32, 400, 1, 512, 12, 768};
    BenchOptions opts;
    bool predict = false;
    std::string csv;
    std::string dat_dir;
};

void cmd_bench(Io& io, const BenchArgs& a) {
    if (a.predict) {
        ordered_json j;
        for (auto m : {CostMethod::tfidf, CostMethod::pvec, CostMethod::bert_reduced, CostMethod::bert_full}) {
            j[std::string(to_string(m))] = predict_cost(m, a.params);
        }
        if (io.json) {
            emit_json(io, j);
        } else {
            for (const auto& [k, v] : j.items()) {
                io.out << k << ": " << fixed(v.get<double>(), 0) << " unit ops\n";
            }
        }
        return;
    }
    const auto sizes = parse_sizes(a.sizes);
    std::vector<BenchReport> reports;
    for (const auto& m : a.methods) {
        reports.push_back(run_benchmark(parse_bench_method(m), sizes, a.params, a.opts));
    }
    if (!a.csv.empty()) {
        write_file(a.csv, bench_csv(reports));
    }
    if (!a.dat_dir.empty()) {
        fs::create_directories(a.dat_dir);
        for (const auto& r : reports) {
            write_file((fs::path(a.dat_dir) / (std::string(to_string(r.method)) + ".dat")).string(), bench_dat(r));
        }
    }
    if (io.json) {
        auto arr = ordered_json::array();
        for (const auto& r : reports) {
            arr.push_back({{"method", to_string(r.method)},
                           {"sizes", r.sizes},
                           {"timings", r.timings},
                           {"fitted_exponent", r.fitted_exponent},
                           {"r_squared", r.r_squared}});
        }
        emit_json(io, {{"reports", arr}});
        return;
    }
    io.out << "method            exponent   r2\n";
    for (const auto& r : reports) {
        std::string name(to_string(r.method));
        name.resize(std::max<std::size_t>(name.size(), 18), ' ');
        io.out << name << fixed(r.fitted_exponent, 3) << "      " << fixed(r.r_squared, 3) << '\n';
    }
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err, const std::string& level) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("augrag", sink);
    logger->set_pattern("[%l] %v");
    logger->set_level(spdlog::level::from_str(level));
    return logger;
}

} // namespace

int execute(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Query-augmented retrieval-augmented generation engine", "augrag"};
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON config file (command-line flags take precedence)");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    Io io{in, out, err};
    const char* env_log = std::getenv("AUGRAG_LOG");
    std::string log_level = env_log ? env_log : "warn";
    app.add_flag("--json", io.json, "Machine-readable JSON output");
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off (default: $AUGRAG_LOG or warn)")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Split a corpus into sentence chunks");
    c_ingest->add_option("--input", ingest.input, "Directory of .txt files, a .txt file, or a jsonl file")->required();
    c_ingest->add_option("--format", ingest.format, "plain or jsonl")->check(CLI::IsMember({"plain", "jsonl"}));
    c_ingest->add_option("--min-chars", ingest.min_chars, "Keep sentences longer than this many characters");
    c_ingest->add_option("--out", ingest.out, "Chunk file (jsonl)")->required();

    FitTfidfArgs fit;
    auto* c_fit = app.add_subcommand("fit-tfidf", "Fit the TF-IDF vocabulary over chunks");
    c_fit->add_option("--chunks", fit.chunks, "Chunk file")->required();
    c_fit->add_option("--out", fit.out, "Model file (jsonl)")->required();

    TrainPvecArgs pv;
    auto* c_pv = app.add_subcommand("train-pvec", "Train paragraph vectors over chunks");
    c_pv->add_option("--chunks", pv.chunks, "Chunk file")->required();
    c_pv->add_option("--out", pv.out, "Model file")->required();
    c_pv->add_option("--dim", pv.cfg.dim, "Vector dimension");
    c_pv->add_option("--epochs", pv.cfg.epochs, "Training epochs");
    c_pv->add_option("--negative", pv.cfg.negative_samples, "Negative samples per pair");
    c_pv->add_option("--lr", pv.cfg.initial_lr, "Initial learning rate");
    c_pv->add_option("--min-lr", pv.cfg.final_lr, "Final learning rate");
    c_pv->add_option("--min-count", pv.cfg.min_count, "Drop words rarer than this");
    c_pv->add_option("--seed", pv.cfg.seed, "Random seed");

    EmbedArgs emb;
    auto* c_emb = app.add_subcommand("embed", "Write a precomputed vector file");
    c_emb->add_option("--chunks", emb.chunks, "Chunk file whose texts to embed");
    c_emb->add_option("--texts", emb.texts, "Extra texts, one per line (queries, pseudo-documents)");
    c_emb->add_option("--out", emb.out, "Vector file")->required();
    emb.provider.add(c_emb);

    ReduceArgs red;
    auto* c_red = app.add_subcommand("reduce", "Fit the UMAP reducer over chunk embeddings");
    c_red->add_option("--chunks", red.chunks, "Chunk file")->required();
    c_red->add_option("--out", red.out, "Reducer file")->required();
    c_red->add_option("--out-dim", red.cfg.out_dim, "Target dimension");
    c_red->add_option("--n-neighbors", red.cfg.n_neighbors, "Neighbors per point");
    c_red->add_option("--epochs", red.cfg.layout_epochs, "Layout epochs");
    c_red->add_option("--seed", red.cfg.seed, "Random seed");
    red.provider.add(c_red);

    IndexArgs idx;
    auto* c_idx = app.add_subcommand("index", "Build a self-contained index bundle");
    c_idx->add_option("--chunks", idx.chunks, "Chunk file")->required();
    c_idx->add_option("--encoding", idx.encoding, "tfidf|pvec|dense_reduced|dense_full")
        ->check(CLI::IsMember({"tfidf", "pvec", "dense_reduced", "dense_full"}));
    c_idx->add_option("--model", idx.model, "Prebuilt TF-IDF, paragraph-vector or reducer file (else fit now)");
    c_idx->add_option("--out", idx.out, "Bundle file")->required();
    c_idx->add_option("--infer-epochs", idx.opts.infer_epochs, "Paragraph-vector inference epochs for queries");
    c_idx->add_option("--infer-seed", idx.opts.infer_seed, "Paragraph-vector inference seed");
    c_idx->add_option("--pvec-dim", idx.opts.pvec.dim, "Paragraph-vector dimension when training here");
    c_idx->add_option("--pvec-epochs", idx.opts.pvec.epochs, "Paragraph-vector epochs when training here");
    c_idx->add_option("--pvec-seed", idx.opts.pvec.seed, "Paragraph-vector seed when training here");
    c_idx->add_option("--umap-neighbors", idx.opts.reducer.n_neighbors, "Reducer neighbors when fitting here");
    c_idx->add_option("--umap-seed", idx.opts.reducer.seed, "Reducer seed when fitting here");
    idx.provider.add(c_idx);

    QueryArgs q;
    auto* c_q = app.add_subcommand("query", "Retrieve context passages for a query");
    c_q->add_option("--index", q.index, "Bundle file")->required();
    c_q->add_option("--mode", q.mode, "raw or augmented")->check(CLI::IsMember({"raw", "augmented"}));
    c_q->add_option("--k", q.k, "Chunks to retrieve")->check(CLI::PositiveNumber);
    c_q->add_option("text", q.text, "Query text");
    c_q->add_flag("--repl", q.repl, "Read queries line by line from stdin");
    c_q->add_flag("--generate", q.generate, "Also generate an answer");
    c_q->add_option("--max-words", q.max_words, "Answer word limit")->check(CLI::PositiveNumber);
    c_q->add_option("--fallback", q.fallback, "On augmenter failure: passthrough or fail")
        ->check(CLI::IsMember({"passthrough", "fail"}));
    q.provider.add(c_q);
    q.augmenter.add(c_q);
    q.generator.add(c_q);

    RunArgs run;
    auto* c_run = app.add_subcommand("run", "Run an experiment spec");
    c_run->add_option("--spec", run.spec, "Run spec (JSON)")->required();
    c_run->add_option("--out", run.out, "Run file (overrides the spec)");
    c_run->add_option("--trace", run.trace, "Trace file (overrides the spec)");
    c_run->add_option("--workers", run.workers, "Concurrent combinations (overrides the spec)");

    EvalArgs ev;
    auto* c_ev = app.add_subcommand("eval", "Score judgments and check answers");
    c_ev->add_option("--run", ev.run, "Run file for the automated checks");
    c_ev->add_option("--judgments", ev.judgments, "Judgment file (jsonl)");
    c_ev->add_option("--max-words", ev.max_words, "Word limit for the constraint check");
    c_ev->add_option("--csv", ev.csv, "Write the score table as CSV");

    BenchArgs bench;
    auto* c_bench = app.add_subcommand("bench", "Measure scaling or predict costs");
    c_bench->add_option("--methods", bench.methods, "tfidf_retrieval, dense_pairwise, dense_query")
        ->delimiter(',')
        ->check(CLI::IsMember({"tfidf_retrieval", "dense_pairwise", "dense_query"}));
    c_bench->add_option("--sizes", bench.sizes, "Comma-separated corpus sizes");
    c_bench->add_option("--trials", bench.opts.trials, "Trials per size (median is kept)");
    c_bench->add_option("--seed", bench.opts.seed, "Synthetic data seed");
    c_bench->add_flag("--predict", bench.predict, "Print predicted unit-op counts instead of timing");
    c_bench->add_option("--n", bench.params.n, "Chunk count (prediction)");
    c_bench->add_option("--m", bench.params.m, "Unique terms per chunk");
    c_bench->add_option("--d", bench.params.d, "Vector dimension");
    c_bench->add_option("--e-epochs", bench.params.e_epochs, "Paragraph-vector epochs");
    c_bench->add_option("--e-encode", bench.params.e_encode, "Dense encoding cost per document");
    c_bench->add_option("--l", bench.params.l, "Sequence length");
    c_bench->add_option("--heads", bench.params.h, "Attention heads");
    c_bench->add_option("--hidden", bench.params.h_prime, "Hidden size");
    c_bench->add_option("--csv", bench.csv, "Write timings as CSV");
    c_bench->add_option("--dat-dir", bench.dat_dir, "Write gnuplot data files here");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion& e) {
        out << "augrag 0.1.0\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        // Usage of the verb that failed, if one was recognised.
        const CLI::App* target = &app;
        for (const auto* sub : app.get_subcommands()) {
            target = sub;
        }
        err << target->help();
        return kExitUser;
    }

    auto previous = spdlog::default_logger();
    spdlog::set_default_logger(make_logger(err, log_level));
    struct Restore {
        std::shared_ptr<spdlog::logger> logger;
        ~Restore() { spdlog::set_default_logger(logger); }
    } restore{previous};

    try {
        if (c_ingest->parsed()) {
            cmd_ingest(io, ingest);
        } else if (c_fit->parsed()) {
            cmd_fit_tfidf(io, fit);
        } else if (c_pv->parsed()) {
            cmd_train_pvec(io, pv);
        } else if (c_emb->parsed()) {
            cmd_embed(io, emb);
        } else if (c_red->parsed()) {
            cmd_reduce(io, red);
        } else if (c_idx->parsed()) {
            cmd_index(io, idx);
        } else if (c_q->parsed()) {
            cmd_query(io, q);
        } else if (c_run->parsed()) {
            cmd_run(io, run);
        } else if (c_ev->parsed()) {
            cmd_eval(io, ev);
        } else if (c_bench->parsed()) {
            cmd_bench(io, bench);
        }
        return kExitOk;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUser;
    } catch (const ClientError& e) {
        err << "error: model endpoint: " << e.what() << '\n';
        return kExitUser;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

} // namespace augrag::cli
