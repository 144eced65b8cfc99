#include "augrag/evaluate.hpp"

#include "augrag/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace augrag {

using nlohmann::json;

namespace {

std::string full_precision(double v) {
    std::array<char, 64> buf{};
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), p);
}

std::string two_decimals(std::optional<double> v) {
    if (!v) {
        return "-";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v);
    return buf;
}

std::string pad(std::string s, std::size_t width, bool right = false) {
    if (s.size() >= width) {
        return s;
    }
    std::string fill(width - s.size(), ' ');
    return right ? fill + s : s + fill;
}

} // namespace

int score_answer(const Judgment& j) {
    if (!j.related) {
        return 1;
    }
    if (!j.correct) {
        return 2;
    }
    if (!(j.uses_context && j.respects_constraints)) {
        return 3;
    }
    return 4;
}

SystemId SystemId::make(RagMode mode, RetrieverKind retriever) {
    if (mode == RagMode::no_rag) {
        return {mode, RetrieverKind::none};
    }
    if (retriever == RetrieverKind::none) {
        throw InputError("system " + std::string(to_string(mode)) + " needs a retriever");
    }
    return {mode, retriever};
}

EvalRecord make_record(std::string query_id, SystemId system, Judgment judgment, std::optional<Answer> answer) {
    EvalRecord r;
    r.query_id = std::move(query_id);
    r.system = SystemId::make(system.mode, system.retriever);
    r.score = score_answer(judgment);
    r.judgment = std::move(judgment);
    r.answer = std::move(answer);
    return r;
}

std::optional<double> CellStats::mean() const {
    if (count == 0) {
        return std::nullopt;
    }
    return sum / static_cast<double>(count);
}

void CellStats::add(double v) {
    sum += v;
    ++count;
}

void CellStats::merge(const CellStats& other) {
    sum += other.sum;
    count += other.count;
}

void ScoreTable::add(const EvalRecord& r) {
    cells_[SystemId::make(r.system.mode, r.system.retriever)].add(static_cast<double>(r.score));
}

void ScoreTable::merge(const ScoreTable& other) {
    for (const auto& [k, v] : other.cells_) {
        cells_[k].merge(v);
    }
}

std::optional<double> ScoreTable::cell(SystemId s) const {
    auto it = cells_.find(SystemId::make(s.mode, s.retriever));
    return it == cells_.end() ? std::nullopt : it->second.mean();
}

std::size_t ScoreTable::count(SystemId s) const {
    auto it = cells_.find(SystemId::make(s.mode, s.retriever));
    return it == cells_.end() ? 0 : it->second.count;
}

std::string ScoreTable::to_csv() const {
    std::ostringstream out;
    out << "regime,retriever,mean,n\n";
    auto row = [&](SystemId s) {
        auto m = cell(s);
        out << to_string(s.mode) << ',' << to_string(s.retriever) << ',' << (m ? full_precision(*m) : "") << ','
            << count(s) << '\n';
    };
    row({RagMode::no_rag, RetrieverKind::none});
    for (auto mode : {RagMode::rag_raw, RagMode::rag_augmented}) {
        for (auto r : kRetrievers) {
            row({mode, r});
        }
    }
    return out.str();
}

std::string ScoreTable::to_text() const {
    constexpr std::size_t label_w = 34;
    constexpr std::size_t col_w = 11;
    std::ostringstream out;
    out << pad("", label_w) << pad("TF-IDF", col_w, true) << pad("Doc2Vec", col_w, true)
        << pad("BERT&UMAP", col_w, true) << '\n';
    // The baseline does not depend on the retriever; print it once, centered.
    out << pad("No RAG & No query augmentation", label_w) << pad("", col_w)
        << pad(two_decimals(cell({RagMode::no_rag, RetrieverKind::none})), col_w, true) << '\n';
    const std::pair<RagMode, const char*> rows[] = {{RagMode::rag_raw, "RAG & No query augmentation"},
                                                    {RagMode::rag_augmented, "RAG & query augmentation"}};
    for (const auto& [mode, label] : rows) {
        out << pad(label, label_w);
        for (auto r : kRetrievers) {
            out << pad(two_decimals(cell({mode, r})), col_w, true);
        }
        out << '\n';
    }
    return out.str();
}

ScoreTable aggregate(std::span<const EvalRecord> records) {
    ScoreTable t;
    for (const auto& r : records) {
        if (r.score < 1 || r.score > 4) {
            throw InputError("aggregate: record for query " + r.query_id + " has invalid score " +
                             std::to_string(r.score));
        }
        if (r.score != score_answer(r.judgment)) {
            throw InputError("aggregate: record for query " + r.query_id + " has a score that disagrees with its judgment");
        }
        t.add(r);
    }
    return t;
}

bool constraint_check(const Answer& answer, std::size_t max_words) {
    return split_whitespace(answer.text).size() <= max_words;
}

std::optional<double> grounding_overlap(const Answer& answer, const TokenizerConfig& tok) {
    if (answer.passages_used.empty()) {
        return std::nullopt;
    }
    std::set<std::string> context;
    for (const auto& p : answer.passages_used) {
        for (auto& t : tokenize(p.text, tok)) {
            context.insert(std::move(t));
        }
    }
    auto tokens = tokenize(answer.text, tok);
    std::set<std::string> distinct(tokens.begin(), tokens.end());
    if (distinct.empty()) {
        return 0.0;
    }
    std::size_t hit = 0;
    for (const auto& t : distinct) {
        hit += context.contains(t) ? 1 : 0;
    }
    return static_cast<double>(hit) / static_cast<double>(distinct.size());
}

std::vector<JudgmentRow> load_judgments(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot read judgments: " + path.string());
    }
    std::vector<JudgmentRow> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        try {
            auto j = json::parse(line);
            JudgmentRow row;
            row.query_id = j.at("query_id").get<std::string>();
            const auto& sys = j.at("system");
            auto mode = parse_rag_mode(sys.at("mode").get<std::string>());
            auto retriever = parse_retriever(sys.value("retriever", std::string("none")));
            row.system = SystemId::make(mode, retriever);
            row.judgment.related = j.at("related").get<bool>();
            row.judgment.correct = j.at("correct").get<bool>();
            row.judgment.uses_context = j.at("uses_context").get<bool>();
            row.judgment.respects_constraints = j.at("respects_constraints").get<bool>();
            row.judgment.judge_id = j.at("judge_id").get<std::string>();
            rows.push_back(std::move(row));
        } catch (const json::exception& e) {
            throw InputError(path.string() + ": bad judgment on line " + std::to_string(lineno) + ": " + e.what());
        } catch (const InputError& e) {
            throw InputError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

std::map<SystemId, ProxyStats> summarize_proxies(std::span<const Answer> answers, std::size_t max_words) {
    struct Acc {
        std::size_t n = 0;
        std::size_t compliant = 0;
        CellStats grounding;
    };
    std::map<SystemId, Acc> acc;
    for (const auto& a : answers) {
        auto& cell = acc[SystemId::make(a.mode, a.retriever)];
        ++cell.n;
        cell.compliant += constraint_check(a, max_words) ? 1 : 0;
        if (auto g = grounding_overlap(a)) {
            cell.grounding.add(*g);
        }
    }
    std::map<SystemId, ProxyStats> out;
    for (const auto& [k, v] : acc) {
        out[k] = {v.n, static_cast<double>(v.compliant) / static_cast<double>(v.n), v.grounding.mean()};
    }
    return out;
}

} // namespace augrag
