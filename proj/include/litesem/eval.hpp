#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "litesem/error.hpp"
#include "litesem/graph.hpp"
#include "litesem/retrieval.hpp"
#include "litesem/timing.hpp"

namespace litesem {

/// query id -> gold document keys (relevance > 0 only).
using Qrels = std::map<std::string, std::set<std::string>>;

struct RunEntry {
    std::uint32_t chunk = 0;
    std::string doc;
    std::uint32_t rank = 0;
    double score = 0.0;
    std::string stage;
};

/// query id -> entries in rank order.
using RunFile = std::map<std::string, std::vector<RunEntry>>;

inline constexpr std::size_t kCutoff = 10;

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, '\t')) {
        out.push_back(field);
    }
    return out;
}

inline std::vector<std::string> split_fields(const std::string& line) {
    auto fields = split_tabs(line);
    if (fields.size() <= 1) {
        fields.clear();
        std::istringstream in(line);
        std::string f;
        while (in >> f) {
            fields.push_back(f);
        }
    }
    return fields;
}

template <class T>
std::optional<T> parse_number(const std::string& s) {
    std::istringstream in(s);
    T v{};
    if (!(in >> v) || !in.eof()) {
        return std::nullopt;
    }
    return v;
}

inline std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return line;
}

} // namespace detail

/// TSV `query_id  doc_id  relevance`. A first line whose relevance column is not numeric is
/// taken as a header.
inline Qrels read_qrels(std::istream& in) {
    Qrels out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(std::move(line));
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        const auto f = detail::split_fields(line);
        if (f.size() < 3) {
            throw ParseError(line_no, "qrels line needs query_id, doc_id, relevance");
        }
        const auto rel = detail::parse_number<double>(f[2]);
        if (!rel) {
            if (line_no == 1) {
                continue;
            }
            throw ParseError(line_no, "qrels relevance is not a number: " + f[2]);
        }
        if (*rel > 0.0) {
            out[f[0]].insert(f[1]);
        }
    }
    return out;
}

inline Qrels read_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::NotFound, "cannot open qrels " + path.string());
    }
    return read_qrels(in);
}

/// One run-file line per entry: query_id chunk_id doc_id rank score stage.
inline void write_run(std::ostream& out, const std::string& query_id, const RankedResult& result,
                      const SemanticGraph& g) {
    char score[64];
    for (std::size_t i = 0; i < result.entries.size(); ++i) {
        const auto& e = result.entries[i];
        std::snprintf(score, sizeof score, "%.9g", e.score);
        out << query_id << '\t' << e.chunk.value << '\t' << g.document(e.doc).key << '\t' << (i + 1) << '\t'
            << score << '\t' << to_string(e.stage) << '\n';
    }
}

inline RunFile read_run(std::istream& in) {
    RunFile out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(std::move(line));
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        const auto f = detail::split_tabs(line);
        if (f.size() < 5) {
            throw ParseError(line_no, "run line needs query_id, chunk_id, doc_id, rank, score");
        }
        const auto chunk = detail::parse_number<std::uint32_t>(f[1]);
        const auto rank = detail::parse_number<std::uint32_t>(f[3]);
        const auto score = detail::parse_number<double>(f[4]);
        if (!chunk || !rank || !score) {
            throw ParseError(line_no, "run line has a malformed number");
        }
        auto& list = out[f[0]];
        if (*rank != list.size() + 1) {
            throw ParseError(line_no, "ranks for query " + f[0] + " are not contiguous from 1");
        }
        list.push_back({*chunk, f[2], *rank, *score, f.size() > 5 ? f[5] : std::string{}});
    }
    return out;
}

inline RunFile read_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::NotFound, "cannot open run file " + path.string());
    }
    return read_run(in);
}

namespace detail {

inline const std::set<std::string>& gold_for(const Qrels& qrels, const std::string& query_id) {
    auto it = qrels.find(query_id);
    if (it == qrels.end() || it->second.empty()) {
        throw Error(ErrorCode::MissingJudgment, "no judgment for query " + query_id);
    }
    return it->second;
}

} // namespace detail

/// Micro-averaged document-level recall over the top 10 chunks of every run query.
inline double recall_at_10(const RunFile& run, const Qrels& qrels) {
    std::size_t hit = 0;
    std::size_t total = 0;
    for (const auto& [qid, entries] : run) {
        const auto& gold = detail::gold_for(qrels, qid);
        std::set<std::string> found;
        for (std::size_t i = 0; i < std::min(kCutoff, entries.size()); ++i) {
            if (gold.contains(entries[i].doc)) {
                found.insert(entries[i].doc);
            }
        }
        hit += found.size();
        total += gold.size();
    }
    return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

/// Mean reciprocal rank of the first gold-document chunk within the top 10.
inline double mrr_at_10(const RunFile& run, const Qrels& qrels) {
    double sum = 0.0;
    for (const auto& [qid, entries] : run) {
        const auto& gold = detail::gold_for(qrels, qid);
        for (std::size_t i = 0; i < std::min(kCutoff, entries.size()); ++i) {
            if (gold.contains(entries[i].doc)) {
                sum += 1.0 / static_cast<double>(i + 1);
                break;
            }
        }
    }
    return run.empty() ? 0.0 : sum / static_cast<double>(run.size());
}

struct TimingReport {
    std::optional<double> ait_s;
    std::optional<double> aqt_s;
};

inline TimingReport timing_report(std::span<const TimingEvent> events) {
    double index_sum = 0.0;
    double query_sum = 0.0;
    std::size_t index_n = 0;
    std::size_t query_n = 0;
    for (const auto& e : events) {
        if (e.phase == Phase::Index) {
            index_sum += e.seconds;
            ++index_n;
        } else {
            query_sum += e.seconds;
            ++query_n;
        }
    }
    TimingReport r;
    if (index_n > 0) {
        r.ait_s = index_sum / static_cast<double>(index_n);
    }
    if (query_n > 0) {
        r.aqt_s = query_sum / static_cast<double>(query_n);
    }
    return r;
}

/// Seconds rounded to milliseconds; absent stays null.
inline nlohmann::json seconds_json(const std::optional<double>& s) {
    if (!s) {
        return nullptr;
    }
    return std::round(*s * 1000.0) / 1000.0;
}

struct Metrics {
    double recall_at_10 = 0.0;
    double mrr_at_10 = 0.0;
    TimingReport timing;
    std::size_t num_queries = 0;
    std::size_t num_docs = 0;

    [[nodiscard]] nlohmann::json to_json() const {
        return {{"recall_at_10", recall_at_10},       {"mrr_at_10", mrr_at_10},
                {"ait_s", seconds_json(timing.ait_s)}, {"aqt_s", seconds_json(timing.aqt_s)},
                {"num_queries", num_queries},         {"num_docs", num_docs}};
    }
};

/// Scores a run; `queries` (when given) adds judged queries with no run lines as misses.
inline Metrics evaluate(RunFile run, const Qrels& qrels, std::span<const std::string> queries = {}) {
    for (const auto& q : queries) {
        run.try_emplace(q);
    }
    Metrics m;
    m.recall_at_10 = recall_at_10(run, qrels);
    m.mrr_at_10 = mrr_at_10(run, qrels);
    m.num_queries = run.size();
    return m;
}

/// Timing sidecar: {"phase": "index"|"query", "seconds": [...]}.
inline void write_timings(const std::filesystem::path& path, Phase phase, std::span<const TimingEvent> events) {
    nlohmann::json seconds = nlohmann::json::array();
    for (const auto& e : events) {
        if (e.phase == phase) {
            seconds.push_back(e.seconds);
        }
    }
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::NotFound, "cannot write " + path.string());
    }
    out << nlohmann::json{{"phase", phase == Phase::Index ? "index" : "query"}, {"seconds", seconds}}.dump()
        << '\n';
}

inline std::vector<TimingEvent> read_timings(const std::filesystem::path& path) {
    std::vector<TimingEvent> out;
    std::ifstream in(path);
    if (!in) {
        return out;
    }
    try {
        const auto j = nlohmann::json::parse(in);
        const Phase phase = j.at("phase").get<std::string>() == "index" ? Phase::Index : Phase::Query;
        for (const auto& s : j.at("seconds")) {
            out.push_back({phase, s.get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, "bad timing file " + path.string() + ": " + e.what());
    }
    return out;
}

inline std::filesystem::path timing_path(const std::filesystem::path& p) {
    return p.string() + ".timing.json";
}

} // namespace litesem
