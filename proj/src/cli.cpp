#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "litesem/litesem.hpp"

namespace litesem::cli {
namespace {

namespace fs = std::filesystem;

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string provider;
    unsigned jobs = default_jobs();
};

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InvalidState:
        return kExitRuntime;
    default:
        return kExitInput;
    }
}

AppConfig resolve_config(const CommonOptions& opt) {
    AppConfig cfg = opt.config.empty() ? config_from_json(nlohmann::json::object()) : load_config(opt.config);
    if (opt.seed) {
        cfg.provider.synthetic.seed = *opt.seed;
    }
    if (opt.provider == "http") {
        cfg.provider.kind = ProviderKind::Http;
    } else if (opt.provider == "synthetic") {
        cfg.provider.kind = ProviderKind::Synthetic;
    }
    return cfg;
}

void add_common(CLI::App& cmd, CommonOptions& opt) {
    cmd.add_option("--config", opt.config, "JSON config with flat dotted keys")->check(CLI::ExistingFile);
    cmd.add_option("--seed", opt.seed, "seed for every random choice (default 42)");
    cmd.add_option("--provider", opt.provider, "embedding provider")->check(CLI::IsMember({"synthetic", "http"}));
    cmd.add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::NotFound, "cannot open " + path.string() + " for writing");
    }
    return out;
}

int cmd_index(const CommonOptions& opt, const std::string& corpus_path, const std::string& out_path,
              std::ostream& out, std::ostream& err) {
    const auto cfg = resolve_config(opt);
    const auto corpus = read_corpus(corpus_path);
    auto provider = make_provider(cfg.provider);
    IndexerConfig icfg{cfg.chunking, cfg.induction, opt.jobs};
    const auto build = build_index(corpus, icfg, *provider);
    save_index(build.graph, out_path);
    write_timings(timing_path(out_path), Phase::Index, build.timings);

    for (const auto& [surface, stats] : build.gated) {
        auto line = stats.to_json();
        line["event"] = "token_induction";
        line["token"] = surface;
        line.erase("tokens");
        err << line.dump() << '\n';
    }
    err << build.stats.to_json().dump() << '\n';
    const auto timing = timing_report(build.timings);
    nlohmann::json summary = {{"docs", build.graph.documents().size()},
                              {"chunks", build.graph.chunks().size()},
                              {"tokens", build.graph.tokens().size()},
                              {"semantic_nodes", build.graph.semantics().size()},
                              {"multi_sense_tokens", build.multi_sense_tokens()},
                              {"ait_s", seconds_json(timing.ait_s)}};
    out << summary.dump() << '\n';
    return kExitOk;
}

int cmd_query(const CommonOptions& opt, const std::string& index_path, const std::string& queries_path,
              const std::string& text, std::size_t k, const std::string& out_path, std::ostream& out) {
    const auto cfg = resolve_config(opt);
    const auto graph = load_index(index_path);
    auto provider = make_provider(cfg.provider);
    const Retriever retriever(graph, *provider, cfg.query, cfg.chunking);

    if (!text.empty()) {
        write_run(out, "text", retriever.retrieve(text, k), graph);
        return kExitOk;
    }
    if (queries_path.empty() || out_path.empty()) {
        throw Error(ErrorCode::InvalidConfig, "query needs --text, or both --queries and --out");
    }
    const auto queries = read_queries(queries_path);
    std::vector<std::string> blocks(queries.size());
    std::vector<TimingEvent> timings(queries.size(), {Phase::Query, 0.0});
    parallel_for(queries.size(), opt.jobs, [&](std::size_t i) {
        Stopwatch watch;
        std::ostringstream block;
        write_run(block, queries[i].id, retriever.retrieve(queries[i].text, k), graph);
        blocks[i] = block.str();
        timings[i].seconds = watch.seconds();
    });
    auto file = open_output(out_path);
    for (const auto& b : blocks) {
        file << b;
    }
    write_timings(timing_path(out_path), Phase::Query, timings);
    const auto report = timing_report(timings);
    out << nlohmann::json{{"queries", queries.size()}, {"aqt_s", seconds_json(report.aqt_s)}}.dump() << '\n';
    return kExitOk;
}

int cmd_eval(const std::string& run_path, const std::string& qrels_path, const std::string& index_path,
             const std::string& queries_path, std::ostream& out) {
    const auto run = read_run(run_path);
    const auto qrels = read_qrels(qrels_path);
    std::vector<std::string> ids;
    if (!queries_path.empty()) {
        for (const auto& q : read_queries(queries_path)) {
            ids.push_back(q.id);
        }
    }
    auto metrics = evaluate(run, qrels, ids);
    std::vector<TimingEvent> events = read_timings(timing_path(run_path));
    if (!index_path.empty()) {
        metrics.num_docs = load_index(index_path).documents().size();
        const auto idx = read_timings(timing_path(index_path));
        events.insert(events.end(), idx.begin(), idx.end());
    }
    metrics.timing = timing_report(events);
    out << metrics.to_json().dump() << '\n';
    return kExitOk;
}

int cmd_stats(const std::string& index_path, std::ostream& out) {
    const auto g = load_index(index_path);
    std::size_t multi = 0;
    std::size_t pending = 0;
    for (const auto& t : g.tokens()) {
        multi += t.semantic_ids.size() > 1 ? 1 : 0;
    }
    for (const auto& [token, set] : g.anomaly_sets()) {
        pending += set.pending.size();
    }
    nlohmann::json j = {{"docs", g.documents().size()},
                        {"chunks", g.chunks().size()},
                        {"tokens", g.tokens().size()},
                        {"semantic_nodes", g.semantics().size()},
                        {"multi_sense_tokens", multi},
                        {"dim", g.dim()},
                        {"avg_chunk_len", g.stats().avg_chunk_len},
                        {"pending_anomalies", pending}};
    out << j.dump() << '\n';
    return kExitOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Semantic graph retrieval: index, query, eval, stats"};
    app.require_subcommand(1);

    CommonOptions common;
    std::string corpus;
    std::string index_path;
    std::string output;
    std::string queries;
    std::string text;
    std::string run_path;
    std::string qrels;
    std::size_t k = 10;

    auto* index = app.add_subcommand("index", "build an index from a JSON-lines corpus");
    index->add_option("--corpus", corpus, "corpus JSONL")->required();
    index->add_option("--out", output, "index file to write")->required();
    add_common(*index, common);

    auto* query = app.add_subcommand("query", "run queries against an index");
    query->add_option("--index", index_path, "index file")->required();
    query->add_option("--queries", queries, "queries JSONL");
    query->add_option("--text", text, "single inline query; results go to stdout");
    query->add_option("--k", k, "results per query")->check(CLI::PositiveNumber);
    query->add_option("--out", output, "run file to write");
    add_common(*query, common);

    auto* eval = app.add_subcommand("eval", "score a run file against qrels");
    eval->add_option("--run", run_path, "run file")->required();
    eval->add_option("--qrels", qrels, "qrels TSV")->required();
    eval->add_option("--index", index_path, "index file (document count, indexing time)");
    eval->add_option("--queries", queries, "queries JSONL; queries without run lines count as misses");

    auto* stats = app.add_subcommand("stats", "print graph statistics");
    stats->add_option("--index", index_path, "index file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*index) {
            return cmd_index(common, corpus, output, out, err);
        }
        if (*query) {
            return cmd_query(common, index_path, queries, text, k, output, out);
        }
        if (*eval) {
            return cmd_eval(run_path, qrels, index_path, queries, out);
        }
        return cmd_stats(index_path, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

} // namespace litesem::cli
