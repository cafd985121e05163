#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "litesem/litesem.hpp"
#include "support/oracles.hpp"
#include "support/planted_corpus.hpp"

namespace litesem::testkit {

/// Induction settings for the planted corpus. The planted token's S-mean sits near 0.95,
/// so the dispersion gate is raised; min_cluster_size exceeds one subtopic (5 docs) so the
/// clusterer splits by sense, not by subtopic. Each sense shares half its context words
/// with the other, so the cluster tightness bound is looser than the default.
inline InductionConfig planted_induction() {
    InductionConfig cfg;
    cfg.tau_disp = 0.97;
    cfg.min_cluster_size = 6;
    cfg.cluster_tightness = 0.8;
    return cfg;
}

inline IndexerConfig planted_indexer() { return {ChunkingConfig{}, planted_induction(), 1}; }

/// Weak-context variant: every planted doc repeats the token and draws only sense-wide words.
inline PlantedOptions weak_context_options() {
    PlantedOptions opt;
    opt.shared_weight = 1.0;
    opt.planted_per_doc = 10;
    return opt;
}

inline InductionConfig weak_context_induction() {
    InductionConfig cfg = planted_induction();
    cfg.tau_disp = 0.965;
    cfg.cluster_tightness = InductionConfig{}.cluster_tightness;
    return cfg;
}

inline SyntheticConfig weak_context_encoder(double gamma) {
    SyntheticConfig cfg;
    cfg.gamma = gamma;
    cfg.occurrence_noise = 0.3;
    return cfg;
}

struct SenseReport {
    std::size_t nodes = 0;
    double purity = 0.0;  // occurrence-weighted majority fraction over the token's nodes
    std::vector<std::map<Sense, std::uint64_t>> per_node;
};

inline SenseReport sense_report(const SemanticGraph& g, const PlantedCorpus& corpus) {
    SenseReport r;
    auto token = g.find_token(corpus.token);
    if (!token) {
        return r;
    }
    std::uint64_t majority = 0;
    std::uint64_t total = 0;
    for (auto s : g.token(*token).semantic_ids) {
        std::map<Sense, std::uint64_t> counts;
        for (const auto& [c, f] : g.semantic(s).chunk_freq) {
            const auto& key = g.document(g.chunk(c).doc).key;
            auto it = corpus.sense_of.find(key);
            counts[it == corpus.sense_of.end() ? Sense::None : it->second] += f;
        }
        std::uint64_t best = 0;
        for (const auto& [sense, n] : counts) {
            best = std::max(best, n);
            total += n;
        }
        majority += best;
        r.per_node.push_back(std::move(counts));
    }
    r.nodes = r.per_node.size();
    r.purity = total == 0 ? 0.0 : static_cast<double>(majority) / static_cast<double>(total);
    return r;
}

inline Qrels planted_qrels(const PlantedCorpus& corpus) {
    Qrels q;
    for (const auto& pq : corpus.queries) {
        q[pq.id] = pq.gold;
    }
    return q;
}

/// Runs every planted query through `rank` and collects a run file.
template <typename RankFn>
RunFile planted_run(const PlantedCorpus& corpus, const SemanticGraph& g, RankFn rank, std::size_t k = 10) {
    RunFile run;
    for (const auto& pq : corpus.queries) {
        const RankedResult result = rank(pq.text, k);
        auto& list = run[pq.id];
        for (std::size_t i = 0; i < result.entries.size(); ++i) {
            const auto& e = result.entries[i];
            list.push_back({e.chunk.value, g.document(e.doc).key, static_cast<std::uint32_t>(i + 1), e.score,
                            std::string(to_string(e.stage))});
        }
    }
    return run;
}

inline void write_corpus_jsonl(const std::filesystem::path& path, const std::vector<CorpusDocument>& docs) {
    std::ofstream out(path);
    for (const auto& d : docs) {
        out << nlohmann::json{{"doc_id", d.key}, {"title", d.title}, {"text", d.text}}.dump() << '\n';
    }
}

inline void write_queries_jsonl(const std::filesystem::path& path, const PlantedCorpus& corpus) {
    std::ofstream out(path);
    for (const auto& q : corpus.queries) {
        out << nlohmann::json{{"query_id", q.id}, {"text", q.text}}.dump() << '\n';
    }
}

inline void write_qrels_tsv(const std::filesystem::path& path, const PlantedCorpus& corpus) {
    std::ofstream out(path);
    out << "query-id\tcorpus-id\tscore\n";
    for (const auto& q : corpus.queries) {
        for (const auto& d : q.gold) {
            out << q.id << '\t' << d << "\t1\n";
        }
    }
}

/// A hand-built index: chunk lengths plus semantic nodes given by token surface, anchor
/// direction (basis axis) and chunk frequencies. Dim 8.
struct ToySpec {
    struct Node {
        std::string token;
        std::vector<float> anchor;
        std::map<unsigned, unsigned> freq;
    };
    std::vector<unsigned> chunk_len;
    std::vector<Node> nodes;
};

inline std::vector<float> axis(std::size_t i, std::size_t dim = 8) {
    std::vector<float> v(dim, 0.0F);
    v[i % dim] = 1.0F;
    return v;
}

inline SemanticGraph build_toy(const ToySpec& spec) {
    SemanticGraph g(8);
    const DocId d = g.add_document("d0", "toy");
    for (std::size_t c = 0; c < spec.chunk_len.size(); ++c) {
        std::vector<TermOccurrence> terms;
        for (unsigned i = 0; i < spec.chunk_len[c]; ++i) {
            terms.push_back({"w" + std::to_string(i), {i, i + 1}, {}, false});
        }
        g.insert_chunk(d, "chunk " + std::to_string(c), terms);
    }
    for (const auto& n : spec.nodes) {
        const TokenId t = g.ensure_token(n.token);
        std::vector<std::pair<ChunkId, std::uint32_t>> members;
        for (const auto& [c, f] : n.freq) {
            members.emplace_back(ChunkId(c), f);
        }
        g.attach_semantic_node(t, normalized(std::span<const float>(n.anchor)), members, 0.3);
    }
    return g;
}

/// Random toy: `n_chunks` chunks of length 3..12, `n_nodes` nodes each on 1..5 chunks.
struct RandomToy {
    ToySpec spec;
    std::vector<oracle::ToyNode> oracle_nodes;
    std::vector<SemanticMatch> matches;
};

inline RandomToy random_toy(std::mt19937_64& rng, std::size_t n_chunks, std::size_t n_nodes) {
    RandomToy t;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t c = 0; c < n_chunks; ++c) {
        t.spec.chunk_len.push_back(3 + static_cast<unsigned>(rng() % 10));
    }
    for (std::size_t i = 0; i < n_nodes; ++i) {
        ToySpec::Node n{"tok" + std::to_string(i), axis(i), {}};
        const std::size_t spread = 1 + rng() % 5;
        for (std::size_t k = 0; k < spread; ++k) {
            n.freq[static_cast<unsigned>(rng() % n_chunks)] = 1 + static_cast<unsigned>(rng() % 4);
        }
        const auto level = static_cast<MatchLevel>(rng() % 3);
        const double sim = u(rng);
        t.matches.push_back({SemId(static_cast<std::uint32_t>(i)), level, sim, "q"});
        t.oracle_nodes.push_back({n.freq, alpha_for(level, QueryConfig{}), sim});
        t.spec.nodes.push_back(std::move(n));
    }
    return t;
}

/// Unit vector with a fixed random direction per seed.
inline Embedding random_unit(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> v(dim);
    for (auto& x : v) {
        x = nd(rng);
    }
    return normalized(std::span<const double>(v));
}

} // namespace litesem::testkit
