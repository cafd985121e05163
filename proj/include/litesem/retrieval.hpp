#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "litesem/embed.hpp"
#include "litesem/error.hpp"
#include "litesem/graph.hpp"
#include "litesem/text.hpp"
#include "litesem/vector_math.hpp"

namespace litesem {

struct QueryConfig {
    double alpha_exact = 3.0;
    double alpha_partial = 2.0;
    double alpha_similarity = 1.0;
    std::uint32_t top_k_match = 10;
    double k1 = 1.2;
    double b = 0.75;
    double mix_lambda = 0.7;
    std::uint32_t round_robin_k = 1;
    double sim_floor = 0.25;
    double min_edge_weight = 0.0;  // edges need w_ij strictly above this

    void validate() const {
        if (!(alpha_exact > alpha_partial && alpha_partial > alpha_similarity && alpha_similarity > 0.0)) {
            throw Error(ErrorCode::InvalidConfig, "alpha weights must satisfy exact > partial > similarity > 0");
        }
        if (top_k_match < 1) {
            throw Error(ErrorCode::InvalidConfig, "top_k_match must be >= 1");
        }
        if (k1 < 0.0 || b < 0.0 || b > 1.0) {
            throw Error(ErrorCode::InvalidConfig, "BM25 parameters need k1 >= 0 and b in [0, 1]");
        }
        if (mix_lambda < 0.0 || mix_lambda > 1.0) {
            throw Error(ErrorCode::InvalidConfig, "mix_lambda must lie in [0, 1]");
        }
        if (round_robin_k < 1) {
            throw Error(ErrorCode::InvalidConfig, "round_robin_k must be >= 1");
        }
        if (sim_floor < -1.0 || sim_floor > 1.0) {
            throw Error(ErrorCode::InvalidConfig, "sim_floor must lie in [-1, 1]");
        }
        if (min_edge_weight < 0.0 || min_edge_weight >= 1.0) {
            throw Error(ErrorCode::InvalidConfig, "min_edge_weight must lie in [0, 1)");
        }
    }
};

enum class MatchLevel : std::uint8_t { Similarity = 0, Partial = 1, Exact = 2 };

inline std::string_view to_string(MatchLevel level) noexcept {
    switch (level) {
    case MatchLevel::Exact: return "exact";
    case MatchLevel::Partial: return "partial";
    case MatchLevel::Similarity: return "similarity";
    }
    return "?";
}

inline double alpha_for(MatchLevel level, const QueryConfig& cfg) noexcept {
    switch (level) {
    case MatchLevel::Exact: return cfg.alpha_exact;
    case MatchLevel::Partial: return cfg.alpha_partial;
    case MatchLevel::Similarity: return cfg.alpha_similarity;
    }
    return 0.0;
}

struct QueryTerm {
    std::string surface;
    Embedding embedding;
};

struct SemanticMatch {
    SemId sem;
    MatchLevel level = MatchLevel::Similarity;
    double query_sim = 0.0;
    std::string source_term;
};

/// Query-local graph over matched semantic nodes. Edges are keyed (low id, high id).
struct CoocGraph {
    std::vector<SemId> nodes;
    std::map<std::pair<SemId, SemId>, double> edges;

    [[nodiscard]] double weight(SemId a, SemId b) const {
        if (a == b) {
            return 0.0;
        }
        auto it = edges.find(a < b ? std::pair{a, b} : std::pair{b, a});
        return it == edges.end() ? 0.0 : it->second;
    }

    [[nodiscard]] double neighbor_weight_sum(SemId s) const {
        double total = 0.0;
        for (const auto& [key, w] : edges) {
            if (key.first == s || key.second == s) {
                total += w;
            }
        }
        return total;
    }

    [[nodiscard]] bool has_edges(SemId s) const {
        return std::any_of(edges.begin(), edges.end(),
                           [s](const auto& e) { return e.first.first == s || e.first.second == s; });
    }
};

struct ScoredChunk {
    ChunkId chunk;
    double score = 0.0;
};

enum class Stage : std::uint8_t { Cooc, Recovery };

inline std::string_view to_string(Stage stage) noexcept { return stage == Stage::Cooc ? "cooc" : "recovery"; }

struct RankedEntry {
    ChunkId chunk;
    DocId doc;
    double score = 0.0;
    Stage stage = Stage::Cooc;
};

struct RankedResult {
    std::vector<RankedEntry> entries;
};

// ---------------------------------------------------------------------------------------
// Matching

namespace detail {

inline std::pair<SemId, double> best_sense(const SemanticGraph& g, const TokenNode& token,
                                           std::span<const float> query) {
    SemId best = token.semantic_ids.front();
    double best_sim = -2.0;
    for (auto s : token.semantic_ids) {
        const double sim = cosine(query, g.semantic(s).anchor);
        if (sim > best_sim) {
            best_sim = sim;
            best = s;
        }
    }
    return {best, best_sim};
}

inline void keep_top_k(std::vector<SemanticMatch>& v, std::size_t k) {
    std::sort(v.begin(), v.end(), [](const SemanticMatch& a, const SemanticMatch& b) {
        if (a.query_sim != b.query_sim) {
            return a.query_sim > b.query_sim;
        }
        return a.sem < b.sem;
    });
    if (v.size() > k) {
        v.resize(k);
    }
}

} // namespace detail

/// Exact, partial (substring) and similarity matching; a node matched at several levels
/// keeps only its highest level. Output is ordered by semantic id.
inline std::vector<SemanticMatch> match_semantic_nodes(std::span<const QueryTerm> query_terms,
                                                       const SemanticGraph& g, const QueryConfig& cfg) {
    std::map<SemId, SemanticMatch> best;
    auto offer = [&best](SemanticMatch m) {
        auto it = best.find(m.sem);
        if (it == best.end()) {
            best.emplace(m.sem, std::move(m));
            return;
        }
        auto& cur = it->second;
        if (m.level > cur.level || (m.level == cur.level && m.query_sim > cur.query_sim)) {
            cur = std::move(m);
        }
    };

    for (const auto& q : query_terms) {
        if (q.surface.empty()) {
            continue;
        }
        if (auto t = g.find_token(q.surface); t && !g.token(*t).semantic_ids.empty()) {
            auto [sem, sim] = detail::best_sense(g, g.token(*t), q.embedding);
            offer({sem, MatchLevel::Exact, sim, q.surface});
        }

        std::vector<SemanticMatch> partial;
        for (const auto& token : g.tokens()) {
            if (token.semantic_ids.empty() || token.surface == q.surface ||
                token.surface.find(q.surface) == std::string::npos) {
                continue;
            }
            auto [sem, sim] = detail::best_sense(g, token, q.embedding);
            partial.push_back({sem, MatchLevel::Partial, sim, q.surface});
        }
        detail::keep_top_k(partial, cfg.top_k_match);
        for (auto& m : partial) {
            offer(std::move(m));
        }

        std::vector<SemanticMatch> similar;
        for (const auto& s : g.semantics()) {
            const double sim = cosine(q.embedding, s.anchor);
            if (sim >= cfg.sim_floor) {
                similar.push_back({s.id, MatchLevel::Similarity, sim, q.surface});
            }
        }
        detail::keep_top_k(similar, cfg.top_k_match);
        for (auto& m : similar) {
            offer(std::move(m));
        }
    }

    std::vector<SemanticMatch> out;
    out.reserve(best.size());
    for (auto& [sem, m] : best) {
        out.push_back(std::move(m));
    }
    return out;
}

// ---------------------------------------------------------------------------------------
// Co-occurrence weighting and BM25-style scoring

/// |C(i) ∩ C(j)| / sqrt(|C(i)| |C(j)|) over distinct chunk sets.
inline double cooc_weight(SemId a, SemId b, const SemanticGraph& g) {
    const auto& ca = g.semantic(a).chunk_freq;
    const auto& cb = g.semantic(b).chunk_freq;
    if (ca.empty() || cb.empty()) {
        throw Error(ErrorCode::InvalidState, "semantic node without chunks");
    }
    std::size_t shared = 0;
    auto ia = ca.begin();
    auto ib = cb.begin();
    while (ia != ca.end() && ib != cb.end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            ++shared;
            ++ia;
            ++ib;
        }
    }
    return static_cast<double>(shared) /
           std::sqrt(static_cast<double>(ca.size()) * static_cast<double>(cb.size()));
}

struct CoocBuild {
    CoocGraph graph;
    std::vector<SemanticMatch> connected;  // matches with at least one edge
    std::vector<SemanticMatch> isolated;   // matches with none
};

inline CoocBuild build_cooc_graph(std::span<const SemanticMatch> matches, const SemanticGraph& g,
                                  const QueryConfig& cfg = {}) {
    CoocBuild out;
    for (const auto& m : matches) {
        out.graph.nodes.push_back(m.sem);
    }
    std::set<SemId> linked;
    for (std::size_t i = 0; i < matches.size(); ++i) {
        for (std::size_t j = i + 1; j < matches.size(); ++j) {
            const SemId a = matches[i].sem;
            const SemId b = matches[j].sem;
            if (a == b) {
                continue;
            }
            const double w = cooc_weight(a, b, g);
            if (w > cfg.min_edge_weight) {
                out.graph.edges[a < b ? std::pair{a, b} : std::pair{b, a}] = w;
                linked.insert(a);
                linked.insert(b);
            }
        }
    }
    for (const auto& m : matches) {
        (linked.contains(m.sem) ? out.connected : out.isolated).push_back(m);
    }
    return out;
}

/// W(s) = (sum of incident edge weights) * alpha_level(s) * cos(e_q, e_s).
inline double node_weight(const SemanticMatch& s, const CoocGraph& cooc, const QueryConfig& cfg) {
    return cooc.neighbor_weight_sum(s.sem) * alpha_for(s.level, cfg) * s.query_sim;
}

/// G(s): smoothed idf of the node over chunks, n_s = |C(s)|.
inline double semantic_idf(const SemanticNode& s, const SemanticGraph& g) {
    return idf_from_counts(static_cast<double>(g.stats().chunk_count), static_cast<double>(s.chunk_freq.size()));
}

inline double bm25_tf(double f, double chunk_len, double avg_len, const QueryConfig& cfg) {
    return f * (cfg.k1 + 1.0) / (f + cfg.k1 * (1.0 - cfg.b + cfg.b * chunk_len / avg_len));
}

/// Sum over active nodes present in the chunk, each counted once, of W * G * saturated f(s, c).
inline double score_chunk(ChunkId c, std::span<const std::pair<SemId, double>> active, const SemanticGraph& g,
                          const QueryConfig& cfg) {
    const auto& chunk = g.chunk(c);
    const double avg = g.stats().avg_chunk_len;
    if (!(avg > 0.0)) {
        throw Error(ErrorCode::InvalidState, "average chunk length is zero");
    }
    std::set<SemId> seen;
    double score = 0.0;
    for (const auto& [sem, weight] : active) {
        if (!seen.insert(sem).second) {
            continue;
        }
        const auto& node = g.semantic(sem);
        auto it = node.chunk_freq.find(c);
        if (it == node.chunk_freq.end()) {
            continue;
        }
        score += weight * semantic_idf(node, g) *
                 bm25_tf(static_cast<double>(it->second), static_cast<double>(chunk.length_terms), avg, cfg);
    }
    return score;
}

namespace detail {

inline void rank_desc(std::vector<ScoredChunk>& v) {
    std::sort(v.begin(), v.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.chunk < b.chunk;
    });
}

/// Scores every chunk touched by `active` at once.
inline std::vector<ScoredChunk> score_touched(std::span<const std::pair<SemId, double>> active,
                                              const SemanticGraph& g, const QueryConfig& cfg) {
    std::map<ChunkId, double> scores;
    std::set<SemId> seen;
    const double avg = g.stats().avg_chunk_len;
    for (const auto& [sem, weight] : active) {
        if (!seen.insert(sem).second) {
            continue;
        }
        const auto& node = g.semantic(sem);
        const double idf_s = semantic_idf(node, g);
        for (const auto& [c, f] : node.chunk_freq) {
            scores[c] += weight * idf_s *
                         bm25_tf(static_cast<double>(f), static_cast<double>(g.chunk(c).length_terms), avg, cfg);
        }
    }
    std::vector<ScoredChunk> out;
    out.reserve(scores.size());
    for (const auto& [c, s] : scores) {
        out.push_back({c, s});
    }
    rank_desc(out);
    return out;
}

} // namespace detail

/// Node weights for every connected match, in match order.
inline std::vector<std::pair<SemId, double>> connected_weights(const CoocBuild& cooc, const QueryConfig& cfg) {
    std::vector<std::pair<SemId, double>> out;
    out.reserve(cooc.connected.size());
    for (const auto& m : cooc.connected) {
        out.emplace_back(m.sem, node_weight(m, cooc.graph, cfg));
    }
    return out;
}

/// Stage one: chunks linked to co-occurring matched nodes, by BM25-style score
/// (ties on ascending chunk id), truncated to `limit`.
inline std::vector<ScoredChunk> stage1_retrieve(const CoocBuild& cooc, const SemanticGraph& g,
                                                const QueryConfig& cfg, std::size_t limit) {
    if (cooc.connected.empty() || limit == 0) {
        return {};
    }
    const auto active = connected_weights(cooc, cfg);
    auto ranked = detail::score_touched(active, g, cfg);
    if (ranked.size() > limit) {
        ranked.resize(limit);
    }
    return ranked;
}

inline std::vector<ScoredChunk> stage1_retrieve(std::span<const SemanticMatch> matches, const SemanticGraph& g,
                                                const QueryConfig& cfg, std::size_t limit) {
    return stage1_retrieve(build_cooc_graph(matches, g, cfg), g, cfg, limit);
}

/// Ranked isolated node with the weight its chunks are scored with.
struct RecoveryNode {
    SemanticMatch match;
    double propagated = 0.0;  // W_prop(s)
    bool upper = false;
    double rank_score = 0.0;
    double effective_weight = 0.0;
};

/// Upper group (nodes inheriting weight from same-token nodes in the co-occurrence graph)
/// ordered by W_prop * sim, then the Lower group by sim alone.
inline std::vector<RecoveryNode> rank_isolated(const CoocBuild& cooc, const SemanticGraph& g,
                                               const QueryConfig& cfg) {
    const auto weights = connected_weights(cooc, cfg);
    std::vector<RecoveryNode> upper;
    std::vector<RecoveryNode> lower;
    for (const auto& m : cooc.isolated) {
        const TokenId token = g.semantic(m.sem).token;
        double prop = 0.0;
        bool family_present = false;
        for (const auto& [sem, w] : weights) {
            if (g.semantic(sem).token == token) {
                prop += w;
                family_present = true;
            }
        }
        RecoveryNode node{m, prop, family_present && prop > 0.0, 0.0, 0.0};
        if (node.upper) {
            node.rank_score = prop * m.query_sim;
            node.effective_weight = prop;
            upper.push_back(node);
        } else {
            node.rank_score = m.query_sim;
            node.effective_weight = m.query_sim * alpha_for(m.level, cfg);
            lower.push_back(node);
        }
    }
    auto order = [](const RecoveryNode& a, const RecoveryNode& b) {
        if (a.rank_score != b.rank_score) {
            return a.rank_score > b.rank_score;
        }
        return a.match.sem < b.match.sem;
    };
    std::sort(upper.begin(), upper.end(), order);
    std::sort(lower.begin(), lower.end(), order);
    upper.insert(upper.end(), lower.begin(), lower.end());
    return upper;
}

/// Stage two: per ranked isolated node, its chunks by BM25-style score; then round-robin
/// across nodes taking `round_robin_k` unseen chunks per turn until `limit` or exhaustion.
inline std::vector<ScoredChunk> recover_isolated(const CoocBuild& cooc, const SemanticGraph& g,
                                                 const QueryConfig& cfg, std::size_t limit,
                                                 const std::unordered_set<ChunkId>& exclude = {}) {
    std::vector<ScoredChunk> out;
    if (cooc.isolated.empty() || limit == 0) {
        return out;
    }
    const auto nodes = rank_isolated(cooc, g, cfg);
    std::vector<std::vector<ScoredChunk>> lists;
    lists.reserve(nodes.size());
    for (const auto& n : nodes) {
        const std::pair<SemId, double> active[] = {{n.match.sem, n.effective_weight}};
        lists.push_back(detail::score_touched(active, g, cfg));
    }
    std::unordered_set<ChunkId> emitted(exclude);
    std::vector<std::size_t> cursor(lists.size(), 0);
    bool progressed = true;
    while (out.size() < limit && progressed) {
        progressed = false;
        for (std::size_t i = 0; i < lists.size() && out.size() < limit; ++i) {
            std::uint32_t taken = 0;
            while (taken < cfg.round_robin_k && cursor[i] < lists[i].size() && out.size() < limit) {
                const auto& cand = lists[i][cursor[i]++];
                if (emitted.insert(cand.chunk).second) {
                    out.push_back(cand);
                    ++taken;
                    progressed = true;
                }
            }
            if (cursor[i] < lists[i].size()) {
                progressed = true;
            }
        }
    }
    return out;
}

/// Ablation baseline: every chunk linked to any matched node, scored by the best query
/// similarity among the matched nodes it holds (ties on ascending chunk id).
inline std::vector<ScoredChunk> broad_retrieve(std::span<const SemanticMatch> matches, const SemanticGraph& g,
                                               std::size_t limit) {
    std::map<ChunkId, double> best;
    for (const auto& m : matches) {
        for (const auto& [c, f] : g.semantic(m.sem).chunk_freq) {
            auto [it, inserted] = best.try_emplace(c, m.query_sim);
            if (!inserted) {
                it->second = std::max(it->second, m.query_sim);
            }
        }
    }
    std::vector<ScoredChunk> out;
    for (const auto& [c, s] : best) {
        out.push_back({c, s});
    }
    detail::rank_desc(out);
    if (out.size() > limit) {
        out.resize(limit);
    }
    return out;
}

// ---------------------------------------------------------------------------------------
// Full query path

/// Intermediate products of one query, for inspection and tests.
struct QueryTrace {
    std::vector<QueryTerm> terms;
    std::vector<SemanticMatch> matches;
    CoocBuild cooc;
    RankedResult result;
};

/// Stage-one block first (up to ceil(lambda k) slots), recovery after; whichever stage
/// runs short is backfilled from the other. No chunk appears twice.
inline RankedResult merge_stages(std::span<const ScoredChunk> stage1, const CoocBuild& cooc, const SemanticGraph& g,
                                 const QueryConfig& cfg, std::size_t k) {
    const auto target1 =
        std::min<std::size_t>(k, static_cast<std::size_t>(std::ceil(cfg.mix_lambda * static_cast<double>(k) - 1e-9)));
    std::vector<ScoredChunk> take1(stage1.begin(), stage1.begin() + static_cast<std::ptrdiff_t>(
                                                                         std::min(target1, stage1.size())));
    std::unordered_set<ChunkId> taken;
    for (const auto& c : take1) {
        taken.insert(c.chunk);
    }
    auto take2 = recover_isolated(cooc, g, cfg, k - take1.size(), taken);
    for (const auto& c : take2) {
        taken.insert(c.chunk);
    }
    for (std::size_t i = take1.size(); i < stage1.size() && take1.size() + take2.size() < k; ++i) {
        if (!taken.contains(stage1[i].chunk)) {
            taken.insert(stage1[i].chunk);
            take1.push_back(stage1[i]);
        }
    }
    RankedResult result;
    for (const auto& c : take1) {
        result.entries.push_back({c.chunk, g.chunk(c.chunk).doc, c.score, Stage::Cooc});
    }
    for (const auto& c : take2) {
        result.entries.push_back({c.chunk, g.chunk(c.chunk).doc, c.score, Stage::Recovery});
    }
    return result;
}

/// Runs queries against an immutable graph. Safe to share across threads as long as the
/// provider is.
class Retriever {
  public:
    Retriever(const SemanticGraph& graph, EmbeddingProvider& provider, QueryConfig cfg, ChunkingConfig chunking = {})
        : m_graph(graph), m_provider(provider), m_cfg(std::move(cfg)), m_chunking(std::move(chunking)) {
        m_cfg.validate();
    }

    [[nodiscard]] const QueryConfig& config() const noexcept { return m_cfg; }

    /// Query text -> terms with contextual embeddings (one provider call).
    [[nodiscard]] std::vector<QueryTerm> encode(std::string_view query_text) const {
        const auto terms = extract_terms(query_text, m_chunking);
        std::vector<QueryTerm> out;
        if (terms.empty()) {
            return out;
        }
        EmbedRequest req{std::string(query_text), {}};
        for (const auto& t : terms) {
            req.spans.push_back(t.span);
        }
        auto resp = m_provider.embed_spans(req);
        if (m_graph.dim() != 0 && resp.dim != m_graph.dim()) {
            throw Error(ErrorCode::DimensionMismatch, "query embeddings have dim " + std::to_string(resp.dim) +
                                                          ", index has " + std::to_string(m_graph.dim()));
        }
        for (std::size_t i = 0; i < terms.size(); ++i) {
            out.push_back({terms[i].surface, std::move(resp.vectors[i])});
        }
        return out;
    }

    [[nodiscard]] QueryTrace trace(std::string_view query_text, std::size_t k) const {
        if (m_graph.chunks().empty()) {
            throw Error(ErrorCode::EmptyIndex, "index holds no chunks");
        }
        if (k < 1) {
            throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
        }
        QueryTrace t;
        t.terms = encode(query_text);
        t.matches = match_semantic_nodes(t.terms, m_graph, m_cfg);
        t.cooc = build_cooc_graph(t.matches, m_graph, m_cfg);
        const auto stage1 = stage1_retrieve(t.cooc, m_graph, m_cfg, k);
        t.result = merge_stages(stage1, t.cooc, m_graph, m_cfg, k);
        return t;
    }

    [[nodiscard]] RankedResult retrieve(std::string_view query_text, std::size_t k) const {
        return trace(query_text, k).result;
    }

    /// Baseline ranking over the same matches, for ablation runs.
    [[nodiscard]] RankedResult retrieve_broad(std::string_view query_text, std::size_t k) const {
        if (m_graph.chunks().empty()) {
            throw Error(ErrorCode::EmptyIndex, "index holds no chunks");
        }
        const auto terms = encode(query_text);
        const auto matches = match_semantic_nodes(terms, m_graph, m_cfg);
        RankedResult result;
        for (const auto& c : broad_retrieve(matches, m_graph, k)) {
            result.entries.push_back({c.chunk, m_graph.chunk(c.chunk).doc, c.score, Stage::Cooc});
        }
        return result;
    }

  private:
    const SemanticGraph& m_graph;
    EmbeddingProvider& m_provider;
    QueryConfig m_cfg;
    ChunkingConfig m_chunking;
};

} // namespace litesem
