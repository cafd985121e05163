#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "litesem/clustering.hpp"
#include "litesem/dispersion.hpp"
#include "litesem/error.hpp"
#include "litesem/graph.hpp"
#include "litesem/ids.hpp"
#include "litesem/term.hpp"
#include "litesem/vector_math.hpp"

namespace litesem {

struct InductionConfig {
    double tau_idf = 1.0;
    double tau_disp = 0.85;
    std::uint32_t min_cluster_size = 3;
    double anomaly_percentile = 5.0;
    std::uint32_t anomaly_set_capacity = 16;
    double aggregation_noise_threshold = 0.3;
    double cluster_tightness = 0.7;  // max cluster dispersion as a fraction of the whole set's

    void validate() const {
        if (tau_idf < 0.0) {
            throw Error(ErrorCode::InvalidConfig, "tau_idf must be >= 0");
        }
        if (tau_disp < -1.0 || tau_disp > 1.0) {
            throw Error(ErrorCode::InvalidConfig, "tau_disp must lie in [-1, 1]");
        }
        if (min_cluster_size < 2) {
            throw Error(ErrorCode::InvalidConfig, "min_cluster_size must be >= 2");
        }
        if (!(anomaly_percentile > 0.0 && anomaly_percentile < 100.0)) {
            throw Error(ErrorCode::InvalidConfig, "anomaly_percentile must lie in (0, 100)");
        }
        if (anomaly_set_capacity < 1) {
            throw Error(ErrorCode::InvalidConfig, "anomaly_set_capacity must be >= 1");
        }
        if (!(cluster_tightness > 0.0 && cluster_tightness <= 1.0)) {
            throw Error(ErrorCode::InvalidConfig, "cluster_tightness must lie in (0, 1]");
        }
        if (aggregation_noise_threshold < 0.0 || aggregation_noise_threshold > 1.0) {
            throw Error(ErrorCode::InvalidConfig, "aggregation_noise_threshold must lie in [0, 1]");
        }
    }
};

struct BatchItem {
    Embedding embedding;
    ChunkId chunk;
    TextSpan span;
};

/// All contextual embeddings collected for one token.
struct EmbeddingBatch {
    TokenId token;
    std::vector<BatchItem> items;
};

/// Counters emitted by induction and anomaly handling; merged across tokens.
struct InductionStats {
    std::uint64_t tokens = 0;
    std::uint64_t gated_in = 0;               // passed the idf / dispersion gate
    std::uint64_t raw_degenerate = 0;         // raw clustering gave no usable structure
    std::uint64_t raw_all_noise = 0;          // ... because every point was noise
    std::uint64_t aggregation_fallbacks = 0;  // chunk-level re-clustering performed
    std::uint64_t multi_sense_tokens = 0;
    std::uint64_t assigned = 0;
    std::uint64_t quarantined = 0;
    std::uint64_t reclusters = 0;
    std::uint64_t recluster_new_nodes = 0;
    std::uint64_t recluster_absorbed = 0;

    InductionStats& operator+=(const InductionStats& o) {
        tokens += o.tokens;
        gated_in += o.gated_in;
        raw_degenerate += o.raw_degenerate;
        raw_all_noise += o.raw_all_noise;
        aggregation_fallbacks += o.aggregation_fallbacks;
        multi_sense_tokens += o.multi_sense_tokens;
        assigned += o.assigned;
        quarantined += o.quarantined;
        reclusters += o.reclusters;
        recluster_new_nodes += o.recluster_new_nodes;
        recluster_absorbed += o.recluster_absorbed;
        return *this;
    }

    [[nodiscard]] nlohmann::json to_json() const {
        return {{"event", "induction_stats"},
                {"tokens", tokens},
                {"gated_in", gated_in},
                {"raw_degenerate", raw_degenerate},
                {"raw_all_noise", raw_all_noise},
                {"aggregation_fallbacks", aggregation_fallbacks},
                {"multi_sense_tokens", multi_sense_tokens},
                {"assigned", assigned},
                {"quarantined", quarantined},
                {"reclusters", reclusters},
                {"recluster_new_nodes", recluster_new_nodes},
                {"recluster_absorbed", recluster_absorbed}};
    }
};

/// A semantic node ready to attach: raw embeddings are already folded into anchor and tau.
struct InducedNode {
    Embedding anchor;
    std::map<ChunkId, std::uint32_t> chunks;
    std::uint32_t member_count = 0;
    double tau_anomaly = 0.0;
};

inline bool should_induce(double idf, double smean, const InductionConfig& cfg) noexcept {
    return idf > cfg.tau_idf && smean < cfg.tau_disp;
}

struct ChunkMean {
    Embedding embedding;
    ChunkId chunk;
    std::uint32_t count = 0;
};

/// One re-normalized mean embedding per distinct chunk, ascending chunk id.
inline std::vector<ChunkMean> aggregate_by_chunk(const EmbeddingBatch& batch) {
    if (batch.items.empty()) {
        throw Error(ErrorCode::EmptyInput, "empty embedding batch");
    }
    std::map<ChunkId, std::vector<const Embedding*>> by_chunk;
    for (const auto& item : batch.items) {
        by_chunk[item.chunk].push_back(&item.embedding);
    }
    const std::size_t dim = batch.items.front().embedding.size();
    std::vector<ChunkMean> out;
    out.reserve(by_chunk.size());
    for (const auto& [chunk, members] : by_chunk) {
        std::vector<double> mean(dim, 0.0);
        for (const auto* e : members) {
            for (std::size_t i = 0; i < dim; ++i) {
                mean[i] += static_cast<double>((*e)[i]);
            }
        }
        for (double& x : mean) {
            x /= static_cast<double>(members.size());
        }
        out.push_back({normalized(std::span<const double>(mean)), chunk, static_cast<std::uint32_t>(members.size())});
    }
    return out;
}

namespace detail {

inline bool degenerate(const ClusterResult& r, const InductionConfig& cfg) {
    return r.cluster_count == 0 || (r.cluster_count == 1 && r.noise_fraction() > cfg.aggregation_noise_threshold);
}

/// Anchor, chunk map and percentile threshold for one group of batch items.
inline InducedNode fold_members(std::span<const BatchItem> items, std::span<const std::size_t> members,
                                const InductionConfig& cfg) {
    const std::size_t dim = items.front().embedding.size();
    std::vector<double> mean(dim, 0.0);
    InducedNode node;
    for (auto idx : members) {
        const auto& e = items[idx].embedding;
        for (std::size_t i = 0; i < dim; ++i) {
            mean[i] += static_cast<double>(e[i]);
        }
        node.chunks[items[idx].chunk] += 1;
    }
    node.anchor = normalized(std::span<const double>(mean));
    if (l2_norm(node.anchor) <= 0.0) {
        // Members cancel out exactly; fall back to the first member's direction.
        node.anchor = normalized(std::span<const float>(items[members.front()].embedding));
    }
    std::vector<double> sims;
    sims.reserve(members.size());
    for (auto idx : members) {
        sims.push_back(cosine(node.anchor, items[idx].embedding));
    }
    node.member_count = static_cast<std::uint32_t>(members.size());
    node.tau_anomaly = nth_percentile(std::move(sims), cfg.anomaly_percentile);
    return node;
}

inline std::size_t nearest_anchor(std::span<const float> e, const std::vector<Embedding>& anchors) {
    std::size_t best = 0;
    double best_sim = -2.0;
    for (std::size_t k = 0; k < anchors.size(); ++k) {
        const double sim = cosine(e, anchors[k]);
        if (sim > best_sim) {
            best_sim = sim;
            best = k;
        }
    }
    return best;
}

} // namespace detail

/// Turns one token's embeddings into semantic nodes: dispersion gate, density clustering,
/// chunk-level aggregation when raw clustering degenerates, noise joins the nearest anchor.
inline std::vector<InducedNode> induce_semantic_nodes(const EmbeddingBatch& batch, double idf,
                                                      const InductionConfig& cfg, InductionStats* stats = nullptr) {
    if (batch.items.empty()) {
        throw Error(ErrorCode::EmptyInput, "empty embedding batch");
    }
    InductionStats local;
    local.tokens = 1;
    const auto& items = batch.items;
    const std::size_t n = items.size();
    std::vector<Embedding> vectors;
    vectors.reserve(n);
    for (const auto& item : items) {
        vectors.push_back(item.embedding);
    }

    std::vector<int> labels(n, kNoise);
    int clusters = 0;
    if (should_induce(idf, s_mean(vectors), cfg)) {
        local.gated_in = 1;
        auto raw = density_cluster(vectors, cfg.min_cluster_size, cfg.tau_disp, cfg.cluster_tightness);
        if (detail::degenerate(raw, cfg)) {
            local.raw_degenerate = 1;
            local.raw_all_noise = raw.cluster_count == 0 ? 1 : 0;
            local.aggregation_fallbacks = 1;
            const auto agg = aggregate_by_chunk(batch);
            std::vector<Embedding> agg_vectors;
            agg_vectors.reserve(agg.size());
            for (const auto& m : agg) {
                agg_vectors.push_back(m.embedding);
            }
            const auto res = density_cluster(agg_vectors, cfg.min_cluster_size, cfg.tau_disp, cfg.cluster_tightness);
            std::map<ChunkId, int> chunk_label;
            for (std::size_t k = 0; k < agg.size(); ++k) {
                chunk_label[agg[k].chunk] = res.labels[k];
            }
            for (std::size_t i = 0; i < n; ++i) {
                labels[i] = chunk_label.at(items[i].chunk);
            }
            clusters = res.cluster_count;
        } else {
            labels = raw.labels;
            clusters = raw.cluster_count;
        }
    }

    std::vector<InducedNode> nodes;
    if (clusters == 0) {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        nodes.push_back(detail::fold_members(items, all, cfg));
    } else {
        std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(clusters));
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] != kNoise) {
                groups[static_cast<std::size_t>(labels[i])].push_back(i);
            }
        }
        std::vector<Embedding> anchors;
        for (const auto& g : groups) {
            anchors.push_back(detail::fold_members(items, g, cfg).anchor);
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] == kNoise) {
                groups[detail::nearest_anchor(items[i].embedding, anchors)].push_back(i);
            }
        }
        for (auto& g : groups) {
            std::sort(g.begin(), g.end());
            nodes.push_back(detail::fold_members(items, g, cfg));
        }
    }
    if (nodes.size() > 1) {
        local.multi_sense_tokens = 1;
    }
    if (stats != nullptr) {
        *stats += local;
    }
    return nodes;
}

/// Attaches induced nodes to the graph in order; returns their ids.
inline std::vector<SemId> attach_induced(SemanticGraph& graph, TokenId token, const std::vector<InducedNode>& nodes) {
    std::vector<SemId> ids;
    ids.reserve(nodes.size());
    for (const auto& node : nodes) {
        std::vector<std::pair<ChunkId, std::uint32_t>> members(node.chunks.begin(), node.chunks.end());
        ids.push_back(graph.attach_semantic_node(token, node.anchor, members, node.tau_anomaly, node.member_count));
    }
    return ids;
}

// ---------------------------------------------------------------------------------------
// Incremental updates

struct ReclusterOutcome {
    std::vector<SemId> created;  // empty means every pending embedding was absorbed

    [[nodiscard]] bool new_node_created() const noexcept { return !created.empty(); }
};

struct AssimilationResult {
    enum class Kind { Assigned, Quarantined } kind = Kind::Assigned;
    SemId sem;                                 // set when Assigned
    std::optional<ReclusterOutcome> recluster;  // set when this call filled the anomaly set
};

/// Clusters the token's anomaly set on its own. Each coherent cluster becomes a new
/// semantic node; leftover embeddings join the nearest anchor of the token family.
/// The anomaly set is empty afterwards.
inline ReclusterOutcome recluster_anomalies(SemanticGraph& graph, TokenId token, const InductionConfig& cfg,
                                            InductionStats* stats = nullptr) {
    auto& set = graph.anomaly_set(token);
    if (set.pending.empty()) {
        throw Error(ErrorCode::InvalidState, "recluster requested on an empty anomaly set");
    }
    if (graph.token(token).semantic_ids.empty()) {
        throw Error(ErrorCode::InvalidState, "token '" + graph.token(token).surface + "' has no semantic nodes");
    }
    std::vector<BatchItem> items;
    std::vector<Embedding> vectors;
    for (auto& p : set.pending) {
        vectors.push_back(p.embedding);
        items.push_back({std::move(p.embedding), p.chunk, {}});
    }
    set.pending.clear();

    const auto res = density_cluster(vectors, cfg.min_cluster_size, cfg.tau_disp, cfg.cluster_tightness);
    ReclusterOutcome outcome;
    std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(res.cluster_count));
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (res.labels[i] != kNoise) {
            groups[static_cast<std::size_t>(res.labels[i])].push_back(i);
        }
    }
    for (const auto& g : groups) {
        const auto node = detail::fold_members(items, g, cfg);
        outcome.created.push_back(attach_induced(graph, token, {node}).front());
    }

    const auto& family = graph.token(token).semantic_ids;
    std::vector<Embedding> anchors;
    std::vector<SemId> ids(family.begin(), family.end());
    for (auto s : ids) {
        anchors.push_back(graph.semantic(s).anchor);
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (res.labels[i] == kNoise) {
            graph.absorb_member(ids[detail::nearest_anchor(items[i].embedding, anchors)], items[i].chunk,
                                items[i].embedding);
        }
    }
    if (stats != nullptr) {
        stats->reclusters += 1;
        stats->recluster_new_nodes += outcome.created.size();
        stats->recluster_absorbed += outcome.created.empty() ? 1 : 0;
    }
    return outcome;
}

/// Routes a new contextual embedding for an already-induced token: joins the most similar
/// node when that similarity reaches the node's threshold, otherwise waits in the anomaly set.
/// Filling the set to capacity triggers a recluster before returning.
inline AssimilationResult assimilate_embedding(SemanticGraph& graph, TokenId token, const Embedding& e_new,
                                               ChunkId chunk, const InductionConfig& cfg,
                                               InductionStats* stats = nullptr) {
    const auto& family = graph.token(token).semantic_ids;
    if (family.empty()) {
        throw Error(ErrorCode::InvalidState,
                    "token '" + graph.token(token).surface + "' has no semantic nodes; induce it first");
    }
    if (chunk.value >= graph.chunks().size()) {
        throw Error(ErrorCode::NotFound, "chunk " + std::to_string(chunk.value));
    }
    SemId best = family.front();
    double best_sim = -2.0;
    for (auto s : family) {
        const double sim = cosine(e_new, graph.semantic(s).anchor);
        if (sim > best_sim) {
            best_sim = sim;
            best = s;
        }
    }
    AssimilationResult result;
    if (best_sim >= graph.semantic(best).tau_anomaly) {
        graph.absorb_member(best, chunk, e_new);
        result.kind = AssimilationResult::Kind::Assigned;
        result.sem = best;
        if (stats != nullptr) {
            stats->assigned += 1;
        }
        return result;
    }
    result.kind = AssimilationResult::Kind::Quarantined;
    auto& set = graph.anomaly_set(token);
    set.pending.push_back({e_new, chunk});
    if (stats != nullptr) {
        stats->quarantined += 1;
    }
    if (set.pending.size() >= cfg.anomaly_set_capacity) {
        result.recluster = recluster_anomalies(graph, token, cfg, stats);
    }
    return result;
}

/// Occurrences held by the token: everything linked to its semantic nodes plus pending anomalies.
inline std::uint64_t token_occurrences(const SemanticGraph& graph, TokenId token) {
    std::uint64_t total = 0;
    for (auto s : graph.token(token).semantic_ids) {
        total += graph.semantic(s).occurrences();
    }
    if (const auto* set = graph.find_anomaly_set(token)) {
        total += set->pending.size();
    }
    return total;
}

} // namespace litesem
