#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "litesem/corpus_stats.hpp"
#include "litesem/error.hpp"
#include "litesem/ids.hpp"
#include "litesem/term.hpp"
#include "litesem/vector_math.hpp"

namespace litesem {

struct DocumentNode {
    DocId id;
    std::string key;  // external, corpus-supplied identifier
    std::string title;
    std::uint64_t source_offset = 0;
    std::vector<ChunkId> chunks;

    bool operator==(const DocumentNode&) const = default;
};

struct ChunkNode {
    ChunkId id;
    DocId doc;
    std::string text;
    std::uint32_t length_terms = 0;
    std::vector<SemId> semantics;  // Chunk-Semantic adjacency, ascending

    bool operator==(const ChunkNode&) const = default;
};

/// Lexical anchor for one normalized surface form. Carries no embedding.
struct TokenNode {
    TokenId id;
    std::string surface;
    double idf = 0.0;
    std::vector<SemId> semantic_ids;

    bool operator==(const TokenNode&) const = default;
};

/// One context-dependent meaning of a token.
struct SemanticNode {
    SemId id;
    TokenId token;
    Embedding anchor;
    std::uint32_t member_count = 0;
    double tau_anomaly = 0.0;
    std::map<ChunkId, std::uint32_t> chunk_freq;

    [[nodiscard]] std::uint64_t occurrences() const noexcept {
        std::uint64_t total = 0;
        for (const auto& [chunk, count] : chunk_freq) {
            total += count;
        }
        return total;
    }

    bool operator==(const SemanticNode&) const = default;
};

/// A quarantined contextual embedding waiting for the token's next recluster.
struct PendingEmbedding {
    Embedding embedding;
    ChunkId chunk;

    bool operator==(const PendingEmbedding&) const = default;
};

struct AnomalySet {
    TokenId token;
    std::vector<PendingEmbedding> pending;

    bool operator==(const AnomalySet&) const = default;
};

enum class NodeKind : std::uint8_t { Document, Chunk, Semantic, Token };

/// Edge endpoints as (kind, dense id). Produced by SemanticGraph::edges() for inspection.
struct EdgeRef {
    NodeKind from_kind;
    std::uint32_t from;
    NodeKind to_kind;
    std::uint32_t to;
};

/// Four-layer heterogeneous graph: documents, chunks, semantic nodes and token nodes,
/// joined only by Document-Chunk, Chunk-Semantic and Semantic-Token edges.
///
/// Edges are stored as adjacency on both endpoints. Ids are dense and assigned in
/// insertion order, so a node's id is its position in the owning vector.
class SemanticGraph {
  public:
    static constexpr double kAnchorTolerance = 1e-4;

    SemanticGraph() = default;
    explicit SemanticGraph(std::uint32_t dim) : m_dim(dim) {}

    [[nodiscard]] std::uint32_t dim() const noexcept { return m_dim; }
    void set_dim(std::uint32_t dim) {
        if (!m_semantics.empty() && dim != m_dim) {
            throw Error(ErrorCode::DimensionMismatch, "graph already holds anchors of dim " + std::to_string(m_dim));
        }
        m_dim = dim;
    }

    DocId add_document(std::string key, std::string title, std::uint64_t source_offset = 0) {
        if (m_doc_by_key.contains(key)) {
            throw Error(ErrorCode::InvalidState, "duplicate document id '" + key + "'");
        }
        DocId id(static_cast<std::uint32_t>(m_documents.size()));
        m_doc_by_key.emplace(key, id);
        m_documents.push_back(DocumentNode{id, std::move(key), std::move(title), source_offset, {}});
        return id;
    }

    ChunkId insert_chunk(DocId doc, std::string text, std::span<const TermOccurrence> terms) {
        if (doc.value >= m_documents.size()) {
            throw Error(ErrorCode::NotFound, "document " + std::to_string(doc.value));
        }
        if (text.empty()) {
            throw Error(ErrorCode::EmptyChunk, "chunk text is empty");
        }
        ChunkId id(static_cast<std::uint32_t>(m_chunks.size()));
        m_chunks.push_back(ChunkNode{id, doc, std::move(text), static_cast<std::uint32_t>(terms.size()), {}});
        m_documents[doc.value].chunks.push_back(id);

        std::set<std::string_view> distinct;
        for (const auto& t : terms) {
            distinct.insert(t.surface);
        }
        for (auto surface : distinct) {
            ++m_stats.df[std::string(surface)];
        }
        m_stats.add_chunk(terms.size());
        return id;
    }

    TokenId ensure_token(const std::string& surface) {
        if (auto it = m_token_by_surface.find(surface); it != m_token_by_surface.end()) {
            return it->second;
        }
        TokenId id(static_cast<std::uint32_t>(m_tokens.size()));
        m_token_by_surface.emplace(surface, id);
        m_tokens.push_back(TokenNode{id, surface, 0.0, {}});
        return id;
    }

    void set_token_idf(TokenId token, double idf) { token_mut(token).idf = idf; }

    /// Stores a semantic node for `token`, linking it to every member chunk.
    /// The anchor must already be unit-norm (within 1e-4); it is re-normalized on store.
    SemId attach_semantic_node(TokenId token, const Embedding& anchor,
                               std::span<const std::pair<ChunkId, std::uint32_t>> members, double tau,
                               std::uint32_t member_count = 0) {
        if (token.value >= m_tokens.size()) {
            throw Error(ErrorCode::NotFound, "token " + std::to_string(token.value));
        }
        if (members.empty()) {
            throw Error(ErrorCode::EmptyInput, "semantic node needs at least one member chunk");
        }
        const double norm = l2_norm(anchor);
        if (std::abs(norm - 1.0) > kAnchorTolerance) {
            throw Error(ErrorCode::InvalidAnchor, "anchor norm " + std::to_string(norm));
        }
        if (m_dim == 0) {
            m_dim = static_cast<std::uint32_t>(anchor.size());
        } else if (anchor.size() != m_dim) {
            throw Error(ErrorCode::DimensionMismatch,
                        "anchor dim " + std::to_string(anchor.size()) + " != " + std::to_string(m_dim));
        }
        for (const auto& [chunk, count] : members) {
            if (chunk.value >= m_chunks.size()) {
                throw Error(ErrorCode::NotFound, "chunk " + std::to_string(chunk.value));
            }
        }

        SemId id(static_cast<std::uint32_t>(m_semantics.size()));
        SemanticNode node{id, token, normalized(std::span<const float>(anchor)), 0, tau, {}};
        std::uint64_t total = 0;
        for (const auto& [chunk, count] : members) {
            node.chunk_freq[chunk] += count;
            total += count;
        }
        node.member_count = member_count > 0 ? member_count : static_cast<std::uint32_t>(total);
        for (const auto& [chunk, count] : node.chunk_freq) {
            m_chunks[chunk.value].semantics.push_back(id);  // ids grow, so adjacency stays sorted
        }
        m_tokens[token.value].semantic_ids.push_back(id);
        m_semantics.push_back(std::move(node));
        return id;
    }

    /// Folds one more contextual embedding into an existing node: bumps f(s, c) and the
    /// member count, moves the anchor by running mean, then re-normalizes.
    void absorb_member(SemId sem, ChunkId chunk, std::span<const float> embedding) {
        if (chunk.value >= m_chunks.size()) {
            throw Error(ErrorCode::NotFound, "chunk " + std::to_string(chunk.value));
        }
        auto& node = semantic_mut(sem);
        const double m = node.member_count;
        std::vector<double> mean(node.anchor.size());
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] = (static_cast<double>(node.anchor[i]) * m + static_cast<double>(embedding[i])) / (m + 1.0);
        }
        Embedding updated = normalized(std::span<const double>(mean));
        if (l2_norm(updated) > 0.0) {
            node.anchor = std::move(updated);
        }
        node.member_count += 1;
        auto [it, inserted] = node.chunk_freq.try_emplace(chunk, 0U);
        it->second += 1;
        if (inserted) {
            auto& adj = m_chunks[chunk.value].semantics;
            adj.insert(std::lower_bound(adj.begin(), adj.end(), sem), sem);
        }
    }

    AnomalySet& anomaly_set(TokenId token) {
        auto [it, inserted] = m_anomalies.try_emplace(token);
        if (inserted) {
            it->second.token = token;
        }
        return it->second;
    }

    [[nodiscard]] const AnomalySet* find_anomaly_set(TokenId token) const {
        auto it = m_anomalies.find(token);
        return it == m_anomalies.end() ? nullptr : &it->second;
    }

    [[nodiscard]] const std::map<TokenId, AnomalySet>& anomaly_sets() const noexcept { return m_anomalies; }

    // --- read access -------------------------------------------------------------------

    [[nodiscard]] const std::vector<DocumentNode>& documents() const noexcept { return m_documents; }
    [[nodiscard]] const std::vector<ChunkNode>& chunks() const noexcept { return m_chunks; }
    [[nodiscard]] const std::vector<TokenNode>& tokens() const noexcept { return m_tokens; }
    [[nodiscard]] const std::vector<SemanticNode>& semantics() const noexcept { return m_semantics; }
    [[nodiscard]] const CorpusStats& stats() const noexcept { return m_stats; }

    [[nodiscard]] const DocumentNode& document(DocId id) const {
        if (id.value >= m_documents.size()) {
            throw Error(ErrorCode::NotFound, "document " + std::to_string(id.value));
        }
        return m_documents[id.value];
    }
    [[nodiscard]] const ChunkNode& chunk(ChunkId id) const {
        if (id.value >= m_chunks.size()) {
            throw Error(ErrorCode::NotFound, "chunk " + std::to_string(id.value));
        }
        return m_chunks[id.value];
    }
    [[nodiscard]] const TokenNode& token(TokenId id) const {
        if (id.value >= m_tokens.size()) {
            throw Error(ErrorCode::NotFound, "token " + std::to_string(id.value));
        }
        return m_tokens[id.value];
    }
    [[nodiscard]] const SemanticNode& semantic(SemId id) const {
        if (id.value >= m_semantics.size()) {
            throw Error(ErrorCode::NotFound, "semantic node " + std::to_string(id.value));
        }
        return m_semantics[id.value];
    }

    [[nodiscard]] std::optional<DocId> find_document(const std::string& key) const {
        auto it = m_doc_by_key.find(key);
        if (it == m_doc_by_key.end()) {
            return std::nullopt;
        }
        return it->second;
    }
    [[nodiscard]] std::optional<TokenId> find_token(const std::string& surface) const {
        auto it = m_token_by_surface.find(surface);
        if (it == m_token_by_surface.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] bool empty() const noexcept { return m_documents.empty() && m_chunks.empty(); }

    /// All edges, each reported once from its upper-layer endpoint.
    [[nodiscard]] std::vector<EdgeRef> edges() const {
        std::vector<EdgeRef> out;
        for (const auto& d : m_documents) {
            for (auto c : d.chunks) {
                out.push_back({NodeKind::Document, d.id.value, NodeKind::Chunk, c.value});
            }
        }
        for (const auto& c : m_chunks) {
            for (auto s : c.semantics) {
                out.push_back({NodeKind::Chunk, c.id.value, NodeKind::Semantic, s.value});
            }
        }
        for (const auto& s : m_semantics) {
            out.push_back({NodeKind::Semantic, s.id.value, NodeKind::Token, s.token.value});
        }
        return out;
    }

    /// Verifies layering, ownership, adjacency symmetry, anchor norms and stats.
    /// Throws InvalidState describing the first violation.
    void check_invariants(double anchor_tolerance = 1e-6) const {
        auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidState, what); };

        for (const auto& d : m_documents) {
            for (auto c : d.chunks) {
                if (c.value >= m_chunks.size() || m_chunks[c.value].doc != d.id) {
                    fail("document " + d.key + " lists chunk " + std::to_string(c.value) + " it does not own");
                }
            }
        }
        std::uint64_t total_len = 0;
        for (const auto& c : m_chunks) {
            if (c.doc.value >= m_documents.size()) {
                fail("chunk " + std::to_string(c.id.value) + " has no document");
            }
            const auto& owner = m_documents[c.doc.value].chunks;
            if (std::count(owner.begin(), owner.end(), c.id) != 1) {
                fail("chunk " + std::to_string(c.id.value) + " must appear exactly once under its document");
            }
            total_len += c.length_terms;
            for (auto s : c.semantics) {
                if (s.value >= m_semantics.size() || !m_semantics[s.value].chunk_freq.contains(c.id)) {
                    fail("chunk " + std::to_string(c.id.value) + " links semantic " + std::to_string(s.value) +
                         " without a reverse edge");
                }
            }
        }
        for (const auto& s : m_semantics) {
            if (s.token.value >= m_tokens.size()) {
                fail("semantic " + std::to_string(s.id.value) + " has no token");
            }
            const auto& fam = m_tokens[s.token.value].semantic_ids;
            if (std::count(fam.begin(), fam.end(), s.id) != 1) {
                fail("semantic " + std::to_string(s.id.value) + " missing from its token family");
            }
            if (std::abs(l2_norm(s.anchor) - 1.0) > anchor_tolerance) {
                fail("semantic " + std::to_string(s.id.value) + " anchor is not unit-norm");
            }
            if (s.member_count < 1 || s.chunk_freq.empty()) {
                fail("semantic " + std::to_string(s.id.value) + " has no members");
            }
            for (const auto& [c, f] : s.chunk_freq) {
                if (c.value >= m_chunks.size() || f == 0) {
                    fail("semantic " + std::to_string(s.id.value) + " has an invalid chunk frequency entry");
                }
                const auto& adj = m_chunks[c.value].semantics;
                if (!std::binary_search(adj.begin(), adj.end(), s.id)) {
                    fail("semantic " + std::to_string(s.id.value) + " chunk map disagrees with chunk edges");
                }
            }
        }
        for (const auto& t : m_tokens) {
            for (auto s : t.semantic_ids) {
                if (s.value >= m_semantics.size() || m_semantics[s.value].token != t.id) {
                    fail("token '" + t.surface + "' lists a foreign semantic node");
                }
            }
        }
        if (m_stats.chunk_count != m_chunks.size() || m_stats.total_length != total_len) {
            fail("corpus stats out of sync with stored chunks");
        }
        if (!m_chunks.empty()) {
            const double mean = static_cast<double>(total_len) / static_cast<double>(m_chunks.size());
            if (std::abs(mean - m_stats.avg_chunk_len) > 1e-9) {
                fail("avg_chunk_len drifted from stored lengths");
            }
        }
        for (const auto& [surface, df] : m_stats.df) {
            if (df > m_stats.chunk_count) {
                fail("df of '" + surface + "' exceeds chunk count");
            }
        }
    }

    bool operator==(const SemanticGraph& other) const {
        return m_dim == other.m_dim && m_documents == other.m_documents && m_chunks == other.m_chunks &&
               m_tokens == other.m_tokens && m_semantics == other.m_semantics && m_stats == other.m_stats &&
               m_anomalies == other.m_anomalies;
    }

  private:
    friend class IndexReader;

    TokenNode& token_mut(TokenId id) {
        if (id.value >= m_tokens.size()) {
            throw Error(ErrorCode::NotFound, "token " + std::to_string(id.value));
        }
        return m_tokens[id.value];
    }
    SemanticNode& semantic_mut(SemId id) {
        if (id.value >= m_semantics.size()) {
            throw Error(ErrorCode::NotFound, "semantic node " + std::to_string(id.value));
        }
        return m_semantics[id.value];
    }

    std::uint32_t m_dim = 0;
    std::vector<DocumentNode> m_documents;
    std::vector<ChunkNode> m_chunks;
    std::vector<TokenNode> m_tokens;
    std::vector<SemanticNode> m_semantics;
    CorpusStats m_stats;
    std::map<TokenId, AnomalySet> m_anomalies;
    std::unordered_map<std::string, DocId> m_doc_by_key;
    std::unordered_map<std::string, TokenId> m_token_by_surface;
};

} // namespace litesem
