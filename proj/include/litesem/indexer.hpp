#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "litesem/corpus.hpp"
#include "litesem/embed.hpp"
#include "litesem/error.hpp"
#include "litesem/graph.hpp"
#include "litesem/induction.hpp"
#include "litesem/parallel.hpp"
#include "litesem/text.hpp"
#include "litesem/timing.hpp"

namespace litesem {

struct IndexerConfig {
    ChunkingConfig chunking;
    InductionConfig induction;
    unsigned jobs = 1;
};

struct IndexBuild {
    SemanticGraph graph;
    InductionStats stats;
    std::map<std::string, InductionStats> gated;  // per-token counters, tokens that passed the gate
    std::vector<TimingEvent> timings;              // one Index event per document

    [[nodiscard]] std::size_t multi_sense_tokens() const {
        std::size_t n = 0;
        for (const auto& t : graph.tokens()) {
            n += t.semantic_ids.size() > 1 ? 1 : 0;
        }
        return n;
    }
};

namespace detail {

struct PreparedChunk {
    std::string text;
    std::vector<TermOccurrence> terms;
    std::vector<Embedding> embeddings;
};

struct PreparedDocument {
    std::vector<PreparedChunk> chunks;
    double seconds = 0.0;
};

inline PreparedDocument prepare_document(const CorpusDocument& doc, const ChunkingConfig& chunking,
                                         EmbeddingProvider& provider) {
    Stopwatch watch;
    PreparedDocument out;
    auto texts = split_chunks(doc.text, chunking);
    if (texts.empty() && doc.text.find_first_not_of(" \t\r\n") != std::string::npos) {
        // Only stopwords: keep the document reachable as one term-less chunk.
        texts.push_back(doc.text);
    }
    for (auto& text : texts) {
        PreparedChunk chunk;
        chunk.terms = extract_terms(text, chunking);
        if (!chunk.terms.empty()) {
            EmbedRequest req{text, {}};
            req.spans.reserve(chunk.terms.size());
            for (const auto& t : chunk.terms) {
                req.spans.push_back(t.span);
            }
            auto resp = provider.embed_spans(req);
            if (resp.vectors.size() != chunk.terms.size()) {
                throw Error(ErrorCode::InvalidState, "provider returned a short response");
            }
            chunk.embeddings = std::move(resp.vectors);
        }
        chunk.text = std::move(text);
        out.chunks.push_back(std::move(chunk));
    }
    out.seconds = watch.seconds();
    return out;
}

} // namespace detail

/// Builds the full semantic graph: chunk, extract, embed (parallel per document), then
/// insert in corpus order and induce semantic nodes token by token (parallel per token).
/// Output depends only on the corpus, the config and the provider, never on `jobs`.
inline IndexBuild build_index(std::span<const CorpusDocument> corpus, const IndexerConfig& cfg,
                              EmbeddingProvider& provider) {
    cfg.chunking.validate();
    cfg.induction.validate();

    std::vector<detail::PreparedDocument> prepared(corpus.size());
    parallel_for(corpus.size(), cfg.jobs, [&](std::size_t i) {
        prepared[i] = detail::prepare_document(corpus[i], cfg.chunking, provider);
    });

    Stopwatch assemble;
    IndexBuild build;
    auto& g = build.graph;
    std::vector<EmbeddingBatch> batches;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& doc = corpus[i];
        const DocId d = g.add_document(doc.key, doc.title, doc.source_offset);
        for (auto& chunk : prepared[i].chunks) {
            const ChunkId c = g.insert_chunk(d, chunk.text, chunk.terms);
            for (std::size_t k = 0; k < chunk.terms.size(); ++k) {
                const TokenId t = g.ensure_token(chunk.terms[k].surface);
                if (t.value >= batches.size()) {
                    batches.resize(t.value + 1);
                    batches[t.value].token = t;
                }
                if (g.dim() == 0) {
                    g.set_dim(static_cast<std::uint32_t>(chunk.embeddings[k].size()));
                } else if (chunk.embeddings[k].size() != g.dim()) {
                    throw Error(ErrorCode::DimensionMismatch, "embedding width changed during indexing");
                }
                batches[t.value].items.push_back({std::move(chunk.embeddings[k]), c, chunk.terms[k].span});
            }
        }
        prepared[i].chunks.clear();
    }

    std::vector<std::vector<InducedNode>> induced(batches.size());
    std::vector<InductionStats> token_stats(batches.size());
    for (const auto& b : batches) {
        g.set_token_idf(b.token, idf(g.token(b.token).surface, g.stats()));
    }
    parallel_for(batches.size(), cfg.jobs, [&](std::size_t t) {
        induced[t] = induce_semantic_nodes(batches[t], g.token(batches[t].token).idf, cfg.induction, &token_stats[t]);
    });
    for (std::size_t t = 0; t < batches.size(); ++t) {
        attach_induced(g, batches[t].token, induced[t]);
        build.stats += token_stats[t];
        if (token_stats[t].gated_in > 0) {
            build.gated.emplace(g.token(batches[t].token).surface, token_stats[t]);
        }
    }

    const double shared = corpus.empty() ? 0.0 : assemble.seconds() / static_cast<double>(corpus.size());
    build.timings.reserve(corpus.size());
    for (const auto& p : prepared) {
        build.timings.push_back({Phase::Index, p.seconds + shared});
    }
    return build;
}

} // namespace litesem
