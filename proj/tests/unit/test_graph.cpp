#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "litesem/litesem.hpp"
#include "support/fixtures.hpp"

using namespace litesem;

namespace {

std::vector<TermOccurrence> n_terms(unsigned n) {
    std::vector<TermOccurrence> out;
    for (unsigned i = 0; i < n; ++i) {
        out.push_back({"t" + std::to_string(i), {i, i + 1}, {}, false});
    }
    return out;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("litesem_graph_" + name);
}

} // namespace

TEST(Graph, InsertChunkEchoesLength) {
    SemanticGraph g;
    const DocId d = g.add_document("d1", "");
    const ChunkId c = g.insert_chunk(d, "the cat sat", n_terms(3));
    EXPECT_EQ(c.value, 0U);
    EXPECT_EQ(g.chunk(c).length_terms, 3U);
    EXPECT_EQ(g.document(d).chunks, std::vector<ChunkId>{c});
}

TEST(Graph, AverageChunkLength) {
    SemanticGraph g;
    const DocId d = g.add_document("d1", "");
    g.insert_chunk(d, "a b", n_terms(2));
    g.insert_chunk(d, "a b c d", n_terms(4));
    EXPECT_DOUBLE_EQ(g.stats().avg_chunk_len, 3.0);
    EXPECT_EQ(g.stats().chunk_count, 2U);
}

TEST(Graph, InsertChunkErrors) {
    SemanticGraph g;
    try {
        g.insert_chunk(DocId(7), "x", n_terms(1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotFound);
    }
    const DocId d = g.add_document("d1", "");
    try {
        g.insert_chunk(d, "", {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyChunk);
    }
}

TEST(Graph, DuplicateDocumentKeyRejected) {
    SemanticGraph g;
    g.add_document("d1", "");
    EXPECT_THROW(g.add_document("d1", ""), Error);
}

TEST(Graph, AttachSemanticNode) {
    SemanticGraph g(8);
    const DocId d = g.add_document("d1", "");
    const ChunkId c = g.insert_chunk(d, "apple", n_terms(1));
    const TokenId t = g.ensure_token("apple");
    const std::pair<ChunkId, std::uint32_t> members[] = {{c, 2}};
    const SemId s = g.attach_semantic_node(t, testkit::axis(0), members, 0.3);
    EXPECT_EQ(g.semantic(s).chunk_freq.at(c), 2U);
    EXPECT_EQ(g.semantic(s).member_count, 2U);
    EXPECT_EQ(g.chunk(c).semantics, std::vector<SemId>{s});

    g.attach_semantic_node(t, testkit::axis(1), members, 0.3);
    EXPECT_EQ(g.token(t).semantic_ids.size(), 2U);
    EXPECT_NO_THROW(g.check_invariants());
}

TEST(Graph, AttachRejectsBadInput) {
    SemanticGraph g(8);
    const DocId d = g.add_document("d1", "");
    const ChunkId c = g.insert_chunk(d, "apple", n_terms(1));
    const TokenId t = g.ensure_token("apple");
    const std::pair<ChunkId, std::uint32_t> members[] = {{c, 1}};

    auto half = testkit::axis(0);
    half[0] = 0.5F;
    try {
        g.attach_semantic_node(t, half, members, 0.3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidAnchor);
    }
    const std::pair<ChunkId, std::uint32_t> ghost[] = {{ChunkId(9), 1}};
    try {
        g.attach_semantic_node(t, testkit::axis(0), ghost, 0.3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotFound);
    }
    EXPECT_THROW(g.attach_semantic_node(t, testkit::axis(0), {}, 0.3), Error);
    try {
        g.attach_semantic_node(t, testkit::axis(0, 16), members, 0.3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
}

TEST(Graph, AbsorbMemberKeepsAnchorForEqualVector) {
    SemanticGraph g(8);
    const DocId d = g.add_document("d1", "");
    const ChunkId c0 = g.insert_chunk(d, "a", n_terms(1));
    const ChunkId c1 = g.insert_chunk(d, "b", n_terms(1));
    const TokenId t = g.ensure_token("apple");
    const std::pair<ChunkId, std::uint32_t> members[] = {{c0, 1}};
    const SemId s = g.attach_semantic_node(t, testkit::axis(2), members, 0.3);
    const auto before = g.semantic(s).anchor;
    g.absorb_member(s, c1, before);
    for (std::size_t i = 0; i < before.size(); ++i) {
        EXPECT_NEAR(g.semantic(s).anchor[i], before[i], 1e-6);
    }
    EXPECT_EQ(g.semantic(s).member_count, 2U);
    EXPECT_EQ(g.chunk(c1).semantics, std::vector<SemId>{s});
}

TEST(Graph, EdgesAreLayered) {
    const auto corpus = testkit::make_planted_corpus();
    SyntheticProvider provider;
    const auto build = build_index(std::span(corpus.docs.data(), 10), testkit::planted_indexer(), provider);
    const auto& g = build.graph;
    ASSERT_FALSE(g.semantics().empty());
    for (const auto& e : g.edges()) {
        const bool ok = (e.from_kind == NodeKind::Document && e.to_kind == NodeKind::Chunk) ||
                        (e.from_kind == NodeKind::Chunk && e.to_kind == NodeKind::Semantic) ||
                        (e.from_kind == NodeKind::Semantic && e.to_kind == NodeKind::Token);
        EXPECT_TRUE(ok);
    }
    for (const auto& s : g.semantics()) {
        EXPECT_NEAR(l2_norm(s.anchor), 1.0, 1e-6);
    }
    double sum = 0.0;
    for (const auto& c : g.chunks()) {
        sum += c.length_terms;
    }
    EXPECT_NEAR(g.stats().avg_chunk_len, sum / static_cast<double>(g.chunks().size()), 1e-9);
    EXPECT_NO_THROW(g.check_invariants());
}

TEST(Persistence, EmptyGraphRoundTrips) {
    SemanticGraph g;
    EXPECT_EQ(deserialize_index(serialize_index(g)), g);
}

TEST(Persistence, BuiltIndexRoundTrips) {
    // 3 docs of 15, 15 and 20 distinct terms, chunk_size 5 => 10 chunks, 50 tokens.
    auto words = [](int from, int to) {
        std::string out;
        for (int i = from; i < to; ++i) {
            out += "term" + std::to_string(i) + " ";
        }
        return out;
    };
    std::vector<CorpusDocument> docs = {
        {"a", "", words(0, 15), 0},
        {"b", "", words(15, 30), 0},
        {"c", "", words(30, 50), 0},
    };
    IndexerConfig cfg;
    cfg.chunking.chunk_size = 5;
    cfg.induction.tau_idf = 0.0;
    SyntheticProvider provider;
    const auto build = build_index(docs, cfg, provider);
    ASSERT_EQ(build.graph.chunks().size(), 10U);
    EXPECT_GE(build.graph.semantics().size(), 40U);

    const auto path = temp_file("roundtrip.idx");
    save_index(build.graph, path);
    const auto loaded = load_index(path);
    EXPECT_EQ(loaded, build.graph);
    EXPECT_EQ(loaded.stats(), build.graph.stats());
    for (std::size_t i = 0; i < loaded.semantics().size(); ++i) {
        EXPECT_EQ(loaded.semantics()[i].anchor, build.graph.semantics()[i].anchor);
    }
    std::filesystem::remove(path);
}

TEST(Persistence, AnomalySetsRoundTrip) {
    SemanticGraph g(8);
    const DocId d = g.add_document("d1", "");
    const ChunkId c = g.insert_chunk(d, "apple", n_terms(1));
    const TokenId t = g.ensure_token("apple");
    const std::pair<ChunkId, std::uint32_t> members[] = {{c, 1}};
    g.attach_semantic_node(t, testkit::axis(0), members, 0.5);
    g.anomaly_set(t).pending.push_back({testkit::axis(3), c});
    const auto loaded = deserialize_index(serialize_index(g));
    ASSERT_NE(loaded.find_anomaly_set(t), nullptr);
    EXPECT_EQ(loaded.find_anomaly_set(t)->pending.size(), 1U);
    EXPECT_EQ(loaded, g);
}

TEST(Persistence, FlippedMagicIsCorrupt) {
    SemanticGraph g;
    g.add_document("d", "");
    auto bytes = serialize_index(g);
    bytes[0] = static_cast<char>(bytes[0] ^ 0xFF);
    try {
        deserialize_index(bytes);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IndexCorrupt);
    }
}

TEST(Persistence, TruncatedFileReportsOffset) {
    const auto corpus = testkit::make_planted_corpus();
    SyntheticProvider provider;
    const auto build = build_index(std::span(corpus.docs.data(), 4), IndexerConfig{}, provider);
    const auto bytes = serialize_index(build.graph);
    try {
        deserialize_index(std::string_view(bytes).substr(0, bytes.size() / 2));
        FAIL();
    } catch (const IndexCorruptError& e) {
        EXPECT_LE(e.offset(), bytes.size());
        EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
    }
}

TEST(Persistence, VersionMismatch) {
    SemanticGraph g;
    auto bytes = serialize_index(g);
    bytes[kIndexMagic.size()] = static_cast<char>(kIndexVersion + 1);
    try {
        deserialize_index(bytes);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::VersionMismatch);
    }
}

TEST(Persistence, MissingFileIsNotFound) {
    try {
        load_index(temp_file("does_not_exist.idx"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotFound);
    }
}
