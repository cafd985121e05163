#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "litesem/error.hpp"
#include "litesem/graph.hpp"

namespace litesem {

// Layout: magic[8] | u32 version | body | u64 FNV-1a of everything before it.
// Integers and IEEE floats are little-endian, fixed width. Anchors are f32.
inline constexpr std::array<char, 8> kIndexMagic = {'L', 'S', 'E', 'M', 'G', 'R', 'P', 'H'};
inline constexpr std::uint32_t kIndexVersion = 1;

namespace detail {

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class ByteWriter {
  public:
    void u8(std::uint8_t v) { m_buf.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            u8(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            u8(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        m_buf.append(s);
    }
    void raw(std::string_view s) { m_buf.append(s); }

    [[nodiscard]] const std::string& bytes() const noexcept { return m_buf; }

  private:
    std::string m_buf;
};

class ByteReader {
  public:
    explicit ByteReader(std::string_view bytes) : m_bytes(bytes) {}

    [[nodiscard]] std::uint64_t offset() const noexcept { return m_pos; }
    [[nodiscard]] std::size_t remaining() const noexcept { return m_bytes.size() - m_pos; }

    std::uint8_t u8() {
        need(1, "u8");
        return static_cast<std::uint8_t>(m_bytes[m_pos++]);
    }
    std::uint32_t u32() {
        need(4, "u32");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(m_bytes[m_pos++])) << (8 * i);
        }
        return v;
    }
    std::uint64_t u64() {
        need(8, "u64");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(m_bytes[m_pos++])) << (8 * i);
        }
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const auto at = m_pos;
        const std::uint32_t n = u32();
        if (n > remaining()) {
            throw IndexCorruptError(at, "string length " + std::to_string(n) + " overruns file");
        }
        std::string s(m_bytes.substr(m_pos, n));
        m_pos += n;
        return s;
    }
    /// Reads a count and checks that `min_bytes_each` * count still fits in the file.
    std::uint32_t count(std::size_t min_bytes_each, const char* what) {
        const auto at = m_pos;
        const std::uint32_t n = u32();
        if (min_bytes_each > 0 && static_cast<std::uint64_t>(n) * min_bytes_each > remaining()) {
            throw IndexCorruptError(at, std::string(what) + " count " + std::to_string(n) + " overruns file");
        }
        return n;
    }
    std::string_view raw(std::size_t n) {
        need(n, "bytes");
        auto v = m_bytes.substr(m_pos, n);
        m_pos += n;
        return v;
    }

  private:
    void need(std::size_t n, const char* what) const {
        if (remaining() < n) {
            throw IndexCorruptError(m_pos, std::string("truncated while reading ") + what);
        }
    }

    std::string_view m_bytes;
    std::size_t m_pos = 0;
};

} // namespace detail

/// Serializes a graph to the binary index layout. Equal graphs give equal bytes.
inline std::string serialize_index(const SemanticGraph& g) {
    detail::ByteWriter w;
    w.raw(std::string_view(kIndexMagic.data(), kIndexMagic.size()));
    w.u32(kIndexVersion);
    w.u32(g.dim());

    w.u32(static_cast<std::uint32_t>(g.documents().size()));
    for (const auto& d : g.documents()) {
        w.str(d.key);
        w.str(d.title);
        w.u64(d.source_offset);
        w.u32(static_cast<std::uint32_t>(d.chunks.size()));
        for (auto c : d.chunks) {
            w.u32(c.value);
        }
    }
    w.u32(static_cast<std::uint32_t>(g.chunks().size()));
    for (const auto& c : g.chunks()) {
        w.u32(c.doc.value);
        w.str(c.text);
        w.u32(c.length_terms);
        w.u32(static_cast<std::uint32_t>(c.semantics.size()));
        for (auto s : c.semantics) {
            w.u32(s.value);
        }
    }
    w.u32(static_cast<std::uint32_t>(g.tokens().size()));
    for (const auto& t : g.tokens()) {
        w.str(t.surface);
        w.f64(t.idf);
        w.u32(static_cast<std::uint32_t>(t.semantic_ids.size()));
        for (auto s : t.semantic_ids) {
            w.u32(s.value);
        }
    }
    w.u32(static_cast<std::uint32_t>(g.semantics().size()));
    for (const auto& s : g.semantics()) {
        w.u32(s.token.value);
        for (float x : s.anchor) {
            w.f32(x);
        }
        w.u32(s.member_count);
        w.f64(s.tau_anomaly);
        w.u32(static_cast<std::uint32_t>(s.chunk_freq.size()));
        for (const auto& [c, f] : s.chunk_freq) {
            w.u32(c.value);
            w.u32(f);
        }
    }
    const auto& st = g.stats();
    w.u64(st.chunk_count);
    w.u64(st.total_length);
    w.f64(st.avg_chunk_len);
    w.u32(static_cast<std::uint32_t>(st.df.size()));
    for (const auto& [surface, df] : st.df) {
        w.str(surface);
        w.u32(df);
    }
    w.u32(static_cast<std::uint32_t>(g.anomaly_sets().size()));
    for (const auto& [token, set] : g.anomaly_sets()) {
        w.u32(token.value);
        w.u32(static_cast<std::uint32_t>(set.pending.size()));
        for (const auto& p : set.pending) {
            w.u32(p.chunk.value);
            for (float x : p.embedding) {
                w.f32(x);
            }
        }
    }
    w.u64(detail::fnv1a(w.bytes()));
    return w.bytes();
}

class IndexReader {
  public:
    static SemanticGraph parse(std::string_view bytes) {
        detail::ByteReader r(bytes);
        auto magic = r.raw(kIndexMagic.size());
        if (std::memcmp(magic.data(), kIndexMagic.data(), kIndexMagic.size()) != 0) {
            throw IndexCorruptError(0, "bad magic");
        }
        const std::uint32_t version = r.u32();
        if (version != kIndexVersion) {
            throw Error(ErrorCode::VersionMismatch,
                        "index version " + std::to_string(version) + ", reader supports " +
                            std::to_string(kIndexVersion));
        }
        if (bytes.size() < 8 + 4 + 8) {
            throw IndexCorruptError(r.offset(), "truncated before checksum");
        }
        {
            const auto body = bytes.substr(0, bytes.size() - 8);
            detail::ByteReader tail(bytes.substr(bytes.size() - 8));
            if (detail::fnv1a(body) != tail.u64()) {
                throw IndexCorruptError(bytes.size() - 8, "checksum mismatch");
            }
        }
        detail::ByteReader body(bytes.substr(0, bytes.size() - 8));
        body.raw(kIndexMagic.size());
        body.u32();
        SemanticGraph g = read_body(body);
        if (body.remaining() != 0) {
            throw IndexCorruptError(body.offset(), "trailing bytes after index body");
        }
        try {
            g.check_invariants(1e-5);
        } catch (const Error& e) {
            throw IndexCorruptError(body.offset(), std::string("inconsistent graph: ") + e.what());
        }
        return g;
    }

  private:
    static SemanticGraph read_body(detail::ByteReader& r) {
        SemanticGraph g;
        g.m_dim = r.u32();
        const std::size_t dim = g.m_dim;

        const auto n_docs = r.count(20, "document");
        g.m_documents.reserve(n_docs);
        for (std::uint32_t i = 0; i < n_docs; ++i) {
            DocumentNode d;
            d.id = DocId(i);
            d.key = r.str();
            d.title = r.str();
            d.source_offset = r.u64();
            const auto n = r.count(4, "document chunk");
            for (std::uint32_t k = 0; k < n; ++k) {
                d.chunks.emplace_back(r.u32());
            }
            if (!g.m_doc_by_key.emplace(d.key, d.id).second) {
                throw IndexCorruptError(r.offset(), "duplicate document key");
            }
            g.m_documents.push_back(std::move(d));
        }
        const auto n_chunks = r.count(16, "chunk");
        g.m_chunks.reserve(n_chunks);
        for (std::uint32_t i = 0; i < n_chunks; ++i) {
            ChunkNode c;
            c.id = ChunkId(i);
            c.doc = DocId(r.u32());
            c.text = r.str();
            c.length_terms = r.u32();
            const auto n = r.count(4, "chunk edge");
            for (std::uint32_t k = 0; k < n; ++k) {
                c.semantics.emplace_back(r.u32());
            }
            g.m_chunks.push_back(std::move(c));
        }
        const auto n_tokens = r.count(16, "token");
        g.m_tokens.reserve(n_tokens);
        for (std::uint32_t i = 0; i < n_tokens; ++i) {
            TokenNode t;
            t.id = TokenId(i);
            t.surface = r.str();
            t.idf = r.f64();
            const auto n = r.count(4, "token edge");
            for (std::uint32_t k = 0; k < n; ++k) {
                t.semantic_ids.emplace_back(r.u32());
            }
            if (!g.m_token_by_surface.emplace(t.surface, t.id).second) {
                throw IndexCorruptError(r.offset(), "duplicate token surface");
            }
            g.m_tokens.push_back(std::move(t));
        }
        const auto n_sems = r.count(4 * dim + 20, "semantic node");
        g.m_semantics.reserve(n_sems);
        for (std::uint32_t i = 0; i < n_sems; ++i) {
            SemanticNode s;
            s.id = SemId(i);
            s.token = TokenId(r.u32());
            s.anchor.resize(dim);
            for (auto& x : s.anchor) {
                x = r.f32();
            }
            s.member_count = r.u32();
            s.tau_anomaly = r.f64();
            const auto n = r.count(8, "chunk frequency");
            for (std::uint32_t k = 0; k < n; ++k) {
                const ChunkId c(r.u32());
                s.chunk_freq[c] = r.u32();
            }
            g.m_semantics.push_back(std::move(s));
        }
        g.m_stats.chunk_count = r.u64();
        g.m_stats.total_length = r.u64();
        g.m_stats.avg_chunk_len = r.f64();
        const auto n_df = r.count(8, "df");
        for (std::uint32_t i = 0; i < n_df; ++i) {
            auto surface = r.str();
            g.m_stats.df[surface] = r.u32();
        }
        const auto n_anom = r.count(8, "anomaly set");
        for (std::uint32_t i = 0; i < n_anom; ++i) {
            const TokenId token(r.u32());
            if (token.value >= g.m_tokens.size()) {
                throw IndexCorruptError(r.offset(), "anomaly set for unknown token");
            }
            AnomalySet set{token, {}};
            const auto n = r.count(4 + 4 * dim, "pending embedding");
            for (std::uint32_t k = 0; k < n; ++k) {
                PendingEmbedding p;
                p.chunk = ChunkId(r.u32());
                p.embedding.resize(dim);
                for (auto& x : p.embedding) {
                    x = r.f32();
                }
                set.pending.push_back(std::move(p));
            }
            g.m_anomalies.emplace(token, std::move(set));
        }
        return g;
    }
};

inline SemanticGraph deserialize_index(std::string_view bytes) { return IndexReader::parse(bytes); }

inline void save_index(const SemanticGraph& g, const std::filesystem::path& path) {
    const std::string bytes = serialize_index(g);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::NotFound, "cannot open " + path.string() + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorCode::InvalidState, "short write to " + path.string());
    }
}

inline SemanticGraph load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::NotFound, "cannot open index " + path.string());
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_index(bytes);
}

} // namespace litesem
