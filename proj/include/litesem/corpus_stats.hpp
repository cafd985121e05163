#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace litesem {

/// Chunk-level collection statistics used by idf and BM25 length normalization.
struct CorpusStats {
    std::uint64_t chunk_count = 0;
    std::uint64_t total_length = 0;
    double avg_chunk_len = 0.0;
    std::map<std::string, std::uint32_t> df;  // surface -> number of chunks containing it

    void add_chunk(std::uint64_t length_terms) {
        ++chunk_count;
        total_length += length_terms;
        avg_chunk_len = static_cast<double>(total_length) / static_cast<double>(chunk_count);
    }

    [[nodiscard]] std::uint32_t df_of(const std::string& surface) const {
        auto it = df.find(surface);
        return it == df.end() ? 0U : it->second;
    }

    bool operator==(const CorpusStats&) const = default;
};

} // namespace litesem
