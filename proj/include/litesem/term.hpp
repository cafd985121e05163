#pragma once

#include <cstddef>
#include <string>

#include "litesem/ids.hpp"

namespace litesem {

/// Half-open byte range [start, end) into a UTF-8 chunk text.
struct TextSpan {
    std::size_t start = 0;
    std::size_t end = 0;

    [[nodiscard]] std::size_t size() const noexcept { return end - start; }
    bool operator==(const TextSpan&) const = default;
};

/// One extracted surface term inside a chunk; the unit embeddings attach to.
struct TermOccurrence {
    std::string surface;
    TextSpan span;
    ChunkId chunk;  // invalid until the chunk is inserted into a graph
    bool is_phrase = false;

    bool operator==(const TermOccurrence&) const = default;
};

} // namespace litesem
