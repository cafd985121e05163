#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>

namespace litesem {

/// Dense integer identifier, tagged per node layer so ids of different layers never mix.
template <typename Tag>
struct Id {
    std::uint32_t value = std::numeric_limits<std::uint32_t>::max();

    constexpr Id() = default;
    constexpr explicit Id(std::uint32_t v) : value(v) {}

    [[nodiscard]] constexpr bool valid() const noexcept {
        return value != std::numeric_limits<std::uint32_t>::max();
    }
    constexpr auto operator<=>(const Id&) const = default;
};

struct DocTag {};
struct ChunkTag {};
struct TokenTag {};
struct SemTag {};

using DocId = Id<DocTag>;
using ChunkId = Id<ChunkTag>;
using TokenId = Id<TokenTag>;
using SemId = Id<SemTag>;

} // namespace litesem

template <typename Tag>
struct std::hash<litesem::Id<Tag>> {
    std::size_t operator()(const litesem::Id<Tag>& id) const noexcept {
        return std::hash<std::uint32_t>{}(id.value);
    }
};
