#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace litesem {

enum class ErrorCode {
    NotFound,
    EmptyChunk,
    InvalidAnchor,
    IndexCorrupt,
    VersionMismatch,
    ProviderUnavailable,
    DimensionMismatch,
    InvalidSpan,
    EmptyInput,
    InvalidState,
    EmptyIndex,
    MissingJudgment,
    InvalidConfig,
    ParseError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::EmptyChunk: return "EmptyChunk";
    case ErrorCode::InvalidAnchor: return "InvalidAnchor";
    case ErrorCode::IndexCorrupt: return "IndexCorrupt";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidSpan: return "InvalidSpan";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::MissingJudgment: return "MissingJudgment";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), m_code(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return m_code; }

    /// Only provider outages are worth retrying.
    [[nodiscard]] bool retryable() const noexcept { return m_code == ErrorCode::ProviderUnavailable; }

  private:
    ErrorCode m_code;
};

/// Raised by the index reader; `offset` is the byte position where decoding failed.
class IndexCorruptError : public Error {
  public:
    IndexCorruptError(std::uint64_t offset, const std::string& what)
        : Error(ErrorCode::IndexCorrupt, what + " at byte " + std::to_string(offset)), m_offset(offset) {}

    [[nodiscard]] std::uint64_t offset() const noexcept { return m_offset; }

  private:
    std::uint64_t m_offset;
};

/// Line-numbered input failure (corpus, queries, qrels, run files).
class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what), m_line(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return m_line; }

  private:
    std::size_t m_line;
};

} // namespace litesem
