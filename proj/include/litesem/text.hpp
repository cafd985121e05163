#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "litesem/corpus_stats.hpp"
#include "litesem/error.hpp"
#include "litesem/term.hpp"

namespace litesem {

using StopwordSet = std::unordered_set<std::string>;

/// Built-in English stopword list; data/stopwords.txt carries the same words.
inline const StopwordSet& default_stopwords() {
    static const StopwordSet words = {
        "a",       "about",   "above",  "after",   "again",   "against", "all",     "am",      "an",
        "and",     "any",     "are",    "as",      "at",      "be",      "because", "been",    "before",
        "being",   "below",   "between", "both",   "but",     "by",      "can",     "could",   "did",
        "do",      "does",    "doing",  "down",    "during",  "each",    "few",     "for",     "from",
        "further", "had",     "has",    "have",    "having",  "he",      "her",     "here",    "hers",
        "herself", "him",     "himself", "his",    "how",     "i",       "if",      "in",      "into",
        "is",      "it",      "its",    "itself",  "just",    "me",      "more",    "most",    "my",
        "myself",  "no",      "nor",    "not",     "now",     "of",      "off",     "on",      "once",
        "only",    "or",      "other",  "our",     "ours",    "ourselves", "out",   "over",    "own",
        "same",    "she",     "should", "so",      "some",    "such",    "than",    "that",    "the",
        "their",   "theirs",  "them",   "themselves", "then", "there",   "these",   "they",    "this",
        "those",   "through", "to",     "too",     "under",   "until",   "up",      "very",    "was",
        "we",      "were",    "what",   "when",    "where",   "which",   "while",   "who",     "whom",
        "why",     "will",    "with",   "would",   "you",     "your",    "yours",   "yourself", "yourselves",
        "s",       "t",       "d",      "ll",      "m",       "re",      "ve",      "also",    "may",
    };
    return words;
}

/// Plain text, one surface per line; blank lines and lines starting with '#' are skipped.
inline StopwordSet load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::NotFound, "cannot open stopword list " + path.string());
    }
    StopwordSet out;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        std::transform(line.begin(), line.end(), line.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        out.insert(line);
    }
    return out;
}

struct ChunkingConfig {
    std::uint32_t chunk_size = 64;  // terms per chunk
    std::uint32_t overlap = 0;      // terms shared by consecutive chunks
    std::shared_ptr<const StopwordSet> stopwords;

    [[nodiscard]] const StopwordSet& stopword_set() const { return stopwords ? *stopwords : default_stopwords(); }

    void validate() const {
        if (chunk_size == 0) {
            throw Error(ErrorCode::InvalidConfig, "chunk_size must be positive");
        }
        if (overlap >= chunk_size) {
            throw Error(ErrorCode::InvalidConfig, "overlap must be smaller than chunk_size");
        }
    }
};

namespace text {

inline bool is_word_byte(unsigned char c) noexcept {
    // Bytes >= 0x80 belong to multi-byte UTF-8 sequences and are kept inside words.
    return std::isalnum(c) != 0 || c >= 0x80;
}

inline bool is_space(unsigned char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

/// Case-folds ASCII letters and collapses whitespace runs to one space (trimmed).
inline std::string normalize_surface(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (unsigned char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
    return out;
}

/// Maximal runs of word bytes.
inline std::vector<TextSpan> word_spans(std::string_view s) {
    std::vector<TextSpan> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_word_byte(static_cast<unsigned char>(s[i]))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < s.size() && is_word_byte(static_cast<unsigned char>(s[i]))) {
            ++i;
        }
        out.push_back({start, i});
    }
    return out;
}

/// Word spans that survive stopword filtering; these are the units chunk_size counts.
inline std::vector<TextSpan> content_word_spans(std::string_view s, const StopwordSet& stopwords) {
    std::vector<TextSpan> out;
    for (const auto& w : word_spans(s)) {
        if (!stopwords.contains(normalize_surface(s.substr(w.start, w.size())))) {
            out.push_back(w);
        }
    }
    return out;
}

} // namespace text

/// Chunk boundaries as byte spans into `text`. Each chunk runs from its first term to its
/// last; consecutive chunks start `chunk_size - overlap` terms apart.
inline std::vector<TextSpan> split_chunk_spans(std::string_view text, const ChunkingConfig& cfg) {
    cfg.validate();
    const auto words = text::content_word_spans(text, cfg.stopword_set());
    std::vector<TextSpan> out;
    const std::size_t n = words.size();
    const std::size_t stride = cfg.chunk_size - cfg.overlap;
    for (std::size_t start = 0; start < n; start += stride) {
        const std::size_t end = std::min<std::size_t>(start + cfg.chunk_size, n);
        out.push_back({words[start].start, words[end - 1].end});
        if (end == n) {
            break;
        }
    }
    return out;
}

inline std::vector<std::string> split_chunks(std::string_view text, const ChunkingConfig& cfg) {
    std::vector<std::string> out;
    for (const auto& span : split_chunk_spans(text, cfg)) {
        out.emplace_back(text.substr(span.start, span.size()));
    }
    return out;
}

/// Unigrams (stopwords dropped) plus phrases: runs of two or more capitalized,
/// non-stopword words separated only by whitespace. A phrase is followed by its
/// own unigrams. Output is ordered by span start, longer span first on ties.
inline std::vector<TermOccurrence> extract_terms(std::string_view chunk_text, const ChunkingConfig& cfg) {
    const auto& stopwords = cfg.stopword_set();
    const auto words = text::word_spans(chunk_text);

    struct Word {
        TextSpan span;
        std::string surface;
        bool keep;
        bool capitalized;
    };
    std::vector<Word> ws;
    ws.reserve(words.size());
    for (const auto& w : words) {
        auto surface = text::normalize_surface(chunk_text.substr(w.start, w.size()));
        const bool keep = !stopwords.contains(surface);
        const bool cap = std::isupper(static_cast<unsigned char>(chunk_text[w.start])) != 0;
        ws.push_back({w, std::move(surface), keep, cap});
    }

    std::vector<TermOccurrence> out;
    auto only_space_between = [&](const Word& a, const Word& b) {
        for (std::size_t i = a.span.end; i < b.span.start; ++i) {
            if (!text::is_space(static_cast<unsigned char>(chunk_text[i]))) {
                return false;
            }
        }
        return true;
    };
    for (std::size_t i = 0; i < ws.size();) {
        if (!(ws[i].keep && ws[i].capitalized)) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < ws.size() && ws[j].keep && ws[j].capitalized && only_space_between(ws[j - 1], ws[j])) {
            ++j;
        }
        if (j - i >= 2) {
            TextSpan span{ws[i].span.start, ws[j - 1].span.end};
            out.push_back({text::normalize_surface(chunk_text.substr(span.start, span.size())), span, {}, true});
        }
        i = j;
    }
    for (const auto& w : ws) {
        if (w.keep) {
            out.push_back({w.surface, w.span, {}, false});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const TermOccurrence& a, const TermOccurrence& b) {
        if (a.span.start != b.span.start) {
            return a.span.start < b.span.start;
        }
        return a.span.end > b.span.end;
    });
    return out;
}

/// BM25-style smoothed inverse frequency over chunks: ln((N - df + 0.5) / (df + 0.5) + 1).
inline double idf_from_counts(double chunk_count, double df) {
    return std::log((chunk_count - df + 0.5) / (df + 0.5) + 1.0);
}

inline double idf(const std::string& surface, const CorpusStats& stats) {
    return idf_from_counts(static_cast<double>(stats.chunk_count), static_cast<double>(stats.df_of(surface)));
}

} // namespace litesem
