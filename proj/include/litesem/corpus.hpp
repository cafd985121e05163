#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "litesem/error.hpp"

namespace litesem {

struct CorpusDocument {
    std::string key;
    std::string title;
    std::string text;
    std::uint64_t source_offset = 0;  // byte offset of the document's line in the corpus file
};

struct QueryRecord {
    std::string id;
    std::string text;
};

namespace detail {

/// Calls on_object(json, line_number, byte_offset) per non-blank line; ParseError on bad JSON.
template <typename Fn>
void for_each_jsonl(std::istream& in, Fn&& on_object) {
    std::string line;
    std::size_t line_no = 0;
    std::uint64_t offset = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::uint64_t line_offset = offset;
        offset += line.size() + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!obj.is_object()) {
            throw ParseError(line_no, "expected a JSON object");
        }
        on_object(obj, line_no, line_offset);
    }
}

inline std::string required_string(const nlohmann::json& obj, const char* key, std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError(line_no, std::string("missing field '") + key + "'");
    }
    if (it->is_string()) {
        return it->get<std::string>();
    }
    if (it->is_number_integer()) {
        return std::to_string(it->get<long long>());
    }
    throw ParseError(line_no, std::string("field '") + key + "' must be a string");
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::NotFound, "cannot open " + path.string());
    }
    return in;
}

} // namespace detail

/// JSON lines: {"doc_id": str, "title": str, "text": str}; title may be omitted.
inline std::vector<CorpusDocument> read_corpus(std::istream& in) {
    std::vector<CorpusDocument> docs;
    detail::for_each_jsonl(in, [&](const nlohmann::json& obj, std::size_t line_no, std::uint64_t offset) {
        CorpusDocument d;
        d.key = detail::required_string(obj, "doc_id", line_no);
        d.title = obj.contains("title") ? detail::required_string(obj, "title", line_no) : std::string();
        d.text = detail::required_string(obj, "text", line_no);
        d.source_offset = offset;
        docs.push_back(std::move(d));
    });
    return docs;
}

inline std::vector<CorpusDocument> read_corpus(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return read_corpus(in);
}

/// JSON lines: {"query_id": str, "text": str}.
inline std::vector<QueryRecord> read_queries(std::istream& in) {
    std::vector<QueryRecord> out;
    detail::for_each_jsonl(in, [&](const nlohmann::json& obj, std::size_t line_no, std::uint64_t) {
        out.push_back({detail::required_string(obj, "query_id", line_no), detail::required_string(obj, "text", line_no)});
    });
    return out;
}

inline std::vector<QueryRecord> read_queries(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return read_queries(in);
}

} // namespace litesem
