#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "litesem/error.hpp"
#include "litesem/term.hpp"
#include "litesem/text.hpp"
#include "litesem/vector_math.hpp"

namespace litesem {

struct EmbedRequest {
    std::string text;
    std::vector<TextSpan> spans;  // byte offsets into text
};

struct EmbedResponse {
    std::uint32_t dim = 0;
    std::vector<Embedding> vectors;  // one unit vector per span, request order
};

/// Rejects empty span lists and spans that are empty or run past the text.
inline void validate_request(const EmbedRequest& req) {
    if (req.spans.empty()) {
        throw Error(ErrorCode::InvalidSpan, "request carries no spans");
    }
    for (const auto& s : req.spans) {
        if (s.start >= s.end || s.end > req.text.size()) {
            throw Error(ErrorCode::InvalidSpan, "span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                                                    ") outside text of length " + std::to_string(req.text.size()));
        }
    }
}

/// Source of token-level contextual embeddings.
class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;

    virtual EmbedResponse embed_spans(const EmbedRequest& req) = 0;

    /// Embedding width, or 0 while unknown (remote providers learn it from the first reply).
    [[nodiscard]] virtual std::uint32_t dim() const = 0;
};

// ---------------------------------------------------------------------------------------
// Synthetic encoder

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_bytes(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

/// Pseudo-random point on the unit sphere fully determined by (seed, key):
/// FNV-1a of the key seeds splitmix64, Box-Muller turns the stream into Gaussians.
inline std::vector<double> hash_to_sphere(std::string_view key, std::uint32_t dim, std::uint64_t seed) {
    std::uint64_t state = detail::hash_bytes(key) ^ (seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
    auto uniform = [&state] {
        // 53 random bits -> (0, 1]
        return (static_cast<double>(detail::splitmix64(state) >> 11) + 1.0) * 0x1.0p-53;
    };
    std::vector<double> v(dim);
    for (std::uint32_t i = 0; i < dim; i += 2) {
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        v[i] = r * std::cos(theta);
        if (i + 1 < dim) {
            v[i + 1] = r * std::sin(theta);
        }
    }
    const double n = l2_norm(std::span<const double>(v));
    for (double& x : v) {
        x /= n;
    }
    return v;
}

/// normalize(v(surface) + gamma * mean_{w in context} v(w)); an empty context contributes nothing.
inline Embedding synthetic_encode(std::string_view surface, std::span<const std::string> context, double gamma,
                                  std::uint32_t dim, std::uint64_t seed) {
    if (dim < 8) {
        throw Error(ErrorCode::InvalidConfig, "synthetic encoder needs dim >= 8");
    }
    std::vector<double> acc = hash_to_sphere(surface, dim, seed);
    if (!context.empty() && gamma != 0.0) {
        std::vector<double> mean(dim, 0.0);
        for (const auto& w : context) {
            const auto v = hash_to_sphere(w, dim, seed);
            for (std::uint32_t i = 0; i < dim; ++i) {
                mean[i] += v[i];
            }
        }
        const double scale = gamma / static_cast<double>(context.size());
        for (std::uint32_t i = 0; i < dim; ++i) {
            acc[i] += scale * mean[i];
        }
    }
    return normalized(std::span<const double>(acc));
}

struct SyntheticConfig {
    std::uint32_t dim = 64;
    std::uint64_t seed = 42;
    double gamma = 1.0;
    // Weight of a per-occurrence pseudo-random direction keyed by (text, span). Zero keeps
    // the pure context-bag encoder; positive values emulate weak local context.
    double occurrence_noise = 0.0;
};

/// Deterministic offline provider. For span i of a request, the context bag is the
/// normalized surfaces of every other span in the same request.
class SyntheticProvider final : public EmbeddingProvider {
  public:
    explicit SyntheticProvider(SyntheticConfig cfg = {}) : m_cfg(cfg) {
        if (m_cfg.dim < 8) {
            throw Error(ErrorCode::InvalidConfig, "synthetic encoder needs dim >= 8");
        }
    }

    [[nodiscard]] const SyntheticConfig& config() const noexcept { return m_cfg; }
    [[nodiscard]] std::uint32_t dim() const override { return m_cfg.dim; }

    EmbedResponse embed_spans(const EmbedRequest& req) override {
        validate_request(req);
        const std::uint32_t dim = m_cfg.dim;
        const std::size_t n = req.spans.size();

        std::vector<std::string> surfaces;
        surfaces.reserve(n);
        std::unordered_map<std::string, std::vector<double>> basis;
        for (const auto& s : req.spans) {
            surfaces.push_back(text::normalize_surface(std::string_view(req.text).substr(s.start, s.size())));
            if (!basis.contains(surfaces.back())) {
                basis.emplace(surfaces.back(), hash_to_sphere(surfaces.back(), dim, m_cfg.seed));
            }
        }
        std::vector<double> bag_sum(dim, 0.0);
        for (const auto& s : surfaces) {
            const auto& v = basis.at(s);
            for (std::uint32_t k = 0; k < dim; ++k) {
                bag_sum[k] += v[k];
            }
        }

        EmbedResponse resp{dim, {}};
        resp.vectors.reserve(n);
        const std::uint64_t text_hash = detail::hash_bytes(req.text);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& self = basis.at(surfaces[i]);
            std::vector<double> acc = self;
            if (n > 1 && m_cfg.gamma != 0.0) {
                const double scale = m_cfg.gamma / static_cast<double>(n - 1);
                for (std::uint32_t k = 0; k < dim; ++k) {
                    acc[k] += scale * (bag_sum[k] - self[k]);
                }
            }
            if (m_cfg.occurrence_noise != 0.0) {
                const std::string key = "\x1f" "occ:" + std::to_string(text_hash) + ":" +
                                        std::to_string(req.spans[i].start) + ":" + std::to_string(req.spans[i].end);
                const auto noise = hash_to_sphere(key, dim, m_cfg.seed);
                for (std::uint32_t k = 0; k < dim; ++k) {
                    acc[k] += m_cfg.occurrence_noise * noise[k];
                }
            }
            resp.vectors.push_back(normalized(std::span<const double>(acc)));
        }
        return resp;
    }

  private:
    SyntheticConfig m_cfg;
};

// ---------------------------------------------------------------------------------------
// Remote provider: POST /embed {"text", "spans"} -> {"dim", "vectors"}

struct HttpProviderConfig {
    std::string url = "http://127.0.0.1:8080";
    double timeout_s = 30.0;
    std::uint32_t max_in_flight = 8;
};

namespace detail {

/// Byte offset -> code point index, for services that index text by character.
inline std::vector<std::size_t> codepoint_offsets(std::string_view utf8) {
    std::vector<std::size_t> index(utf8.size() + 1, 0);
    std::size_t cp = 0;
    for (std::size_t i = 0; i < utf8.size(); ++i) {
        index[i] = cp;
        if ((static_cast<unsigned char>(utf8[i]) & 0xC0) != 0x80) {
            index[i] = cp++;
        }
    }
    index[utf8.size()] = cp;
    return index;
}

} // namespace detail

class HttpProvider final : public EmbeddingProvider {
  public:
    explicit HttpProvider(HttpProviderConfig cfg)
        : m_cfg(std::move(cfg)), m_slots(static_cast<std::ptrdiff_t>(std::max<std::uint32_t>(1, m_cfg.max_in_flight))) {}

    [[nodiscard]] std::uint32_t dim() const override { return m_dim.load(); }

    /// GET /health; returns the advertised dim. Throws ProviderUnavailable when not ready.
    std::uint32_t health() {
        auto cli = client();
        auto res = cli.Get("/health");
        if (!res) {
            throw Error(ErrorCode::ProviderUnavailable, "health check failed: " + httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            throw Error(ErrorCode::ProviderUnavailable, "health status " + std::to_string(res->status));
        }
        try {
            auto body = nlohmann::json::parse(res->body);
            const auto dim = body.at("dim").get<std::uint32_t>();
            record_dim(dim);
            return dim;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ProviderUnavailable, std::string("malformed health reply: ") + e.what());
        }
    }

    EmbedResponse embed_spans(const EmbedRequest& req) override {
        validate_request(req);
        const auto cps = detail::codepoint_offsets(req.text);
        nlohmann::json body;
        body["text"] = req.text;
        body["spans"] = nlohmann::json::array();
        for (const auto& s : req.spans) {
            body["spans"].push_back({cps[s.start], cps[s.end]});
        }

        httplib::Result res{nullptr, httplib::Error::Unknown};
        {
            m_slots.acquire();
            struct Release {
                std::counting_semaphore<>& s;
                ~Release() { s.release(); }
            } release{m_slots};
            auto cli = client();
            res = cli.Post("/embed", body.dump(), "application/json");
        }
        if (!res) {
            throw Error(ErrorCode::ProviderUnavailable, "POST /embed failed: " + httplib::to_string(res.error()));
        }
        if (res->status == 422) {
            throw Error(ErrorCode::InvalidSpan, "service rejected spans: " + res->body);
        }
        if (res->status == 413) {
            throw Error(ErrorCode::InvalidSpan, "text too long for service");
        }
        if (res->status >= 500) {
            throw Error(ErrorCode::ProviderUnavailable, "service status " + std::to_string(res->status));
        }
        if (res->status != 200) {
            throw Error(ErrorCode::ProviderUnavailable, "unexpected status " + std::to_string(res->status));
        }

        EmbedResponse out;
        try {
            auto reply = nlohmann::json::parse(res->body);
            out.dim = reply.at("dim").get<std::uint32_t>();
            const auto& vectors = reply.at("vectors");
            for (const auto& v : vectors) {
                out.vectors.push_back(v.get<Embedding>());
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ProviderUnavailable, std::string("malformed reply: ") + e.what());
        }
        record_dim(out.dim);
        if (out.vectors.size() != req.spans.size()) {
            throw Error(ErrorCode::InvalidState, "service returned " + std::to_string(out.vectors.size()) +
                                                     " vectors for " + std::to_string(req.spans.size()) + " spans");
        }
        for (auto& v : out.vectors) {
            if (v.size() != out.dim) {
                throw Error(ErrorCode::DimensionMismatch, "vector of width " + std::to_string(v.size()) +
                                                              " in a dim " + std::to_string(out.dim) + " reply");
            }
            if (l2_norm(v) <= 0.0) {
                throw Error(ErrorCode::InvalidState, "service returned a zero vector");
            }
            v = normalized(std::span<const float>(v));
        }
        return out;
    }

  private:
    httplib::Client client() const {
        httplib::Client cli(m_cfg.url);
        const auto usec = static_cast<long>(m_cfg.timeout_s * 1e6);
        cli.set_connection_timeout(usec / 1000000, usec % 1000000);
        cli.set_read_timeout(usec / 1000000, usec % 1000000);
        cli.set_write_timeout(usec / 1000000, usec % 1000000);
        return cli;
    }

    void record_dim(std::uint32_t dim) {
        std::uint32_t expected = 0;
        if (!m_dim.compare_exchange_strong(expected, dim) && expected != dim) {
            throw Error(ErrorCode::DimensionMismatch,
                        "service dim changed from " + std::to_string(expected) + " to " + std::to_string(dim));
        }
    }

    HttpProviderConfig m_cfg;
    std::counting_semaphore<> m_slots;
    std::atomic<std::uint32_t> m_dim{0};
};

} // namespace litesem
