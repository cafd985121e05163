#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>

#include <json.hpp>

#include "litesem/embed.hpp"
#include "litesem/error.hpp"
#include "litesem/induction.hpp"
#include "litesem/retrieval.hpp"
#include "litesem/text.hpp"

namespace litesem {

enum class ProviderKind { Synthetic, Http };

struct ProviderConfig {
    ProviderKind kind = ProviderKind::Synthetic;
    SyntheticConfig synthetic;
    HttpProviderConfig http;
};

/// Every tunable of the engine. Loaded from a JSON object with flat dotted keys, e.g.
/// {"chunking.chunk_size": 32, "query.mix_lambda": 0.5, "provider.kind": "http"}.
struct AppConfig {
    ChunkingConfig chunking;
    InductionConfig induction;
    QueryConfig query;
    ProviderConfig provider;

    void validate() const {
        chunking.validate();
        induction.validate();
        query.validate();
        if (provider.synthetic.dim < 8) {
            throw Error(ErrorCode::InvalidConfig, "provider.dim must be >= 8");
        }
        if (!(provider.http.timeout_s > 0.0)) {
            throw Error(ErrorCode::InvalidConfig, "provider.timeout_s must be positive");
        }
        if (provider.http.max_in_flight < 1) {
            throw Error(ErrorCode::InvalidConfig, "provider.max_in_flight must be >= 1");
        }
    }
};

namespace detail {

inline double as_real(const std::string& key, const nlohmann::json& v) {
    if (!v.is_number()) {
        throw Error(ErrorCode::InvalidConfig, key + " must be a number");
    }
    return v.get<double>();
}

template <class U>
U as_unsigned(const std::string& key, const nlohmann::json& v) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0 ||
        v.get<std::uint64_t>() > std::numeric_limits<U>::max()) {
        throw Error(ErrorCode::InvalidConfig, key + " must be a non-negative integer");
    }
    return static_cast<U>(v.get<std::uint64_t>());
}

inline std::string as_text(const std::string& key, const nlohmann::json& v) {
    if (!v.is_string()) {
        throw Error(ErrorCode::InvalidConfig, key + " must be a string");
    }
    return v.get<std::string>();
}

using Setter = std::function<void(AppConfig&, const std::string&, const nlohmann::json&)>;

inline const std::map<std::string, Setter>& config_setters() {
    static const std::map<std::string, Setter> table = {
        {"chunking.chunk_size", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.chunking.chunk_size = as_unsigned<std::uint32_t>(k, v); }},
        {"chunking.overlap", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.chunking.overlap = as_unsigned<std::uint32_t>(k, v); }},
        {"chunking.stopwords", [](AppConfig& c, const std::string& k, const nlohmann::json& v) {
             c.chunking.stopwords = std::make_shared<const StopwordSet>(load_stopwords(as_text(k, v)));
         }},
        {"induction.tau_idf", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.induction.tau_idf = as_real(k, v); }},
        {"induction.tau_disp", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.induction.tau_disp = as_real(k, v); }},
        {"induction.min_cluster_size", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.induction.min_cluster_size = as_unsigned<std::uint32_t>(k, v); }},
        {"induction.anomaly_percentile", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.induction.anomaly_percentile = as_real(k, v); }},
        {"induction.anomaly_set_capacity", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.induction.anomaly_set_capacity = as_unsigned<std::uint32_t>(k, v); }},
        {"induction.aggregation_noise_threshold", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.induction.aggregation_noise_threshold = as_real(k, v); }},
        {"induction.cluster_tightness", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.induction.cluster_tightness = as_real(k, v); }},
        {"query.alpha_exact", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.query.alpha_exact = as_real(k, v); }},
        {"query.alpha_partial", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.query.alpha_partial = as_real(k, v); }},
        {"query.alpha_similarity", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.query.alpha_similarity = as_real(k, v); }},
        {"query.top_k_match", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.query.top_k_match = as_unsigned<std::uint32_t>(k, v); }},
        {"query.k1", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.query.k1 = as_real(k, v); }},
        {"query.b", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.query.b = as_real(k, v); }},
        {"query.mix_lambda", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.query.mix_lambda = as_real(k, v); }},
        {"query.round_robin_k", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.query.round_robin_k = as_unsigned<std::uint32_t>(k, v); }},
        {"query.sim_floor", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.query.sim_floor = as_real(k, v); }},
        {"query.min_edge_weight", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.query.min_edge_weight = as_real(k, v); }},
        {"provider.kind", [](AppConfig& c, const std::string& k, const nlohmann::json& v) {
             const auto s = as_text(k, v);
             if (s == "synthetic") {
                 c.provider.kind = ProviderKind::Synthetic;
             } else if (s == "http") {
                 c.provider.kind = ProviderKind::Http;
             } else {
                 throw Error(ErrorCode::InvalidConfig, k + " must be \"synthetic\" or \"http\"");
             }
         }},
        {"provider.url", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.provider.http.url = as_text(k, v); }},
        {"provider.timeout_s", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.provider.http.timeout_s = as_real(k, v); }},
        {"provider.max_in_flight", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.provider.http.max_in_flight = as_unsigned<std::uint32_t>(k, v); }},
        {"provider.dim", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.provider.synthetic.dim = as_unsigned<std::uint32_t>(k, v); }},
        {"provider.seed", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.provider.synthetic.seed = as_unsigned<std::uint64_t>(k, v); }},
        {"provider.gamma", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.provider.synthetic.gamma = as_real(k, v); }},
        {"provider.occurrence_noise", [](AppConfig& c, const std::string& k, const nlohmann::json& v) { c.provider.synthetic.occurrence_noise = as_real(k, v); }},
    };
    return table;
}

} // namespace detail

/// Applies the keys of `obj` over defaults. Unknown keys and ill-typed or out-of-range
/// values raise InvalidConfig.
inline AppConfig config_from_json(const nlohmann::json& obj) {
    if (!obj.is_object()) {
        throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
    }
    AppConfig cfg;
    const auto& setters = detail::config_setters();
    for (const auto& [key, value] : obj.items()) {
        auto it = setters.find(key);
        if (it == setters.end()) {
            throw Error(ErrorCode::InvalidConfig, "unknown config key " + key);
        }
        it->second(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

inline AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::NotFound, "cannot open config " + path.string());
    }
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, "config " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(obj);
}

/// Builds the provider the config asks for.
inline std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& cfg) {
    if (cfg.kind == ProviderKind::Http) {
        return std::make_unique<HttpProvider>(cfg.http);
    }
    return std::make_unique<SyntheticProvider>(cfg.synthetic);
}

} // namespace litesem
