#pragma once

#include <ctime>
#include <filesystem>
#include <optional>
#include <string>

#include <openssl/evp.h>

#include "dps/config.hpp"
#include "dps/io.hpp"

namespace dps {

inline std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* md = EVP_MD_CTX_new();
    if (!md) throw std::runtime_error("sha256: cannot allocate digest context");
    bool ok = EVP_DigestInit_ex(md, EVP_sha256(), nullptr) == 1 &&
              EVP_DigestUpdate(md, data.data(), data.size()) == 1 && EVP_DigestFinal_ex(md, digest, &len) == 1;
    EVP_MD_CTX_free(md);
    if (!ok) throw std::runtime_error("sha256: digest computation failed");
    static const char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

inline std::string config_hash(const RunConfig& c) { return sha256_hex(numeric_fingerprint(c)); }

namespace detail {

inline nlohmann::json eigen_to_json(const EigenResult& e) {
    return {{"lambda", e.lambda},
            {"residual", e.residual},
            {"iterations", e.iterations},
            {"restarts_used", e.restarts_used},
            {"phi", e.phi.v}};
}

inline EigenResult eigen_from_json(const nlohmann::json& j, const Grid& g) {
    std::vector<double> values = j.at("phi").get<std::vector<double>>();
    if (values.size() != g.node_count()) throw std::runtime_error("cached eigenfunction size mismatch");
    EigenResult e{Field(g, std::move(values))};
    e.lambda = j.at("lambda").get<double>();
    e.residual = j.at("residual").get<double>();
    e.iterations = j.at("iterations").get<long>();
    e.restarts_used = j.at("restarts_used").get<int>();
    return e;
}

inline nlohmann::json constants_to_json(const SpectrumConstants& c) {
    return {{"lambda1_ap", c.lambda1_ap},
            {"lambda1_q", c.lambda1_q},
            {"s_tilde_minus", num_json(c.s_tilde_minus)},
            {"s_tilde_plus", num_json(c.s_tilde_plus)},
            {"s_star", c.s_star},
            {"s_star_minus", num_json(c.s_star_minus)},
            {"s_star_plus", num_json(c.s_star_plus)},
            {"weight_inf_positive", c.weight_inf_positive}};
}

inline SpectrumConstants constants_from_json(const nlohmann::json& j) {
    SpectrumConstants c;
    c.lambda1_ap = j.at("lambda1_ap").get<double>();
    c.lambda1_q = j.at("lambda1_q").get<double>();
    c.s_tilde_minus = num_from_json(j.at("s_tilde_minus"));
    c.s_tilde_plus = num_from_json(j.at("s_tilde_plus"));
    c.s_star = j.at("s_star").get<double>();
    c.s_star_minus = num_from_json(j.at("s_star_minus"));
    c.s_star_plus = num_from_json(j.at("s_star_plus"));
    c.weight_inf_positive = j.at("weight_inf_positive").get<bool>();
    return c;
}

inline nlohmann::json li_to_json(const LIReport& li) {
    return {{"holds", li.holds},
            {"best_k", li.best_k},
            {"alignment_residual", li.alignment_residual},
            {"threshold", li.threshold}};
}

inline LIReport li_from_json(const nlohmann::json& j) {
    LIReport li;
    li.holds = j.at("holds").get<bool>();
    li.best_k = j.at("best_k").get<double>();
    li.alignment_residual = j.at("alignment_residual").get<double>();
    li.threshold = j.at("threshold").get<double>();
    return li;
}

} // namespace detail

inline std::filesystem::path cache_path(const RunConfig& cfg, const std::string& hash) {
    return std::filesystem::path(cfg.out_dir) / "cache" / (hash + ".json");
}

inline void cache_store(const RunConfig& cfg, const std::string& hash, const SpectrumContext& ctx,
                        const std::string& version) {
    nlohmann::json j;
    j["hash"] = hash;
    j["version"] = version;
    j["created_unix"] = static_cast<long>(std::time(nullptr));
    j["eig_pa"] = detail::eigen_to_json(ctx.eig_pa);
    j["eig_q"] = detail::eigen_to_json(ctx.eig_q);
    j["constants"] = detail::constants_to_json(ctx.consts);
    j["li"] = detail::li_to_json(ctx.li);
    j["phi_q_theta"] = ctx.phi_q_theta;
    atomic_write(cache_path(cfg, hash), j.dump(2) + "\n");
}

// Rebuild a context from a cache entry; nullopt on any mismatch or damage.
inline std::optional<SpectrumContext> cache_load(const RunConfig& cfg, const std::string& hash,
                                                 const std::string& version) {
    std::filesystem::path path = cache_path(cfg, hash);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    try {
        nlohmann::json j = nlohmann::json::parse(read_file(path));
        if (j.at("hash").get<std::string>() != hash) return std::nullopt;
        if (j.at("version").get<std::string>() != version) return std::nullopt;
        Grid grid = build_grid(cfg.dim, cfg.extent, cfg.nodes);
        SpectrumContext ctx{grid,
                            cfg.exps,
                            cfg.weight,
                            build_weight_table(grid, cfg.weight),
                            detail::eigen_from_json(j.at("eig_pa"), grid),
                            detail::eigen_from_json(j.at("eig_q"), grid),
                            detail::constants_from_json(j.at("constants")),
                            detail::li_from_json(j.at("li")),
                            j.at("phi_q_theta").get<double>(),
                            cfg.solver};
        return ctx;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

struct ContextHandle {
    SpectrumContext ctx;
    std::string hash;
    bool from_cache = false;
};

// Load the eigen context from the cache when possible, else compute and store.
inline ContextHandle acquire_context(const RunConfig& cfg, const std::string& version) {
    std::string hash = config_hash(cfg);
    if (auto cached = cache_load(cfg, hash, version))
        return {std::move(*cached), hash, true};
    Grid grid = build_grid(cfg.dim, cfg.extent, cfg.nodes);
    SpectrumContext ctx = prepare_context(grid, cfg.exps, cfg.weight, cfg.eigen, cfg.solver, cfg.li_threshold);
    cache_store(cfg, hash, ctx, version);
    return {std::move(ctx), hash, false};
}

} // namespace dps
