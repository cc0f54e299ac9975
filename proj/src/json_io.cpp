#include "antman/json_io.hpp"

namespace antman {

void to_json(nlohmann::json& j, const CompressionConfig& cfg) {
    j = nlohmann::json{{"kind", std::string(to_string(cfg.kind))}, {"m", cfg.m}, {"n", cfg.n}};
    if (cfg.g) j["g"] = *cfg.g;
    if (cfg.r) j["r"] = *cfg.r;
    if (cfg.g_in) j["g_in"] = *cfg.g_in;
    if (cfg.g_out) j["g_out"] = *cfg.g_out;
    if (cfg.mix_side) j["mix_side"] = std::string(to_string(*cfg.mix_side));
}

void from_json(const nlohmann::json& j, CompressionConfig& cfg) {
    cfg = CompressionConfig{};
    cfg.kind = parse_kind(j.at("kind").get<std::string>());
    cfg.m = j.value("m", std::size_t{0});
    cfg.n = j.value("n", std::size_t{0});
    auto opt = [&](const char* key, std::optional<std::size_t>& out) {
        if (j.contains(key)) out = j.at(key).get<std::size_t>();
    };
    opt("g", cfg.g);
    opt("r", cfg.r);
    opt("g_in", cfg.g_in);
    opt("g_out", cfg.g_out);
    if (j.contains("mix_side")) cfg.mix_side = parse_mix_side(j.at("mix_side").get<std::string>());
}

}  // namespace antman
