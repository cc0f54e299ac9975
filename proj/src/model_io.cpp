#include "antman/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "antman/json_io.hpp"

namespace antman {

std::string_view to_string(FormatErrorKind kind) {
    switch (kind) {
        case FormatErrorKind::BadMagic: return "bad magic";
        case FormatErrorKind::VersionMismatch: return "version mismatch";
        case FormatErrorKind::Truncated: return "truncated payload";
        case FormatErrorKind::MalformedMetadata: return "malformed metadata";
        case FormatErrorKind::ManifestMismatch: return "manifest mismatch";
        case FormatErrorKind::Io: return "io error";
    }
    return "format error";
}

namespace {

constexpr char kMagic[4] = {'A', 'N', 'T', 'M'};
constexpr std::size_t kHeaderSize = 16;

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

template <typename U>
U get_le(const std::uint8_t* p) {
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(p[i]) << (8 * i);
    return value;
}

struct ArrayEntry {
    std::string name;
    std::size_t rows, cols, groups, count;
};

nlohmann::json array_json(const ArrayEntry& a) {
    return {{"name", a.name}, {"rows", a.rows}, {"cols", a.cols}, {"groups", a.groups}, {"count", a.count}};
}

/// Arrays a model with these layer configs must carry, in payload order.
std::vector<ArrayEntry> expected_manifest(const std::vector<std::pair<CompressionConfig, CompressionConfig>>& ops) {
    std::vector<ArrayEntry> out;
    for (std::size_t k = 0; k < ops.size(); ++k) {
        const std::string prefix = "layers." + std::to_string(k) + ".";
        for (const auto& [which, cfg] : {std::pair{"w_input", ops[k].first}, std::pair{"w_hidden", ops[k].second}}) {
            for (const auto& f : factor_layout(cfg))
                out.push_back({prefix + which + "." + f.name, f.rows, f.cols, f.groups, f.size()});
        }
        const std::size_t h4 = ops[k].second.m;
        out.push_back({prefix + "bias", h4, 1, 1, h4});
    }
    return out;
}

}  // namespace

std::size_t payload_bytes(const LstmModel& model) { return model.param_count() * sizeof(float); }

std::vector<std::uint8_t> serialize_model(const LstmModel& model) {
    model.validate();
    std::vector<std::pair<CompressionConfig, CompressionConfig>> ops;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& cell : model.layers) {
        ops.emplace_back(cell.w_input.config(), cell.w_hidden.config());
        layers.push_back({{"input_dim", cell.input_dim},
                          {"hidden_dim", cell.hidden_dim},
                          {"w_input", cell.w_input.config()},
                          {"w_hidden", cell.w_hidden.config()}});
    }
    nlohmann::json arrays = nlohmann::json::array();
    for (const auto& a : expected_manifest(ops)) arrays.push_back(array_json(a));

    nlohmann::json meta = {{"name", model.metadata.name},
                           {"seed", model.metadata.seed},
                           {"creation", model.metadata.creation},
                           {"gate_order", kGateOrder},
                           {"dtype", "float32"},
                           {"layers", layers},
                           {"arrays", arrays}};
    const std::string text = meta.dump();

    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_le<std::uint32_t>(out, kFormatVersion);
    put_le<std::uint64_t>(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    out.reserve(out.size() + payload_bytes(model));

    auto write_array = [&](std::span<const double> values) {
        for (double v : values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    };
    for (const auto& cell : model.layers) {
        for (auto f : cell.w_input.factors()) write_array(f);
        for (auto f : cell.w_hidden.factors()) write_array(f);
        write_array(cell.bias);
    }
    return out;
}

LstmModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError(FormatErrorKind::BadMagic, "file does not start with ANTM");
    if (bytes.size() < kHeaderSize) throw FormatError(FormatErrorKind::Truncated, "header is incomplete");
    const auto version = get_le<std::uint32_t>(bytes.data() + 4);
    if (version != kFormatVersion)
        throw FormatError(FormatErrorKind::VersionMismatch,
                          "file version " + std::to_string(version) + ", reader expects " +
                              std::to_string(kFormatVersion));
    const auto meta_len = get_le<std::uint64_t>(bytes.data() + 8);
    if (meta_len > bytes.size() - kHeaderSize)
        throw FormatError(FormatErrorKind::Truncated, "metadata runs past end of file");

    nlohmann::json meta;
    std::vector<std::pair<CompressionConfig, CompressionConfig>> ops;
    std::vector<ArrayEntry> declared;
    LstmModel model;
    try {
        meta = nlohmann::json::parse(bytes.begin() + kHeaderSize, bytes.begin() + kHeaderSize + static_cast<std::ptrdiff_t>(meta_len));
        model.metadata.name = meta.at("name").get<std::string>();
        model.metadata.seed = meta.at("seed").get<std::uint64_t>();
        model.metadata.creation = meta.at("creation");
        for (const auto& layer : meta.at("layers")) {
            ops.emplace_back(layer.at("w_input").get<CompressionConfig>(),
                             layer.at("w_hidden").get<CompressionConfig>());
            const auto i = layer.at("input_dim").get<std::size_t>();
            const auto h = layer.at("hidden_dim").get<std::size_t>();
            const auto& [cin, chid] = ops.back();
            if (cin.n != i || chid.n != h || cin.m != 4 * h || chid.m != 4 * h)
                throw FormatError(FormatErrorKind::ManifestMismatch, "layer operator dims disagree with input_dim/hidden_dim");
        }
        for (const auto& a : meta.at("arrays")) {
            declared.push_back({a.at("name").get<std::string>(), a.at("rows").get<std::size_t>(),
                                a.at("cols").get<std::size_t>(), a.at("groups").get<std::size_t>(),
                                a.at("count").get<std::size_t>()});
        }
        if (meta.at("gate_order") != nlohmann::json(kGateOrder))
            throw FormatError(FormatErrorKind::ManifestMismatch, "unsupported gate order");
    } catch (const FormatError&) {
        throw;
    } catch (const ConfigError& e) {
        throw FormatError(FormatErrorKind::ManifestMismatch, e.what());
    } catch (const std::exception& e) {
        throw FormatError(FormatErrorKind::MalformedMetadata, e.what());
    }

    for (std::size_t k = 1; k < ops.size(); ++k) {
        if (ops[k].first.n != ops[k - 1].second.n)
            throw FormatError(FormatErrorKind::ManifestMismatch, "layer input_dim must equal previous hidden_dim");
    }
    std::vector<ArrayEntry> expected;
    try {
        expected = expected_manifest(ops);
    } catch (const ConfigError& e) {
        throw FormatError(FormatErrorKind::ManifestMismatch, e.what());
    }
    if (declared.size() != expected.size())
        throw FormatError(FormatErrorKind::ManifestMismatch, "array count disagrees with layer configs");
    std::size_t total = 0;
    for (std::size_t a = 0; a < expected.size(); ++a) {
        const auto& d = declared[a];
        const auto& e = expected[a];
        if (d.name != e.name || d.rows != e.rows || d.cols != e.cols || d.groups != e.groups || d.count != e.count)
            throw FormatError(FormatErrorKind::ManifestMismatch, "array '" + d.name + "' does not match expected '" + e.name + "'");
        total += e.count;
    }

    const std::size_t offset = kHeaderSize + meta_len;
    const std::size_t available = bytes.size() - offset;
    if (available < total * 4)
        throw FormatError(FormatErrorKind::Truncated, "payload holds " + std::to_string(available) +
                                                          " bytes, manifest needs " + std::to_string(total * 4));
    if (available > total * 4)
        throw FormatError(FormatErrorKind::ManifestMismatch, "trailing bytes after payload");

    const std::uint8_t* cursor = bytes.data() + offset;
    auto read_array = [&](std::size_t count) {
        std::vector<double> values(count);
        for (double& v : values) {
            v = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(cursor)));
            cursor += 4;
        }
        return values;
    };
    for (const auto& [cin, chid] : ops) {
        auto read_op = [&](const CompressionConfig& cfg) {
            std::vector<std::vector<double>> factors;
            for (const auto& f : factor_layout(cfg)) factors.push_back(read_array(f.size()));
            return CompressedLinear::from_factors(cfg, std::move(factors));
        };
        auto w_in = read_op(cin);
        auto w_h = read_op(chid);
        auto bias = read_array(chid.m);
        model.layers.emplace_back(std::move(w_in), std::move(w_h), std::move(bias));
    }
    return model;
}

void save_model(const LstmModel& model, const std::filesystem::path& path) {
    const auto bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatErrorKind::Io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError(FormatErrorKind::Io, "write failed for " + path.string());
}

LstmModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatErrorKind::Io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

}  // namespace antman
