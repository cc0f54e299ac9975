#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "antman/model_io.hpp"

using namespace antman;

namespace {

LstmModel sample_model() {
    auto model = make_lstm_model({8, 16, 8}, CompressionConfig::lowrank_lgp(0, 0, 2, 2, 4), 2024, "sample");
    // Second layer with a different operator kind on the hidden transform.
    model.layers[1] = LstmCell(init_weights(CompressionConfig::lgp_shuffle(32, 16, 4), 5),
                               init_weights(CompressionConfig::lgp_dense(32, 8, 2), 6), std::vector<double>(32, 0.25));
    return model;
}

FormatErrorKind error_kind(const std::vector<std::uint8_t>& bytes) {
    try {
        deserialize_model(bytes);
    } catch (const FormatError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected a FormatError";
    return FormatErrorKind::Io;
}

std::uint64_t metadata_length(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(bytes[8 + i]) << (8 * i);
    return len;
}

std::vector<std::uint8_t> with_metadata(const std::vector<std::uint8_t>& bytes, const std::string& meta) {
    const auto old_len = metadata_length(bytes);
    std::vector<std::uint8_t> out(bytes.begin(), bytes.begin() + 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(meta.size() >> (8 * i)));
    out.insert(out.end(), meta.begin(), meta.end());
    out.insert(out.end(), bytes.begin() + 16 + static_cast<std::ptrdiff_t>(old_len), bytes.end());
    return out;
}

std::string metadata_text(const std::vector<std::uint8_t>& bytes) {
    return {bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(metadata_length(bytes))};
}

}  // namespace

TEST(ModelFormat, HeaderLayout) {
    const auto bytes = serialize_model(sample_model());
    ASSERT_GE(bytes.size(), 16u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "ANTM");
    EXPECT_EQ(bytes[4], kFormatVersion);
    EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
    const auto meta = nlohmann::json::parse(metadata_text(bytes));
    EXPECT_EQ(meta["gate_order"], nlohmann::json({"input", "forget", "cell", "output"}));
    EXPECT_EQ(meta["layers"].size(), 2u);
    EXPECT_EQ(meta["layers"][0]["w_input"]["kind"], "lowrank-lgp");
    EXPECT_EQ(meta["layers"][0]["w_input"]["g_in"], 2);
    EXPECT_EQ(meta["arrays"][0]["name"], "layers.0.w_input.d_in");
    const auto model = sample_model();
    EXPECT_EQ(bytes.size(), 16 + metadata_length(bytes) + payload_bytes(model));
}

TEST(ModelFormat, PayloadIsLittleEndianFloat32) {
    LstmModel model;
    model.metadata.name = "tiny";
    model.layers.emplace_back(CompressedLinear::dense(DenseMatrix(4, 1, {1.5, -2.0, 0.0, 3.25})),
                              CompressedLinear::dense(DenseMatrix(4, 1, {0.5, 0.5, 0.5, 0.5})),
                              std::vector<double>{1, 2, 3, 4});
    const auto bytes = serialize_model(model);
    const std::size_t offset = 16 + metadata_length(bytes);
    ASSERT_EQ(bytes.size(), offset + 12 * 4);
    auto float_at = [&](std::size_t k) {
        std::uint32_t u = 0;
        for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(bytes[offset + 4 * k + i]) << (8 * i);
        return std::bit_cast<float>(u);
    };
    EXPECT_EQ(float_at(0), 1.5f);
    EXPECT_EQ(float_at(1), -2.0f);
    EXPECT_EQ(float_at(3), 3.25f);
    EXPECT_EQ(float_at(4), 0.5f);
    EXPECT_EQ(float_at(11), 4.0f);
}

TEST(ModelFormat, SaveLoadSaveIsByteIdentical) {
    const auto dir = std::filesystem::temp_directory_path() / "antman_model_io_test";
    std::filesystem::create_directories(dir);
    const auto model = sample_model();
    save_model(model, dir / "a.antm");
    const auto loaded = load_model(dir / "a.antm");
    save_model(loaded, dir / "b.antm");
    auto read = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::vector<char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    EXPECT_EQ(read(dir / "a.antm"), read(dir / "b.antm"));
    EXPECT_EQ(loaded.metadata.name, "sample");
    EXPECT_EQ(loaded.metadata.seed, 2024u);
    EXPECT_EQ(loaded.metadata.creation, model.metadata.creation);
    std::filesystem::remove_all(dir);
}

TEST(ModelFormat, StoredWeightsWithinFloat32Rounding) {
    const auto model = sample_model();
    const auto loaded = deserialize_model(serialize_model(model));
    ASSERT_EQ(loaded.layers.size(), model.layers.size());
    const double bound = std::ldexp(1.0, -24);
    std::size_t checked = 0;
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
        for (const auto* pair : {&model.layers[k].w_input, &model.layers[k].w_hidden}) {
            const auto& other = pair == &model.layers[k].w_input ? loaded.layers[k].w_input : loaded.layers[k].w_hidden;
            EXPECT_EQ(other.config(), pair->config());
            const auto a = pair->factors(), b = other.factors();
            for (std::size_t f = 0; f < a.size(); ++f) {
                for (std::size_t i = 0; i < a[f].size(); ++i) {
                    if (a[f][i] == 0.0) {
                        EXPECT_EQ(b[f][i], 0.0);
                    } else {
                        EXPECT_LE(std::abs(b[f][i] - a[f][i]) / std::abs(a[f][i]), bound);
                    }
                    ++checked;
                }
            }
        }
    }
    EXPECT_GT(checked, 500u);
    // A second pass through float32 is lossless.
    const auto again = deserialize_model(serialize_model(loaded));
    EXPECT_EQ(again.layers[0].w_input.materialize(), loaded.layers[0].w_input.materialize());
}

TEST(ModelFormat, BadMagic) {
    auto bytes = serialize_model(sample_model());
    bytes[0] = 'X';
    EXPECT_EQ(error_kind(bytes), FormatErrorKind::BadMagic);
    EXPECT_EQ(error_kind({}), FormatErrorKind::BadMagic);
}

TEST(ModelFormat, VersionMismatch) {
    auto bytes = serialize_model(sample_model());
    bytes[4] = 2;
    EXPECT_EQ(error_kind(bytes), FormatErrorKind::VersionMismatch);
}

TEST(ModelFormat, Truncated) {
    const auto bytes = serialize_model(sample_model());
    EXPECT_EQ(error_kind({bytes.begin(), bytes.begin() + 10}), FormatErrorKind::Truncated);
    EXPECT_EQ(error_kind({bytes.begin(), bytes.begin() + 40}), FormatErrorKind::Truncated);
    EXPECT_EQ(error_kind({bytes.begin(), bytes.end() - 4}), FormatErrorKind::Truncated);
}

TEST(ModelFormat, TrailingBytesAreAManifestMismatch) {
    auto bytes = serialize_model(sample_model());
    bytes.push_back(0);
    EXPECT_EQ(error_kind(bytes), FormatErrorKind::ManifestMismatch);
}

TEST(ModelFormat, ManifestMismatch) {
    const auto bytes = serialize_model(sample_model());
    auto meta = nlohmann::json::parse(metadata_text(bytes));

    auto wrong_count = meta;
    wrong_count["arrays"][0]["count"] = 1;
    EXPECT_EQ(error_kind(with_metadata(bytes, wrong_count.dump())), FormatErrorKind::ManifestMismatch);

    auto wrong_dims = meta;
    wrong_dims["layers"][0]["hidden_dim"] = 15;
    EXPECT_EQ(error_kind(with_metadata(bytes, wrong_dims.dump())), FormatErrorKind::ManifestMismatch);

    auto bad_config = meta;
    bad_config["layers"][0]["w_input"]["g_in"] = 3;
    EXPECT_EQ(error_kind(with_metadata(bytes, bad_config.dump())), FormatErrorKind::ManifestMismatch);

    auto dropped = meta;
    dropped["arrays"].erase(dropped["arrays"].size() - 1);
    EXPECT_EQ(error_kind(with_metadata(bytes, dropped.dump())), FormatErrorKind::ManifestMismatch);
}

TEST(ModelFormat, MalformedMetadata) {
    const auto bytes = serialize_model(sample_model());
    EXPECT_EQ(error_kind(with_metadata(bytes, "{not json")), FormatErrorKind::MalformedMetadata);
    EXPECT_EQ(error_kind(with_metadata(bytes, "{}")), FormatErrorKind::MalformedMetadata);
}

TEST(ModelFormat, MissingFileIsIoError) {
    try {
        load_model("/nonexistent/dir/model.antm");
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.kind(), FormatErrorKind::Io);
    }
}
