#pragma once

// ANTM model files.
//
//   offset 0   4 bytes   magic "ANTM"
//   offset 4   u32 LE    format version (kFormatVersion)
//   offset 8   u64 LE    metadata length L
//   offset 16  L bytes   UTF-8 JSON metadata
//   then       raw little-endian float32 arrays, in metadata "arrays" order
//
// Weights are held as float64 in memory and stored as float32.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "antman/lstm.hpp"

namespace antman {

inline constexpr std::uint32_t kFormatVersion = 1;

enum class FormatErrorKind { BadMagic, VersionMismatch, Truncated, MalformedMetadata, ManifestMismatch, Io };

std::string_view to_string(FormatErrorKind kind);

class FormatError : public std::runtime_error {
public:
    FormatError(FormatErrorKind kind, const std::string& detail)
        : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

    FormatErrorKind kind() const noexcept { return kind_; }

private:
    FormatErrorKind kind_;
};

std::vector<std::uint8_t> serialize_model(const LstmModel& model);
LstmModel deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_model(const LstmModel& model, const std::filesystem::path& path);
LstmModel load_model(const std::filesystem::path& path);

/// Size of the float32 weight payload (params * 4), excluding header and metadata.
std::size_t payload_bytes(const LstmModel& model);

}  // namespace antman
