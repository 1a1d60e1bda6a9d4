#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rmr/library.hpp"

namespace rmr::index {

// On-disk layout, all integers little-endian:
//
//   "RMRIDX1\0"                      8 bytes
//   u32 format_version               currently 1
//   u32 dim
//   u64 count
//   f32[count * dim]                 embedding matrix, row-major
//   count x (u32 byte_len, bytes)    UTF-8 item ids, ingest order
//   u64 byte_len, bytes              UTF-8 JSON: encoder_tag and per-item
//                                    question/rationale/answer/choices/
//                                    metadata/modalities
//   u32 crc32                        over every preceding byte
inline constexpr char kIndexMagic[8] = {'R', 'M', 'R', 'I', 'D', 'X', '1', '\0'};
inline constexpr std::uint32_t kIndexFormatVersion = 1;

std::vector<std::uint8_t> serialize_index(const KnowledgeLibrary& library);

/// Errors: kBadMagic, kVersionMismatch, kTruncatedFile, kChecksumMismatch,
/// kParseError (checksum valid but payload malformed).
KnowledgeLibrary deserialize_index(std::span<const std::uint8_t> bytes);

/// Writes atomically (temp file + rename). Errors: kIoFailure.
void save_index(const KnowledgeLibrary& library, const std::filesystem::path& path);

/// Errors: kIoFailure plus everything deserialize_index raises.
KnowledgeLibrary load_index(const std::filesystem::path& path);

/// CRC32 of the serialized form as 8 lowercase hex digits.
std::string library_fingerprint(const KnowledgeLibrary& library);

}  // namespace rmr::index
