#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rmr/embedding.hpp"
#include "rmr/library.hpp"

namespace rmr::harness {

/// One line of the embedding interchange file, as written by the embedder.
struct EmbeddingRecord {
  std::string id;
  std::optional<EmbeddingVector> text_embedding;
  std::optional<EmbeddingVector> image_embedding;
};

/// The embedding interchange file: a manifest line
/// {"manifest":1,"dim":D,"encoder_tag":S} followed by one EmbeddingRecord
/// object per line ({"id", "text_embedding", "image_embedding", "dim",
/// "encoder_tag"}, embeddings as float lists or null).
class EmbeddingFile {
 public:
  EmbeddingFile(std::size_t dim, std::string encoder_tag, std::vector<EmbeddingRecord> records);

  std::size_t dim() const noexcept { return dim_; }
  const std::string& encoder_tag() const noexcept { return encoder_tag_; }
  const std::vector<EmbeddingRecord>& records() const noexcept { return records_; }
  const EmbeddingRecord* find(std::string_view id) const;

 private:
  std::size_t dim_;
  std::string encoder_tag_;
  std::vector<EmbeddingRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Errors: kIoFailure, kParseError / kMissingField (with line locus),
/// kDimensionMismatch, kBothModalitiesAbsent, kNonFiniteInput, kDuplicateId.
EmbeddingFile load_embeddings(const std::filesystem::path& path);

/// Parses a single EmbeddingRecord object, e.g. the embedder's stdout for one
/// query. The "encoder_tag" field, if any, is returned through `encoder_tag`.
EmbeddingRecord parse_embedding_record(std::string_view json_text, std::string* encoder_tag = nullptr);

/// The record's embeddings, L2-normalized, as fusion input. Zero vectors are
/// rejected with kZeroNormVector.
ModalityInput to_modality_input(const EmbeddingRecord& record);

}  // namespace rmr::harness
