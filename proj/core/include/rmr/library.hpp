#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rmr/embedding.hpp"

namespace rmr {

/// A query or library entry split into its text and image parts. Either part
/// may be missing, but not both.
struct ModalityInput {
  std::optional<std::string> text;
  std::optional<std::string> image_ref;
  std::optional<EmbeddingVector> text_embedding;
  std::optional<EmbeddingVector> image_embedding;
};

/// Copy of `input` with every present embedding L2-normalized. Rejects zero
/// vectors with kZeroNormVector.
ModalityInput with_unit_embeddings(ModalityInput input);

/// Modality-adaptive fusion: the mean of the text and image embeddings when
/// both are present, otherwise whichever one exists (returned unchanged).
/// Embeddings are expected to be unit-normalized already; the mean is not
/// renormalized.
EmbeddingVector fuse_embeddings(const ModalityInput& input);

struct QraTriplet {
  std::string id;
  std::string question;
  std::string rationale;
  std::string answer;  // e.g. "(B) the ocean"
  std::vector<std::string> choices;
  std::map<std::string, std::string> metadata;
};

/// 'A' + index. Throws kInvalidArgument past 'Z'.
char choice_label(std::size_t index);

/// "(B) the ocean" for index 1.
std::string render_answer(std::span<const std::string> choices, std::size_t index);

/// Throws kInvalidTriplet when the id, question or answer is empty, or when
/// choices are present and the answer matches none or several of them.
void validate_triplet(const QraTriplet& triplet);

struct ModalityFlags {
  bool text = false;
  bool image = false;

  friend bool operator==(const ModalityFlags&, const ModalityFlags&) = default;
};

struct KnowledgeItem {
  QraTriplet triplet;
  EmbeddingVector embedding;
  ModalityFlags modalities;
};

/// Immutable collection of embedded QRA triplets. Embeddings are also kept in
/// one row-major matrix with cached row norms for scanning.
class KnowledgeLibrary {
 public:
  /// Validates the library invariants: non-empty, distinct ids, shared dim.
  static KnowledgeLibrary from_items(std::vector<KnowledgeItem> items, std::string encoder_tag);

  std::size_t count() const noexcept { return items_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::string& encoder_tag() const noexcept { return encoder_tag_; }

  std::span<const KnowledgeItem> items() const noexcept { return items_; }
  const KnowledgeItem& item(std::size_t index) const { return items_.at(index); }
  std::optional<std::size_t> find(std::string_view id) const;

  std::span<const float> row(std::size_t index) const noexcept {
    return std::span<const float>(matrix_).subspan(index * dim_, dim_);
  }
  float row_norm(std::size_t index) const noexcept { return norms_[index]; }
  std::span<const float> matrix() const noexcept { return matrix_; }

 private:
  KnowledgeLibrary() = default;

  std::vector<KnowledgeItem> items_;
  std::size_t dim_ = 0;
  std::string encoder_tag_;
  std::vector<float> matrix_;
  std::vector<float> norms_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

struct LibraryRecord {
  QraTriplet triplet;
  ModalityInput input;
};

/// Fuses each record's embeddings and builds the library in input order.
/// Errors: kEmptyInput, kDuplicateId, kDimensionMismatch, plus fusion errors.
KnowledgeLibrary build_library(std::span<const LibraryRecord> records, std::string encoder_tag);

}  // namespace rmr
