#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rmr/embedding.hpp"
#include "rmr/library.hpp"

namespace rmr::index {

/// a.b / (|a| |b|), clamped to [-1, 1]. Computed in f32 with sequential
/// accumulation.
/// Errors: kDimensionMismatch, kZeroNormVector.
float cosine_similarity(std::span<const float> a, std::span<const float> b);
float cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct RetrievedEntry {
  std::string item_id;
  std::size_t item_index = 0;  // ingest position in the library
  float similarity = 0.0f;
  std::size_t rank = 0;
};

struct RetrievedSet {
  std::vector<RetrievedEntry> entries;
  std::size_t k_requested = 0;
  std::optional<std::string> query_id;
};

/// Exact top-k by cosine similarity. Ranked by similarity descending, ties
/// broken by ascending ingest index. Ids in `exclude_ids` that are not in the
/// library are ignored.
///
/// Errors: kInvalidArgument (k == 0), kDimensionMismatch, kZeroNormVector,
/// kEmptyLibraryAfterExclusion.
RetrievedSet top_k_retrieve(const KnowledgeLibrary& library, const EmbeddingVector& query,
                            std::size_t k, std::span<const std::string> exclude_ids = {});

}  // namespace rmr::index
