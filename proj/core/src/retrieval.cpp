#include "rmr/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "rmr/error.hpp"

namespace rmr::index {
namespace {

float clamp_unit(float v) { return std::clamp(v, -1.0f, 1.0f); }

float cosine_from_parts(float dot_product, float norm_a, float norm_b) {
  return clamp_unit(dot_product / (norm_a * norm_b));
}

struct Scored {
  float similarity;
  std::size_t index;
};

bool ranks_before(const Scored& a, const Scored& b) {
  if (a.similarity != b.similarity) {
    return a.similarity > b.similarity;
  }
  return a.index < b.index;
}

}  // namespace

float cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cannot compare dim " + std::to_string(a.size()) + " with dim " + std::to_string(b.size()));
  }
  const float norm_a = std::sqrt(squared_norm(a));
  const float norm_b = std::sqrt(squared_norm(b));
  if (!(norm_a > 0.0f) || !(norm_b > 0.0f)) {
    throw Error(ErrorCode::kZeroNormVector, "cosine similarity is undefined for a zero vector");
  }
  return cosine_from_parts(dot(a, b), norm_a, norm_b);
}

float cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  return cosine_similarity(a.values(), b.values());
}

RetrievedSet top_k_retrieve(const KnowledgeLibrary& library, const EmbeddingVector& query,
                            std::size_t k, std::span<const std::string> exclude_ids) {
  if (k == 0) {
    throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  }
  if (query.dim() != library.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "query dim " + std::to_string(query.dim()) +
                                                   " does not match library dim " +
                                                   std::to_string(library.dim()));
  }
  const float query_norm = query.norm();
  if (!(query_norm > 0.0f)) {
    throw Error(ErrorCode::kZeroNormVector, "query embedding is the zero vector");
  }

  std::vector<bool> excluded(library.count(), false);
  for (const auto& id : exclude_ids) {
    if (auto index = library.find(id)) {
      excluded[*index] = true;
    }
  }

  std::vector<Scored> scored;
  scored.reserve(library.count());
  for (std::size_t i = 0; i < library.count(); ++i) {
    if (excluded[i]) {
      continue;
    }
    const float sim = cosine_from_parts(dot(query.values(), library.row(i)), query_norm, library.row_norm(i));
    scored.push_back({sim, i});
  }
  if (scored.empty()) {
    throw Error(ErrorCode::kEmptyLibraryAfterExclusion, "every library item was excluded");
  }

  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    ranks_before);

  RetrievedSet out;
  out.k_requested = k;
  out.entries.reserve(take);
  for (std::size_t rank = 0; rank < take; ++rank) {
    const auto& s = scored[rank];
    out.entries.push_back({library.item(s.index).triplet.id, s.index, s.similarity, rank});
  }
  return out;
}

}  // namespace rmr::index
