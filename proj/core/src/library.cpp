#include "rmr/library.hpp"

#include <cmath>

#include "rmr/error.hpp"

namespace rmr {

ModalityInput with_unit_embeddings(ModalityInput input) {
  if (input.text_embedding) {
    input.text_embedding = input.text_embedding->normalized();
  }
  if (input.image_embedding) {
    input.image_embedding = input.image_embedding->normalized();
  }
  return input;
}

EmbeddingVector fuse_embeddings(const ModalityInput& input) {
  const auto& text = input.text_embedding;
  const auto& image = input.image_embedding;
  if (!text && !image) {
    throw Error(ErrorCode::kBothModalitiesAbsent, "input has neither a text nor an image embedding");
  }
  if (!text) {
    return *image;
  }
  if (!image) {
    return *text;
  }
  if (text->dim() != image->dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "text embedding has dim " +
                                                   std::to_string(text->dim()) + ", image has " +
                                                   std::to_string(image->dim()));
  }
  std::vector<float> fused(text->dim());
  for (std::size_t i = 0; i < fused.size(); ++i) {
    fused[i] = ((*text)[i] + (*image)[i]) / 2.0f;
    if (!std::isfinite(fused[i])) {
      throw Error(ErrorCode::kNonFiniteInput, "fused embedding overflowed at entry " + std::to_string(i));
    }
  }
  return EmbeddingVector(std::move(fused));
}

char choice_label(std::size_t index) {
  if (index >= 26) {
    throw Error(ErrorCode::kInvalidArgument, "at most 26 choices can be labeled");
  }
  return static_cast<char>('A' + index);
}

std::string render_answer(std::span<const std::string> choices, std::size_t index) {
  if (index >= choices.size()) {
    throw Error(ErrorCode::kInvalidArgument, "answer index out of range");
  }
  return std::string("(") + choice_label(index) + ") " + choices[index];
}

void validate_triplet(const QraTriplet& triplet) {
  if (triplet.id.empty()) {
    throw Error(ErrorCode::kInvalidTriplet, "triplet id is empty");
  }
  if (triplet.question.empty()) {
    throw Error(ErrorCode::kInvalidTriplet, "triplet '" + triplet.id + "' has an empty question");
  }
  if (triplet.answer.empty()) {
    throw Error(ErrorCode::kInvalidTriplet, "triplet '" + triplet.id + "' has an empty answer");
  }
  if (triplet.choices.empty()) {
    return;
  }
  std::size_t matches = 0;
  for (std::size_t i = 0; i < triplet.choices.size(); ++i) {
    if (triplet.answer == triplet.choices[i] || triplet.answer == render_answer(triplet.choices, i)) {
      ++matches;
    }
  }
  if (matches != 1) {
    throw Error(ErrorCode::kInvalidTriplet, "answer of triplet '" + triplet.id + "' matches " +
                                                std::to_string(matches) + " choices, expected 1");
  }
}

KnowledgeLibrary KnowledgeLibrary::from_items(std::vector<KnowledgeItem> items, std::string encoder_tag) {
  if (items.empty()) {
    throw Error(ErrorCode::kEmptyInput, "a knowledge library needs at least one item");
  }
  KnowledgeLibrary lib;
  lib.dim_ = items.front().embedding.dim();
  lib.encoder_tag_ = std::move(encoder_tag);
  lib.by_id_.reserve(items.size());
  lib.matrix_.reserve(items.size() * lib.dim_);
  lib.norms_.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    validate_triplet(item.triplet);
    if (item.embedding.dim() != lib.dim_) {
      throw Error(ErrorCode::kDimensionMismatch, "item '" + item.triplet.id + "' has dim " +
                                                     std::to_string(item.embedding.dim()) +
                                                     ", library dim is " + std::to_string(lib.dim_));
    }
    if (!lib.by_id_.emplace(item.triplet.id, i).second) {
      throw Error(ErrorCode::kDuplicateId, "id '" + item.triplet.id + "' appears more than once");
    }
    const auto values = item.embedding.values();
    const float norm = std::sqrt(squared_norm(values));
    if (!(norm > 0.0f)) {
      throw Error(ErrorCode::kZeroNormVector, "item '" + item.triplet.id + "' has a zero embedding");
    }
    lib.matrix_.insert(lib.matrix_.end(), values.begin(), values.end());
    lib.norms_.push_back(norm);
  }
  lib.items_ = std::move(items);
  return lib;
}

std::optional<std::size_t> KnowledgeLibrary::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) {
    return std::nullopt;
  }
  return it->second;
}

KnowledgeLibrary build_library(std::span<const LibraryRecord> records, std::string encoder_tag) {
  if (records.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no records to build a library from");
  }
  std::vector<KnowledgeItem> items;
  items.reserve(records.size());
  for (const auto& record : records) {
    ModalityFlags flags{record.input.text_embedding.has_value(), record.input.image_embedding.has_value()};
    items.push_back(KnowledgeItem{record.triplet, fuse_embeddings(record.input), flags});
  }
  return KnowledgeLibrary::from_items(std::move(items), std::move(encoder_tag));
}

}  // namespace rmr
