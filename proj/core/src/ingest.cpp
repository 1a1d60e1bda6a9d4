#include "rmr/ingest.hpp"

#include <unordered_set>

#include "rmr/error.hpp"

namespace rmr::harness {

IngestResult ingest_library(std::span<const EvalRecord> records, const EmbeddingFile& embeddings) {
  std::vector<LibraryRecord> joined;
  std::vector<std::string> warnings;
  std::unordered_set<std::string> used;
  std::size_t skipped = 0;

  for (const auto& record : records) {
    const EmbeddingRecord* emb = embeddings.find(record.id);
    if (emb == nullptr) {
      warnings.push_back("record '" + record.id + "' has no embedding; skipped");
      ++skipped;
      continue;
    }
    used.insert(record.id);
    ModalityInput input = to_modality_input(*emb);
    input.text = record.question;
    input.image_ref = record.image_ref;
    if (has_image(record) && !input.image_embedding) {
      warnings.push_back("record '" + record.id + "' has an image but no image embedding; text only");
    }
    joined.push_back(LibraryRecord{to_triplet(record), std::move(input)});
  }
  for (const auto& emb : embeddings.records()) {
    if (!used.contains(emb.id)) {
      warnings.push_back("embedding '" + emb.id + "' matches no dataset record; ignored");
    }
  }
  if (joined.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no dataset record has a matching embedding");
  }
  return IngestResult{build_library(joined, embeddings.encoder_tag()), std::move(warnings), skipped};
}

}  // namespace rmr::harness
