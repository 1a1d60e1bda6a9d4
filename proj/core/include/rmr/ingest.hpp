#pragma once

#include <span>
#include <string>
#include <vector>

#include "rmr/dataset.hpp"
#include "rmr/interchange.hpp"
#include "rmr/library.hpp"

namespace rmr::harness {

struct IngestResult {
  KnowledgeLibrary library;
  std::vector<std::string> warnings;
  std::size_t skipped_records = 0;
};

/// Joins dataset records with their embeddings by id and builds the library
/// in dataset order. Records without an embedding are skipped with a warning
/// (the embedder drops records whose image fails to decode); embedding
/// records without a dataset record are reported and ignored.
/// Errors: kEmptyInput when nothing matches, plus build_library errors.
IngestResult ingest_library(std::span<const EvalRecord> records, const EmbeddingFile& embeddings);

}  // namespace rmr::harness
