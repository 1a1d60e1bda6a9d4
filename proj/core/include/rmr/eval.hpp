#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rmr/context.hpp"
#include "rmr/dataset.hpp"
#include "rmr/extract.hpp"
#include "rmr/gateway.hpp"
#include "rmr/interchange.hpp"
#include "rmr/library.hpp"

namespace rmr::harness {

/// Report columns, in the order they are always emitted.
enum class Category { kNat, kSoc, kLan, kTxt, kImg, kNo, kGrade1To6, kGrade7To12, kAvg };

inline constexpr std::array<Category, 9> kReportColumns = {
    Category::kNat, Category::kSoc,       Category::kLan,        Category::kTxt, Category::kImg,
    Category::kNo,  Category::kGrade1To6, Category::kGrade7To12, Category::kAvg,
};

std::string_view to_string(Category category) noexcept;

/// Every category the record counts towards, AVG included.
std::vector<Category> categories_of(const EvalRecord& record);

struct CategoryCell {
  std::size_t correct = 0;
  std::size_t total = 0;

  /// Percent in [0, 100]; empty when the category has no records.
  std::optional<double> accuracy() const;
};

struct RunManifest {
  std::string endpoint;
  std::string model;
  std::string library_hash;
  std::string encoder_tag;
  std::uint64_t seed = 0;
  std::string scoring;
  std::string exclusion;
  std::string modality;
  std::vector<std::string> notes;
};

struct CategoryReport {
  std::string label;
  std::size_t k_used = 0;
  std::array<CategoryCell, kReportColumns.size()> cells{};
  RunManifest manifest;

  const CategoryCell& cell(Category c) const { return cells[static_cast<std::size_t>(c)]; }
  CategoryCell& cell(Category c) { return cells[static_cast<std::size_t>(c)]; }
  std::size_t record_count() const { return cell(Category::kAvg).total; }
};

enum class ModalityFilter { kAll, kTextAndImage, kTextOnly };
enum class ExclusionPolicy { kNone, kExcludeExactDuplicate };
enum class ScoringMode { kMultipleChoice, kDirectAnswer };

std::string_view to_string(ModalityFilter filter) noexcept;
std::string_view to_string(ExclusionPolicy policy) noexcept;
std::string_view to_string(ScoringMode mode) noexcept;
/// Throw kConfiguration on unknown names.
ModalityFilter parse_modality_filter(std::string_view text);
ExclusionPolicy parse_exclusion_policy(std::string_view text);
ScoringMode parse_scoring_mode(std::string_view text);

/// Whether a record survives `filter`: T&I keeps image-bearing records, T
/// keeps records without an image.
bool passes_filter(const EvalRecord& record, ModalityFilter filter);

/// Direct-answer scoring: the predicted answer (text after "answer:" if
/// present, else the first line), lowercased with surrounding whitespace and
/// trailing punctuation stripped, must equal one of the normalized
/// references.
bool direct_answer_match(std::string_view raw_text, std::span<const std::string> references);
std::string normalize_answer_text(std::string_view text);

struct RetrievedTrace {
  std::string id;
  float similarity = 0.0f;
  std::size_t rank = 0;
};

/// Everything that happened to one record in one run.
struct RecordTrace {
  std::string run_label;
  std::size_t k = 0;
  std::string record_id;
  std::size_t retriever_calls = 0;
  std::vector<RetrievedTrace> retrieved;
  std::size_t context_chars = 0;
  std::string prompt;
  std::string raw_completion;
  int attempts = 0;
  gateway::ExtractedAnswer extraction;
  std::size_t gold_index = 0;
  bool correct = false;
  std::optional<std::string> error;
  std::vector<std::string> warnings;
};

struct EvalInputs {
  std::span<const EvalRecord> records;
  /// Required when k > 0.
  const KnowledgeLibrary* library = nullptr;
  /// Query-side embeddings keyed by record id. Required when k > 0.
  const EmbeddingFile* query_embeddings = nullptr;
  /// Image refs are resolved against this directory when sending images to
  /// a live endpoint.
  std::filesystem::path image_root;
  /// Recorded in the run manifest; computed from the library when empty.
  std::string library_hash;
};

struct EvalOptions {
  std::size_t k = 3;
  ModalityFilter filter = ModalityFilter::kAll;
  ExclusionPolicy exclusion = ExclusionPolicy::kNone;
  ScoringMode scoring = ScoringMode::kMultipleChoice;
  context::ContextOptions context;
  std::string preamble{context::kDefaultPreamble};
  std::string instruction{context::kDefaultInstruction};
  std::uint64_t seed = 0;
  /// Report row label; defaults to "k=<k>".
  std::string label;
};

struct EvalResult {
  CategoryReport report;
  std::vector<RecordTrace> traces;  // sorted by record id
  std::vector<std::string> warnings;
};

/// Runs the full pipeline for every record passing the filter: fuse the
/// query embedding, retrieve top-k, assemble the context, render the prompt,
/// complete, extract and score. k = 0 skips retrieval entirely.
///
/// Per-record failures (missing embeddings, endpoint errors) are scored as
/// wrong and recorded in the trace. Configuration problems throw
/// (kConfiguration); an empty filtered set throws kEmptyPartition.
EvalResult run_eval(const EvalInputs& inputs, const gateway::Gateway& gateway, const EvalOptions& options);

/// One run per k, in the given order, each labeled "k=<k>".
std::vector<EvalResult> run_k_sweep(const EvalInputs& inputs, const gateway::Gateway& gateway,
                                    std::span<const std::size_t> k_values, const EvalOptions& options);

/// All / T&I / T runs, labeled accordingly. Throws kEmptyPartition when a
/// filter leaves no records.
std::array<EvalResult, 3> run_modality_ablation(const EvalInputs& inputs, const gateway::Gateway& gateway,
                                                const EvalOptions& options);

/// One JSON object per record, runs in order. Errors: kIoFailure.
void write_traces(const std::filesystem::path& path, std::span<const EvalResult> results);
std::string trace_to_json_line(const RecordTrace& trace);

}  // namespace rmr::harness
