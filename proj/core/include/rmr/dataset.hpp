#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rmr/library.hpp"

namespace rmr::harness {

enum class Subject { kNatural, kSocial, kLanguage, kOther };

std::string_view to_string(Subject subject) noexcept;

/// Accepts "natural", "natural science", ... (case-insensitive); anything
/// else is kOther.
Subject parse_subject(std::string_view text);

struct EvalRecord {
  std::string id;
  std::string question;
  std::vector<std::string> choices;
  std::size_t gold_index = 0;
  std::optional<std::string> hint;       // text context
  std::optional<std::string> image_ref;  // relative to the image root
  Subject subject = Subject::kOther;
  std::optional<int> grade;  // 1-12

  // Used when the record goes into a knowledge library.
  std::string rationale;
  std::string topic;
  // Free-form answers for direct-answer scoring.
  std::vector<std::string> direct_answers;
};

inline bool has_text_context(const EvalRecord& r) { return r.hint && !r.hint->empty(); }
inline bool has_image(const EvalRecord& r) { return r.image_ref && !r.image_ref->empty(); }

/// Throws kBadGoldIndex or kParseError naming the record id.
void validate_record(const EvalRecord& record);

/// QRA triplet for the library: the answer is rendered as "(B) text" and
/// subject/topic/grade go into metadata.
QraTriplet to_triplet(const EvalRecord& record);

enum class DatasetFormat { kScienceQaJson, kGenericJsonl };

/// "scienceqa_json" or "generic_jsonl". Throws kConfiguration otherwise.
DatasetFormat parse_dataset_format(std::string_view tag);

struct DatasetOptions {
  /// ScienceQA only: keep problems whose "split" equals this.
  std::optional<std::string> split;
};

/// scienceqa_json: the problems.json layout, an object keyed by problem id.
/// Image refs become "<id>/<image>". The rationale is the solution text, or
/// the lecture when there is no solution.
///
/// generic_jsonl: one object per line with id, question, choices, gold_index
/// and optional hint, image, subject, grade, rationale, topic,
/// direct_answers.
///
/// Errors: kIoFailure, kParseError (with line or record locus),
/// kMissingField, kBadGoldIndex, kDuplicateId.
std::vector<EvalRecord> load_dataset(const std::filesystem::path& path, DatasetFormat format,
                                     const DatasetOptions& options = {});

}  // namespace rmr::harness
