#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rmr::gateway {

enum class ExtractionMethod { kLetterPattern, kChoiceTextMatch, kNone };

std::string_view to_string(ExtractionMethod method) noexcept;

struct ExtractedAnswer {
  std::optional<std::size_t> choice_index;
  ExtractionMethod method = ExtractionMethod::kNone;
  std::string note;
};

/// Maps free-form model output onto one of `choices`.
///
/// Letter patterns are tried first, in this order:
///   1. "answer is X", "answer: X", "answer is (X)" (keyword case-insensitive)
///   2. a leading "(X)", "X.", "X)", "X:" or a bare "X"
///   3. the first standalone "(X)" anywhere
/// where X is an uppercase letter naming an existing choice. Letters past the
/// last choice are skipped. Failing that, a choice wins if it is the only one
/// whose text occurs in the output (case-insensitive). Otherwise the method is
/// kNone and the answer counts as wrong.
ExtractedAnswer extract_answer(std::string_view raw_text, const std::vector<std::string>& choices);

}  // namespace rmr::gateway
