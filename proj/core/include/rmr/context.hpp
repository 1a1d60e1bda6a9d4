#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rmr/library.hpp"
#include "rmr/retrieval.hpp"

namespace rmr::context {

/// Placed between rendered examples in ContextBlock::rendered.
inline constexpr std::string_view kExampleSeparator = "\n---\n";

inline constexpr std::string_view kDefaultPreamble =
    "Answer the multiple-choice question at the end. Any worked examples before it show a "
    "question, the reasoning that leads to its answer, and the answer; reason the same way.";

inline constexpr std::string_view kDefaultInstruction =
    "Answer with the option letter, then explain your reasoning.";

/// Coarse model-agnostic estimate: ceil(bytes / 4).
std::size_t estimate_tokens(std::string_view text) noexcept;

/// "(A) first (B) second ..."
std::string format_choices(const std::vector<std::string>& choices);

/// Question / Options / Rationale / Answer block, each section on its own
/// line. The Options line is omitted when there are no choices.
std::string format_example(const QraTriplet& triplet);

struct ContextBlock {
  std::vector<std::string> examples;
  std::vector<std::string> source_ids;
  std::string rendered;
  std::size_t token_estimate = 0;
};

struct ContextOptions {
  /// Whole examples are dropped from the least similar end until the
  /// rendered context fits.
  std::optional<std::size_t> token_budget;
  /// Present the most similar example last instead of first.
  bool most_similar_last = false;
};

/// Errors: kUnknownItemId, kBudgetTooSmall.
ContextBlock assemble_context(const index::RetrievedSet& retrieved, const KnowledgeLibrary& library,
                              const ContextOptions& options = {});

struct PromptEnvelope {
  std::string system_preamble{kDefaultPreamble};
  ContextBlock context;
  std::optional<std::string> query_hint;
  std::string query_question;
  std::vector<std::string> query_choices;
  std::optional<std::string> query_image_ref;
  std::string instruction_suffix{kDefaultInstruction};
};

/// Preamble, context examples, then the query block and the instruction,
/// separated by blank lines. Throws kInvalidArgument for an empty question.
std::string render_prompt(const PromptEnvelope& envelope);

}  // namespace rmr::context
