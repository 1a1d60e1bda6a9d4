#include "rmr/context.hpp"

#include <algorithm>

#include "rmr/error.hpp"

namespace rmr::context {
namespace {

std::string join_examples(const std::vector<std::string>& examples) {
  std::string out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (i > 0) out += kExampleSeparator;
    out += examples[i];
  }
  return out;
}

}  // namespace

std::size_t estimate_tokens(std::string_view text) noexcept { return (text.size() + 3) / 4; }

std::string format_choices(const std::vector<std::string>& choices) {
  std::string out;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (i > 0) out += ' ';
    out += '(';
    out += choice_label(i);
    out += ") ";
    out += choices[i];
  }
  return out;
}

std::string format_example(const QraTriplet& triplet) {
  std::string out = "Question: " + triplet.question + "\n";
  if (!triplet.choices.empty()) {
    out += "Options: " + format_choices(triplet.choices) + "\n";
  }
  out += "Rationale: " + triplet.rationale + "\n";
  out += "Answer: " + triplet.answer + "\n";
  return out;
}

ContextBlock assemble_context(const index::RetrievedSet& retrieved, const KnowledgeLibrary& library,
                              const ContextOptions& options) {
  ContextBlock block;
  for (const auto& entry : retrieved.entries) {
    auto index = library.find(entry.item_id);
    if (!index) {
      throw Error(ErrorCode::kUnknownItemId, "retrieved id '" + entry.item_id + "' is not in the library");
    }
    block.examples.push_back(format_example(library.item(*index).triplet));
    block.source_ids.push_back(entry.item_id);
  }

  block.rendered = join_examples(block.examples);
  if (options.token_budget) {
    const std::size_t budget = *options.token_budget;
    while (!block.examples.empty() && estimate_tokens(block.rendered) > budget) {
      if (block.examples.size() == 1) {
        throw Error(ErrorCode::kBudgetTooSmall,
                    "budget of " + std::to_string(budget) + " tokens cannot hold the top example (" +
                        std::to_string(estimate_tokens(block.rendered)) + " tokens)");
      }
      block.examples.pop_back();
      block.source_ids.pop_back();
      block.rendered = join_examples(block.examples);
    }
  }
  if (options.most_similar_last) {
    std::reverse(block.examples.begin(), block.examples.end());
    std::reverse(block.source_ids.begin(), block.source_ids.end());
    block.rendered = join_examples(block.examples);
  }
  block.token_estimate = estimate_tokens(block.rendered);
  return block;
}

std::string render_prompt(const PromptEnvelope& envelope) {
  if (envelope.query_question.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "prompt needs a non-empty question");
  }
  std::string out;
  if (!envelope.system_preamble.empty()) {
    out += envelope.system_preamble;
    out += "\n\n";
  }
  if (!envelope.context.rendered.empty()) {
    out += envelope.context.rendered;
    out += "\n\n";
  }
  if (envelope.query_hint && !envelope.query_hint->empty()) {
    out += "Context: " + *envelope.query_hint + "\n";
  }
  out += "Question: " + envelope.query_question + "\n";
  if (!envelope.query_choices.empty()) {
    out += "Options: " + format_choices(envelope.query_choices) + "\n";
  }
  out += envelope.instruction_suffix;
  return out;
}

}  // namespace rmr::context
