#include <gtest/gtest.h>

#include <random>

#include "rmr/context.hpp"
#include "rmr/error.hpp"
#include "test_support.hpp"

namespace {

using namespace rmr::context;
using rmr::ErrorCode;

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const rmr::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an rmr::Error";
  return ErrorCode::kInvalidArgument;
}

rmr::QraTriplet marble() {
  rmr::QraTriplet t;
  t.id = "marble";
  t.question = "Is marble a mineral or a rock?";
  t.rationale = "Marble forms when limestone is changed by heat and pressure.";
  t.answer = "(B) a rock";
  t.choices = {"a mineral", "a rock"};
  return t;
}

std::vector<std::string> split_on(const std::string& s, const std::string& sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t at = s.find(sep); at != std::string::npos; at = s.find(sep, start)) {
    parts.push_back(s.substr(start, at - start));
    start = at + sep.size();
  }
  parts.push_back(s.substr(start));
  return parts;
}

// A three-item library and a query whose similarity ranking is item-1,
// item-0, item-2.
struct Fixture {
  rmr::KnowledgeLibrary lib = rmr_test::library_from_rows({{0.8f, 0.6f}, {1.0f, 0.0f}, {0.0f, 1.0f}});
  rmr::index::RetrievedSet retrieved = rmr::index::top_k_retrieve(lib, rmr::EmbeddingVector({1.0f, 0.1f}), 3);
};

TEST(FormatExample, MarbleTemplate) {
  EXPECT_EQ(format_example(marble()),
            "Question: Is marble a mineral or a rock?\n"
            "Options: (A) a mineral (B) a rock\n"
            "Rationale: Marble forms when limestone is changed by heat and pressure.\n"
            "Answer: (B) a rock\n");
}

TEST(FormatExample, NoChoicesDropsOptionsLine) {
  auto t = marble();
  t.choices.clear();
  const auto text = format_example(t);
  EXPECT_EQ(text.find("Options:"), std::string::npos);
  EXPECT_EQ(split_on(text, "\n").size(), 4u);  // three lines plus the trailing empty piece
}

TEST(FormatExample, RationaleNewlinesPreserved) {
  auto t = marble();
  t.rationale = "Step one.\nStep two.\n\nStep three.";
  EXPECT_NE(format_example(t).find("Rationale: Step one.\nStep two.\n\nStep three.\nAnswer:"), std::string::npos);
}

TEST(AssembleContext, RankOrderWithoutBudget) {
  Fixture f;
  const auto block = assemble_context(f.retrieved, f.lib);
  EXPECT_EQ(block.source_ids, (std::vector<std::string>{"item-1", "item-0", "item-2"}));
  ASSERT_EQ(block.examples.size(), 3u);
  EXPECT_EQ(block.examples[0], format_example(f.lib.item(1).triplet));
  EXPECT_EQ(split_on(block.rendered, std::string(kExampleSeparator)), block.examples);
  EXPECT_EQ(block.token_estimate, (block.rendered.size() + 3) / 4);
}

TEST(AssembleContext, EmptyRetrievalGivesEmptyBlock) {
  Fixture f;
  const auto block = assemble_context(rmr::index::RetrievedSet{}, f.lib);
  EXPECT_TRUE(block.examples.empty());
  EXPECT_EQ(block.rendered, "");
  EXPECT_EQ(block.token_estimate, 0u);
}

TEST(AssembleContext, BudgetAdmittingExactlyTwo) {
  Fixture f;
  const auto e1 = format_example(f.lib.item(1).triplet);
  const auto e0 = format_example(f.lib.item(0).triplet);
  const std::string two = e1 + std::string(kExampleSeparator) + e0;
  const std::size_t budget = (two.size() + 3) / 4;
  ContextOptions opts;
  opts.token_budget = budget;
  const auto block = assemble_context(f.retrieved, f.lib, opts);
  EXPECT_EQ(block.source_ids, (std::vector<std::string>{"item-1", "item-0"}));
  EXPECT_EQ(block.rendered, two);
  EXPECT_LE(block.token_estimate, budget);
}

TEST(AssembleContext, BudgetBelowTopExample) {
  Fixture f;
  ContextOptions opts;
  opts.token_budget = 3;
  EXPECT_EQ(code_of([&] { assemble_context(f.retrieved, f.lib, opts); }), ErrorCode::kBudgetTooSmall);
}

TEST(AssembleContext, LargerBudgetNeverKeepsFewer) {
  Fixture f;
  std::size_t previous = 0;
  for (std::size_t budget = 1; budget < 200; ++budget) {
    ContextOptions opts;
    opts.token_budget = budget;
    std::size_t kept = 0;
    try {
      kept = assemble_context(f.retrieved, f.lib, opts).examples.size();
    } catch (const rmr::Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kBudgetTooSmall);
    }
    EXPECT_GE(kept, previous);
    previous = kept;
  }
  EXPECT_EQ(previous, 3u);
}

TEST(AssembleContext, UnknownId) {
  Fixture f;
  auto bogus = f.retrieved;
  bogus.entries[1].item_id = "nope";
  EXPECT_EQ(code_of([&] { assemble_context(bogus, f.lib); }), ErrorCode::kUnknownItemId);
}

TEST(AssembleContext, MostSimilarLastReverses) {
  Fixture f;
  ContextOptions opts;
  opts.most_similar_last = true;
  const auto block = assemble_context(f.retrieved, f.lib, opts);
  EXPECT_EQ(block.source_ids, (std::vector<std::string>{"item-2", "item-0", "item-1"}));
}

TEST(AssembleContext, RenderedLengthGrowsWithK) {
  std::mt19937_64 rng(41);
  const auto rows = rmr_test::random_rows(rng, 30, 8);
  const auto lib = rmr_test::library_from_rows(rows);
  for (int q = 0; q < 10; ++q) {
    const rmr::EmbeddingVector query(rmr_test::random_gaussian(rng, 8));
    std::size_t previous = 0;
    for (std::size_t k = 1; k <= 10; ++k) {
      const auto block = assemble_context(rmr::index::top_k_retrieve(lib, query, k), lib);
      EXPECT_GE(block.rendered.size(), previous);
      previous = block.rendered.size();
    }
  }
}

TEST(RenderPrompt, BaselineWithoutContext) {
  PromptEnvelope env;
  env.system_preamble = "PRE";
  env.query_question = "Q?";
  env.query_choices = {"x", "y"};
  env.instruction_suffix = "SUF";
  EXPECT_EQ(render_prompt(env), "PRE\n\nQuestion: Q?\nOptions: (A) x (B) y\nSUF");
}

TEST(RenderPrompt, ExamplesPrecedeQuery) {
  Fixture f;
  PromptEnvelope env;
  env.context = assemble_context(f.retrieved, f.lib);
  env.query_hint = "Some context.";
  env.query_question = "Which one?";
  env.query_choices = {"x", "y"};
  const auto prompt = render_prompt(env);
  const auto ex = prompt.find(env.context.rendered);
  const auto hint = prompt.find("Context: Some context.\n");
  const auto q = prompt.find("Question: Which one?");
  ASSERT_NE(ex, std::string::npos);
  ASSERT_NE(hint, std::string::npos);
  EXPECT_LT(ex, hint);
  EXPECT_LT(hint, q);
  EXPECT_EQ(prompt.substr(prompt.size() - kDefaultInstruction.size()), kDefaultInstruction);
  EXPECT_EQ(render_prompt(env), prompt);
}

TEST(RenderPrompt, EmptyQuestionRejected) {
  PromptEnvelope env;
  EXPECT_EQ(code_of([&] { render_prompt(env); }), ErrorCode::kInvalidArgument);
}

}  // namespace
