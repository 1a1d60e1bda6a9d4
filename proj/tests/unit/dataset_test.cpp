#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "rmr/dataset.hpp"
#include "rmr/error.hpp"
#include "rmr/ingest.hpp"
#include "rmr/interchange.hpp"
#include "test_support.hpp"

namespace {

using namespace rmr::harness;
using rmr::ErrorCode;

template <typename Fn>
rmr::Error error_of(Fn&& fn) {
  try {
    fn();
  } catch (const rmr::Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected an rmr::Error";
  return rmr::Error(ErrorCode::kInvalidArgument, "none");
}

const char* kTwoProblems = R"({
  "101": {"question": "Which is a rock?", "choices": ["marble", "salt"], "answer": 0,
          "hint": "", "image": "image.png", "grade": "grade4", "subject": "natural science",
          "topic": "earth", "lecture": "Rocks are made of minerals.", "solution": "", "split": "train"},
  "102": {"question": "Which word is a verb?", "choices": ["run", "blue", "cat"], "answer": 0,
          "hint": "Verbs name actions.", "image": null, "grade": "grade9", "subject": "language science",
          "topic": "grammar", "lecture": "", "solution": "Run names an action.", "split": "test"}
})";

TEST(ScienceQa, LoadsProblems) {
  rmr_test::TempDir dir;
  rmr_test::write_text(dir / "problems.json", kTwoProblems);
  const auto records = load_dataset(dir / "problems.json", DatasetFormat::kScienceQaJson);
  ASSERT_EQ(records.size(), 2u);
  const auto& a = records[0];
  EXPECT_EQ(a.id, "101");
  EXPECT_EQ(a.subject, Subject::kNatural);
  EXPECT_EQ(a.grade, std::optional<int>(4));
  EXPECT_EQ(a.image_ref, std::optional<std::string>("101/image.png"));
  EXPECT_FALSE(has_text_context(a));
  EXPECT_TRUE(has_image(a));
  EXPECT_EQ(a.rationale, "Rocks are made of minerals.");
  const auto& b = records[1];
  EXPECT_EQ(b.subject, Subject::kLanguage);
  EXPECT_EQ(b.rationale, "Run names an action.");
  EXPECT_TRUE(has_text_context(b));
  EXPECT_FALSE(has_image(b));
}

TEST(ScienceQa, SplitFilter) {
  rmr_test::TempDir dir;
  rmr_test::write_text(dir / "problems.json", kTwoProblems);
  DatasetOptions opts;
  opts.split = "test";
  const auto records = load_dataset(dir / "problems.json", DatasetFormat::kScienceQaJson, opts);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].id, "102");
}

TEST(ScienceQa, BadGoldIndexNamesRecord) {
  rmr_test::TempDir dir;
  rmr_test::write_text(dir / "p.json", R"({"77": {"question": "q", "choices": ["a","b","c","d"], "answer": 5}})");
  const auto e = error_of([&] { load_dataset(dir / "p.json", DatasetFormat::kScienceQaJson); });
  EXPECT_EQ(e.code(), ErrorCode::kBadGoldIndex);
  EXPECT_NE(std::string(e.what()).find("77"), std::string::npos);
}

TEST(ScienceQa, ParseErrors) {
  rmr_test::TempDir dir;
  rmr_test::write_text(dir / "bad.json", "{ not json");
  EXPECT_EQ(error_of([&] { load_dataset(dir / "bad.json", DatasetFormat::kScienceQaJson); }).code(),
            ErrorCode::kParseError);
  rmr_test::write_text(dir / "missing.json", R"({"1": {"choices": ["a","b"], "answer": 0}})");
  EXPECT_EQ(error_of([&] { load_dataset(dir / "missing.json", DatasetFormat::kScienceQaJson); }).code(),
            ErrorCode::kMissingField);
  EXPECT_EQ(error_of([&] { load_dataset(dir / "nope.json", DatasetFormat::kScienceQaJson); }).code(),
            ErrorCode::kIoFailure);
}

TEST(GenericJsonl, EmptyHintWithImageIsImageOnly) {
  rmr_test::TempDir dir;
  rmr_test::write_text(dir / "d.jsonl",
                       R"({"id":"x","question":"q?","choices":["a","b"],"gold_index":1,"hint":"","image":"x.png"})"
                       "\n");
  const auto records = load_dataset(dir / "d.jsonl", DatasetFormat::kGenericJsonl);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_TRUE(has_image(records[0]));
  EXPECT_FALSE(has_text_context(records[0]));
  EXPECT_EQ(records[0].subject, Subject::kOther);
}

TEST(GenericJsonl, LineLocusInErrors) {
  rmr_test::TempDir dir;
  rmr_test::write_text(dir / "d.jsonl",
                       R"({"id":"a","question":"q?","choices":["a","b"],"gold_index":0})"
                       "\n{broken\n");
  const auto e = error_of([&] { load_dataset(dir / "d.jsonl", DatasetFormat::kGenericJsonl); });
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
}

TEST(GenericJsonl, Guards) {
  rmr_test::TempDir dir;
  rmr_test::write_text(dir / "one.jsonl", R"({"id":"a","question":"q?","choices":["a"],"gold_index":0})" "\n");
  EXPECT_EQ(error_of([&] { load_dataset(dir / "one.jsonl", DatasetFormat::kGenericJsonl); }).code(),
            ErrorCode::kParseError);
  rmr_test::write_text(dir / "dup.jsonl",
                       R"({"id":"a","question":"q?","choices":["a","b"],"gold_index":0})"
                       "\n"
                       R"({"id":"a","question":"r?","choices":["a","b"],"gold_index":0})"
                       "\n");
  EXPECT_EQ(error_of([&] { load_dataset(dir / "dup.jsonl", DatasetFormat::kGenericJsonl); }).code(),
            ErrorCode::kDuplicateId);
  rmr_test::write_text(dir / "grade.jsonl",
                       R"({"id":"a","question":"q?","choices":["a","b"],"gold_index":0,"grade":13})" "\n");
  EXPECT_EQ(error_of([&] { load_dataset(dir / "grade.jsonl", DatasetFormat::kGenericJsonl); }).code(),
            ErrorCode::kParseError);
}

TEST(Dataset, FormatAndSubjectParsing) {
  EXPECT_EQ(parse_dataset_format("scienceqa_json"), DatasetFormat::kScienceQaJson);
  EXPECT_EQ(parse_dataset_format("generic_jsonl"), DatasetFormat::kGenericJsonl);
  EXPECT_EQ(error_of([] { parse_dataset_format("csv"); }).code(), ErrorCode::kConfiguration);
  EXPECT_EQ(parse_subject("social science"), Subject::kSocial);
  EXPECT_EQ(parse_subject("language"), Subject::kLanguage);
  EXPECT_EQ(parse_subject("music"), Subject::kOther);
}

TEST(Dataset, ToTripletRendersAnswer) {
  EvalRecord r;
  r.id = "r";
  r.question = "q?";
  r.choices = {"x", "y"};
  r.gold_index = 1;
  r.rationale = "because";
  r.subject = Subject::kSocial;
  r.grade = 3;
  const auto t = to_triplet(r);
  EXPECT_EQ(t.answer, "(B) y");
  EXPECT_EQ(t.metadata.at("grade"), "3");
  EXPECT_NO_THROW(rmr::validate_triplet(t));
}

TEST(Interchange, LoadsFixture) {
  const auto file = load_embeddings(rmr_test::fixture_path("handbuilt/embeddings.jsonl"));
  EXPECT_EQ(file.dim(), 8u);
  EXPECT_EQ(file.encoder_tag(), "handbuilt-8");
  ASSERT_EQ(file.records().size(), 8u);
  const auto* r2 = file.find("r2");
  ASSERT_NE(r2, nullptr);
  EXPECT_TRUE(r2->text_embedding.has_value());
  EXPECT_TRUE(r2->image_embedding.has_value());
  EXPECT_FALSE(file.find("r1")->image_embedding.has_value());
}

TEST(Interchange, Errors) {
  rmr_test::TempDir dir;
  auto write = [&](const std::string& body) {
    rmr_test::write_text(dir / "e.jsonl", "{\"manifest\":1,\"dim\":2,\"encoder_tag\":\"t\"}\n" + body);
    return dir / "e.jsonl";
  };
  EXPECT_EQ(error_of([&] { load_embeddings(write(R"({"id":"a","text_embedding":[1,0,0]})" "\n")); }).code(),
            ErrorCode::kDimensionMismatch);
  EXPECT_EQ(error_of([&] { load_embeddings(write(R"({"id":"a","text_embedding":null,"image_embedding":null})" "\n")); })
                .code(),
            ErrorCode::kBothModalitiesAbsent);
  EXPECT_EQ(error_of([&] { load_embeddings(write(R"({"id":"a","text_embedding":[0,0]})" "\n")); }).code(),
            ErrorCode::kZeroNormVector);
  EXPECT_EQ(error_of([&] {
              load_embeddings(write(R"({"id":"a","text_embedding":[1,0]})"
                                    "\n"
                                    R"({"id":"a","text_embedding":[0,1]})"
                                    "\n"));
            }).code(),
            ErrorCode::kDuplicateId);
  EXPECT_EQ(error_of([&] { load_embeddings(write(R"({"text_embedding":[1,0]})" "\n")); }).code(),
            ErrorCode::kMissingField);
  rmr_test::write_text(dir / "nomanifest.jsonl", R"({"id":"a","text_embedding":[1,0]})" "\n");
  EXPECT_EQ(error_of([&] { load_embeddings(dir / "nomanifest.jsonl"); }).code(), ErrorCode::kParseError);
}

TEST(Interchange, SingleRecordNormalizedForFusion) {
  std::string tag;
  const auto rec = parse_embedding_record(R"({"id":"q","text_embedding":[3,4],"image_embedding":null,"dim":2,"encoder_tag":"enc"})",
                                          &tag);
  EXPECT_EQ(tag, "enc");
  const auto input = to_modality_input(rec);
  EXPECT_FLOAT_EQ((*input.text_embedding)[0], 0.6f);
  EXPECT_FLOAT_EQ((*input.text_embedding)[1], 0.8f);
  EXPECT_FALSE(input.image_embedding.has_value());
}

TEST(Ingest, JoinsByIdAndWarnsOnGaps) {
  const auto records = load_dataset(rmr_test::fixture_path("handbuilt/records.jsonl"), DatasetFormat::kGenericJsonl);
  const auto full = load_embeddings(rmr_test::fixture_path("handbuilt/embeddings.jsonl"));
  const auto result = ingest_library(records, full);
  EXPECT_EQ(result.library.count(), 8u);
  EXPECT_EQ(result.library.dim(), 8u);
  EXPECT_EQ(result.skipped_records, 0u);
  EXPECT_TRUE(result.warnings.empty());
  EXPECT_EQ(result.library.item(1).modalities, (rmr::ModalityFlags{true, true}));

  std::vector<EmbeddingRecord> partial(full.records().begin() + 1, full.records().end());
  EmbeddingRecord stray;
  stray.id = "stray";
  stray.text_embedding = rmr::EmbeddingVector(std::vector<float>(8, 1.0f));
  partial.push_back(stray);
  const EmbeddingFile some(8, "handbuilt-8", partial);
  const auto r2 = ingest_library(records, some);
  EXPECT_EQ(r2.library.count(), 7u);
  EXPECT_EQ(r2.skipped_records, 1u);
  EXPECT_EQ(r2.warnings.size(), 2u);
}

TEST(Ingest, SyntheticFixtureCountsMatch) {
  const auto records =
      load_dataset(rmr_test::fixture_path("synthetic/problems.json"), DatasetFormat::kScienceQaJson);
  const auto embeddings = load_embeddings(rmr_test::fixture_path("synthetic/embeddings.jsonl"));
  const auto result = ingest_library(records, embeddings);
  EXPECT_EQ(result.library.count(), embeddings.records().size());
  EXPECT_EQ(result.library.dim(), embeddings.dim());
  for (const auto& item : result.library.items()) {
    if (!item.modalities.image) {
      EXPECT_NEAR(item.embedding.norm(), 1.0f, 1e-6);
    }
    EXPECT_LE(item.embedding.norm(), 1.0f + 1e-6f);
  }
}

}  // namespace
