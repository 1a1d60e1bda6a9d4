#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "rmr/error.hpp"
#include "rmr/library.hpp"
#include "test_support.hpp"

namespace {

using rmr::EmbeddingVector;
using rmr::ErrorCode;
using rmr::ModalityInput;

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

bool bit_identical(const EmbeddingVector& a, const EmbeddingVector& b) {
  return a.dim() == b.dim() && std::memcmp(a.values().data(), b.values().data(), a.dim() * sizeof(float)) == 0;
}

TEST(EmbeddingVector, RejectsEmptyAndNonFinite) {
  EXPECT_EQ(code_of([] { EmbeddingVector v(std::vector<float>{}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { EmbeddingVector v({1.0f, std::numeric_limits<float>::quiet_NaN()}); }),
            ErrorCode::kNonFiniteInput);
  EXPECT_EQ(code_of([] { EmbeddingVector v({std::numeric_limits<float>::infinity()}); }),
            ErrorCode::kNonFiniteInput);
}

TEST(EmbeddingVector, NormalizedHasUnitNorm) {
  const EmbeddingVector v({3.0f, 4.0f});
  EXPECT_FLOAT_EQ(v.norm(), 5.0f);
  const auto u = v.normalized();
  EXPECT_FLOAT_EQ(u[0], 0.6f);
  EXPECT_FLOAT_EQ(u[1], 0.8f);
  EXPECT_EQ(code_of([] { EmbeddingVector({0.0f, 0.0f}).normalized(); }), ErrorCode::kZeroNormVector);
}

TEST(Fusion, MeanOfBothModalities) {
  ModalityInput in;
  in.text_embedding = EmbeddingVector({1, 0, 0, 0});
  in.image_embedding = EmbeddingVector({0, 1, 0, 0});
  const auto fused = rmr::fuse_embeddings(in);
  EXPECT_EQ(fused, EmbeddingVector({0.5f, 0.5f, 0.0f, 0.0f}));
}

TEST(Fusion, TextOnlyPassesThroughBitIdentical) {
  ModalityInput in;
  in.text_embedding = EmbeddingVector({0.6f, 0.8f});
  EXPECT_TRUE(bit_identical(rmr::fuse_embeddings(in), *in.text_embedding));
}

TEST(Fusion, ImageOnlyPassesThroughBitIdentical) {
  ModalityInput in;
  in.image_embedding = EmbeddingVector({0.0f, 0.0f, 1.0f});
  EXPECT_TRUE(bit_identical(rmr::fuse_embeddings(in), *in.image_embedding));
}

TEST(Fusion, NeitherModalityIsRejected) {
  EXPECT_EQ(code_of([] { rmr::fuse_embeddings(ModalityInput{}); }), ErrorCode::kBothModalitiesAbsent);
}

TEST(Fusion, DimensionMismatchIsRejected) {
  ModalityInput in;
  in.text_embedding = EmbeddingVector({1, 0});
  in.image_embedding = EmbeddingVector({0, 1, 0});
  EXPECT_EQ(code_of([&] { rmr::fuse_embeddings(in); }), ErrorCode::kDimensionMismatch);
}

TEST(Fusion, MeanOfUnitVectorsHasNormAtMostOne) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t dim = 2 + trial % 64;
    ModalityInput in;
    in.text_embedding = EmbeddingVector(rmr_test::random_unit(rng, dim));
    in.image_embedding = EmbeddingVector(rmr_test::random_unit(rng, dim));
    const auto fused = rmr::fuse_embeddings(in);
    double n = 0.0;
    for (float x : fused.values()) n += static_cast<double>(x) * x;
    EXPECT_LE(std::sqrt(n), 1.0 + 1e-6);
    for (std::size_t i = 0; i < dim; ++i) {
      const double expect = (static_cast<double>((*in.text_embedding)[i]) + (*in.image_embedding)[i]) / 2.0;
      EXPECT_NEAR(fused[i], expect, 1e-7);
    }
  }
}

TEST(Fusion, WithUnitEmbeddingsNormalizes) {
  ModalityInput in;
  in.text_embedding = EmbeddingVector({3, 4});
  in.image_embedding = EmbeddingVector({0, 2});
  const auto unit = rmr::with_unit_embeddings(in);
  EXPECT_FLOAT_EQ(unit.text_embedding->norm(), 1.0f);
  EXPECT_FLOAT_EQ(unit.image_embedding->norm(), 1.0f);
  ModalityInput zero;
  zero.text_embedding = EmbeddingVector({0, 0});
  EXPECT_EQ(code_of([&] { rmr::with_unit_embeddings(zero); }), ErrorCode::kZeroNormVector);
}

TEST(Triplet, RenderAnswerAndLabels) {
  const std::vector<std::string> choices{"a mineral", "a rock"};
  EXPECT_EQ(rmr::render_answer(choices, 1), "(B) a rock");
  EXPECT_EQ(rmr::choice_label(0), 'A');
  EXPECT_EQ(rmr::choice_label(25), 'Z');
  EXPECT_EQ(code_of([] { rmr::choice_label(26); }), ErrorCode::kInvalidArgument);
}

TEST(Triplet, Validation) {
  auto t = rmr_test::simple_triplet("x", "Q?");
  EXPECT_NO_THROW(rmr::validate_triplet(t));
  auto no_q = t;
  no_q.question.clear();
  EXPECT_EQ(code_of([&] { rmr::validate_triplet(no_q); }), ErrorCode::kInvalidTriplet);
  auto bad_answer = t;
  bad_answer.answer = "(C) something else";
  EXPECT_EQ(code_of([&] { rmr::validate_triplet(bad_answer); }), ErrorCode::kInvalidTriplet);
  auto free_form = t;
  free_form.choices.clear();
  free_form.answer = "anything";
  EXPECT_NO_THROW(rmr::validate_triplet(free_form));
}

TEST(Library, FromItemsChecksInvariants) {
  EXPECT_EQ(code_of([] { rmr::KnowledgeLibrary::from_items({}, "t"); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(code_of([] { rmr_test::library_from_rows({{1, 0}, {0, 1, 0}}); }), ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([] { rmr_test::library_from_rows({{1, 0}, {0, 0}}); }), ErrorCode::kZeroNormVector);

  std::vector<rmr::KnowledgeItem> dup{
      {rmr_test::simple_triplet("same", "Q1?"), EmbeddingVector({1, 0}), {true, false}},
      {rmr_test::simple_triplet("same", "Q2?"), EmbeddingVector({0, 1}), {true, false}},
  };
  EXPECT_EQ(code_of([&] { rmr::KnowledgeLibrary::from_items(dup, "t"); }), ErrorCode::kDuplicateId);
}

TEST(Library, MatrixMirrorsItems) {
  const auto lib = rmr_test::library_from_rows({{1, 2}, {3, 4}, {0, 5}}, "tag");
  EXPECT_EQ(lib.count(), 3u);
  EXPECT_EQ(lib.dim(), 2u);
  EXPECT_EQ(lib.encoder_tag(), "tag");
  EXPECT_EQ(lib.row(1)[0], 3.0f);
  EXPECT_EQ(lib.row(1)[1], 4.0f);
  EXPECT_FLOAT_EQ(lib.row_norm(1), 5.0f);
  EXPECT_EQ(lib.find("item-2"), std::optional<std::size_t>(2));
  EXPECT_FALSE(lib.find("missing").has_value());
}

TEST(Library, BuildLibraryFusesEachRecord) {
  std::vector<rmr::LibraryRecord> records(2);
  records[0].triplet = rmr_test::simple_triplet("a", "Qa?");
  records[0].input.text_embedding = EmbeddingVector({1, 0});
  records[0].input.image_embedding = EmbeddingVector({0, 1});
  records[1].triplet = rmr_test::simple_triplet("b", "Qb?");
  records[1].input.image_embedding = EmbeddingVector({0, 1});
  const auto lib = rmr::build_library(records, "t");
  EXPECT_EQ(lib.item(0).embedding, EmbeddingVector({0.5f, 0.5f}));
  EXPECT_EQ(lib.item(0).modalities, (rmr::ModalityFlags{true, true}));
  EXPECT_EQ(lib.item(1).modalities, (rmr::ModalityFlags{false, true}));
  EXPECT_EQ(code_of([] { rmr::build_library({}, "t"); }), ErrorCode::kEmptyInput);

  records[1].input.image_embedding.reset();
  EXPECT_EQ(code_of([&] { rmr::build_library(records, "t"); }), ErrorCode::kBothModalitiesAbsent);
}

TEST(Errors, CategoriesMapToExitClasses) {
  EXPECT_EQ(rmr::category_of(ErrorCode::kConfiguration), rmr::ErrorCategory::kConfiguration);
  EXPECT_EQ(rmr::category_of(ErrorCode::kInvalidArgument), rmr::ErrorCategory::kConfiguration);
  EXPECT_EQ(rmr::category_of(ErrorCode::kBadGoldIndex), rmr::ErrorCategory::kData);
  EXPECT_EQ(rmr::category_of(ErrorCode::kTimeout), rmr::ErrorCategory::kEndpoint);
  EXPECT_EQ(rmr::category_of(ErrorCode::kRateLimited), rmr::ErrorCategory::kEndpoint);
  const rmr::Error e(ErrorCode::kBadMagic, "oops");
  EXPECT_STREQ(e.what(), "BadMagic: oops");
  EXPECT_EQ(e.message(), "oops");
}

}  // namespace
