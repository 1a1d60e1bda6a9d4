#include "rmr/embedding.hpp"

#include <cmath>
#include <string>

#include "rmr/error.hpp"

namespace rmr {

EmbeddingVector::EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {
  if (values_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "embedding dimension must be at least 1");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorCode::kNonFiniteInput,
                  "embedding entry " + std::to_string(i) + " is not finite");
    }
  }
}

float EmbeddingVector::norm() const noexcept { return std::sqrt(squared_norm(values_)); }

EmbeddingVector EmbeddingVector::normalized() const {
  const float n = norm();
  if (!(n > 0.0f)) {
    throw Error(ErrorCode::kZeroNormVector, "cannot normalize a zero vector");
  }
  std::vector<float> out(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) {
    out[i] = values_[i] / n;
  }
  return EmbeddingVector(std::move(out));
}

EmbeddingVector EmbeddingVector::scaled(float factor) const {
  std::vector<float> out(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) {
    out[i] = values_[i] * factor;
  }
  return EmbeddingVector(std::move(out));
}

float dot(std::span<const float> a, std::span<const float> b) noexcept {
  float acc = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += a[i] * b[i];
  }
  return acc;
}

float squared_norm(std::span<const float> a) noexcept {
  float acc = 0.0f;
  for (float v : a) {
    acc += v * v;
  }
  return acc;
}

}  // namespace rmr
