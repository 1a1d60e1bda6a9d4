#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rmr {

/// Fixed-dimension f32 embedding. Always non-empty and finite.
class EmbeddingVector {
 public:
  /// Throws kInvalidArgument on an empty vector, kNonFiniteInput on NaN/Inf.
  explicit EmbeddingVector(std::vector<float> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }
  float operator[](std::size_t i) const noexcept { return values_[i]; }

  float norm() const noexcept;

  /// L2-normalized copy. Throws kZeroNormVector for the zero vector.
  EmbeddingVector normalized() const;
  EmbeddingVector scaled(float factor) const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<float> values_;
};

// Sequential f32 accumulation. Every similarity in the project goes through
// these so that results are reproducible bit for bit.
float dot(std::span<const float> a, std::span<const float> b) noexcept;
float squared_norm(std::span<const float> a) noexcept;

}  // namespace rmr
