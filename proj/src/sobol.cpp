#include "caldoe/sobol.hpp"

#include <bit>

namespace caldoe {

namespace {

struct DirectionInit {
  int degree;
  unsigned coefficients;
  std::uint32_t m[18];
};

// Joe & Kuo (2008) primitive polynomials and initial direction numbers for
// dimensions 2..40; dimension 1 uses the van der Corput radical inverse.
constexpr DirectionInit kInit[] = {
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
    {7, 7, {1, 1, 3, 13, 7, 35, 63}},
    {7, 8, {1, 3, 5, 9, 1, 25, 53}},
    {7, 14, {1, 3, 1, 13, 9, 35, 107}},
    {7, 19, {1, 3, 1, 5, 27, 61, 31}},
    {7, 21, {1, 1, 5, 11, 19, 41, 61}},
    {7, 28, {1, 3, 5, 3, 3, 13, 69}},
    {7, 31, {1, 1, 7, 13, 1, 19, 1}},
    {7, 32, {1, 3, 7, 5, 13, 19, 59}},
    {7, 37, {1, 1, 3, 9, 25, 29, 41}},
    {7, 41, {1, 3, 5, 13, 23, 1, 55}},
    {7, 42, {1, 3, 7, 3, 13, 59, 17}},
    {7, 50, {1, 3, 1, 3, 5, 53, 69}},
    {7, 55, {1, 1, 5, 5, 23, 33, 13}},
    {7, 56, {1, 1, 7, 7, 1, 61, 123}},
    {7, 59, {1, 1, 7, 9, 13, 61, 49}},
    {7, 62, {1, 3, 3, 5, 3, 55, 33}},
    {8, 14, {1, 3, 1, 15, 31, 13, 49, 245}},
    {8, 21, {1, 3, 5, 15, 31, 59, 63, 97}},
    {8, 22, {1, 3, 1, 11, 11, 11, 77, 249}},
};

static_assert(sizeof(kInit) / sizeof(kInit[0]) == SobolSequence::kMaxDimensions - 1);

}  // namespace

SobolSequence::SobolSequence(int dimensions) : dims_(dimensions), state_(dimensions, 0), directions_(dimensions) {
  if (dimensions < 1 || dimensions > kMaxDimensions) {
    throw ValidationError("Sobol sequence supports 1.." + std::to_string(kMaxDimensions) + " dimensions, got " +
                          std::to_string(dimensions));
  }
  for (int d = 0; d < dims_; ++d) {
    auto& v = directions_[d];
    v.assign(kBits + 1, 0);
    if (d == 0) {
      for (int k = 1; k <= kBits; ++k) v[k] = std::uint64_t{1} << (kBits - k);
      continue;
    }
    const DirectionInit& init = kInit[d - 1];
    const int s = init.degree;
    for (int k = 1; k <= kBits && k <= s; ++k) v[k] = std::uint64_t{init.m[k - 1]} << (kBits - k);
    for (int k = s + 1; k <= kBits; ++k) {
      std::uint64_t value = v[k - s] ^ (v[k - s] >> s);
      for (int i = 1; i < s; ++i) {
        if ((init.coefficients >> (s - 1 - i)) & 1U) value ^= v[k - i];
      }
      v[k] = value;
    }
  }
}

Vector SobolSequence::next() {
  // Gray-code update: flip the direction of the lowest zero bit of index.
  const int bit = std::countr_one(index_) + 1;
  if (bit > kBits) throw NumericalError("Sobol sequence exhausted");
  ++index_;
  Vector point(dims_);
  for (int d = 0; d < dims_; ++d) {
    state_[d] ^= directions_[d][bit];
    point[d] = static_cast<double>(state_[d]) * 0x1.0p-52;
  }
  return point;
}

void SobolSequence::skip(std::uint64_t count) {
  for (std::uint64_t i = 0; i < count; ++i) next();
}

PointSet sobol_points(int dimensions, int count, std::uint64_t skip) {
  if (count < 1) throw ValidationError("Sobol point count must be >= 1");
  SobolSequence seq(dimensions);
  seq.skip(skip);
  PointSet out(count, dimensions);
  for (int i = 0; i < count; ++i) out.row(i) = seq.next().transpose();
  return out;
}

}  // namespace caldoe
