#pragma once

#include "caldoe/common.hpp"

#include <cstdint>

namespace caldoe {

/// Unscrambled Sobol sequence with Joe-Kuo direction numbers (gray-code
/// order). The origin is point 0 of the raw sequence and is always skipped,
/// so the first 2-D points are (0.5, 0.5), (0.75, 0.25), (0.25, 0.75).
class SobolSequence {
 public:
  static constexpr int kMaxDimensions = 40;

  explicit SobolSequence(int dimensions);

  int dimensions() const { return dims_; }

  /// Returns the next point in [0,1)^d.
  Vector next();

  /// Skips `count` points.
  void skip(std::uint64_t count);

 private:
  static constexpr int kBits = 52;
  int dims_;
  std::uint64_t index_ = 0;
  std::vector<std::uint64_t> state_;
  std::vector<std::vector<std::uint64_t>> directions_;
};

/// First `count` Sobol points after skipping the origin and `skip` more.
PointSet sobol_points(int dimensions, int count, std::uint64_t skip = 0);

}  // namespace caldoe
