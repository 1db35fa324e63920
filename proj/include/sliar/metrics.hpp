#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "sliar/corpus.hpp"

namespace sliar {

/// 2x2 counts indexed [actual][predicted] with FALSE = 0, TRUE = 1.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, 2>, 2> counts{};

  void add(BinaryLabel actual, BinaryLabel predicted) { ++counts[to_index(actual)][to_index(predicted)]; }

  std::size_t total() const { return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1]; }
  std::size_t correct() const { return counts[0][0] + counts[1][1]; }

  // Per-class counts, treating `cls` as the positive class.
  std::size_t tp(int cls) const { return counts[cls][cls]; }
  std::size_t fp(int cls) const { return counts[1 - cls][cls]; }
  std::size_t fn(int cls) const { return counts[cls][1 - cls]; }
  std::size_t tn(int cls) const { return counts[1 - cls][1 - cls]; }

  /// Same matrix with the class indices swapped.
  ConfusionMatrix swapped() const;

  static ConfusionMatrix from_labels(const std::vector<BinaryLabel>& actual, const std::vector<BinaryLabel>& predicted);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// correct / total; throws ValidationError when the matrix is empty.
double accuracy(const ConfusionMatrix& conf);

/// Per-class F1 = 2PR / (P + R), defined as 0 when P + R = 0.
double f1_score(const ConfusionMatrix& conf, int cls);

/// Unweighted mean of the two per-class F1 scores.
double macro_f1(const ConfusionMatrix& conf);

}  // namespace sliar
