#include "sliar/metrics.hpp"

#include "sliar/errors.hpp"

namespace sliar {

ConfusionMatrix ConfusionMatrix::swapped() const {
  ConfusionMatrix s;
  for (int a = 0; a < 2; ++a) {
    for (int p = 0; p < 2; ++p) s.counts[1 - a][1 - p] = counts[a][p];
  }
  return s;
}

ConfusionMatrix ConfusionMatrix::from_labels(const std::vector<BinaryLabel>& actual,
                                             const std::vector<BinaryLabel>& predicted) {
  if (actual.size() != predicted.size()) throw ShapeError("target and prediction counts differ");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < actual.size(); ++i) m.add(actual[i], predicted[i]);
  return m;
}

double accuracy(const ConfusionMatrix& conf) {
  if (conf.total() == 0) throw ValidationError("accuracy of an empty evaluation is undefined");
  return static_cast<double>(conf.correct()) / static_cast<double>(conf.total());
}

double f1_score(const ConfusionMatrix& conf, int cls) {
  const auto tp = static_cast<double>(conf.tp(cls));
  const auto predicted = tp + static_cast<double>(conf.fp(cls));
  const auto actual = tp + static_cast<double>(conf.fn(cls));
  const double precision = predicted > 0 ? tp / predicted : 0.0;
  const double recall = actual > 0 ? tp / actual : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double macro_f1(const ConfusionMatrix& conf) {
  if (conf.total() == 0) throw ValidationError("F1 of an empty evaluation is undefined");
  return 0.5 * (f1_score(conf, 0) + f1_score(conf, 1));
}

}  // namespace sliar
