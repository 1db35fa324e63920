#include "sliar/trainer.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include "sliar/csv.hpp"
#include "sliar/errors.hpp"

namespace sliar {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0)) throw ConfigError("Adam epsilon must be positive");
}

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, std::size_t row) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw ParseError(row, "bad number '" + s + "'");
  return v;
}

}  // namespace

void LossCurve::write_csv(std::ostream& out) const {
  out << "epoch,train_loss,valid_loss\n";
  for (const auto& e : epochs) out << e.epoch << ',' << shortest(e.train_loss) << ',' << shortest(e.valid_loss) << '\n';
}

LossCurve LossCurve::read_csv(std::istream& in) {
  csv::Reader reader(in);
  LossCurve curve;
  if (!reader.next()) return curve;
  while (auto row = reader.next()) {
    const auto& fields = *row;
    if (fields.size() != 3) throw ParseError(reader.row(), "expected 3 fields");
    EpochLoss e;
    e.epoch = static_cast<std::size_t>(parse_double(fields[0], reader.row()));
    e.train_loss = parse_double(fields[1], reader.row());
    e.valid_loss = parse_double(fields[2], reader.row());
    curve.epochs.push_back(e);
  }
  return curve;
}

std::size_t LossCurve::best_epoch() const {
  std::size_t best = 0;
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& e : epochs) {
    if (e.valid_loss < lowest) {
      lowest = e.valid_loss;
      best = e.epoch;
    }
  }
  return best;
}

double bce_loss(std::span<const std::array<double, 2>> probabilities, std::span<const BinaryLabel> targets) {
  if (probabilities.size() != targets.size()) {
    throw ShapeError("bce_loss: " + std::to_string(probabilities.size()) + " predictions for " +
                     std::to_string(targets.size()) + " targets");
  }
  if (probabilities.empty()) throw ShapeError("bce_loss: no samples");
  double sum = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const auto t = one_hot(targets[i]);
    for (int k = 0; k < 2; ++k) {
      const double p = std::clamp(probabilities[i][k], kProbabilityClamp, 1.0 - kProbabilityClamp);
      sum -= t[k] * std::log(p) + (1.0 - t[k]) * std::log(1.0 - p);
    }
  }
  return sum / (2.0 * static_cast<double>(probabilities.size()));
}

}  // namespace sliar
