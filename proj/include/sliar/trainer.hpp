#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sliar/corpus.hpp"
#include "sliar/enrichment.hpp"
#include "sliar/model.hpp"

namespace sliar {

struct TrainConfig {
  std::size_t batch_size = 8;
  double learning_rate = 1e-5;
  std::size_t max_epochs = 5;
  std::size_t early_stop_patience = 2;
  std::uint64_t seed = 0;
  /// Inverse-frequency class weights; off to match unweighted training.
  bool class_weighted = false;
  /// When false only the head is updated.
  bool train_encoder = true;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct EpochLoss {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double valid_loss = 0;
};

struct LossCurve {
  std::vector<EpochLoss> epochs;

  /// "epoch,train_loss,valid_loss" rows.
  void write_csv(std::ostream& out) const;
  static LossCurve read_csv(std::istream& in);
  std::size_t best_epoch() const;
};

template <typename Scalar>
struct Checkpoint {
  std::vector<nn::Matrix<Scalar>> weights;
  std::size_t epoch = 0;
  double valid_loss = std::numeric_limits<double>::infinity();
};

template <typename Scalar>
struct TrainResult {
  Checkpoint<Scalar> best;
  LossCurve curve;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, std::size_t batch)
      : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t epoch_, batch_;
};

inline constexpr double kProbabilityClamp = 1e-7;

/// Mean over samples and both units of -[t log p + (1 - t) log(1 - p)],
/// with p clamped into [eps, 1 - eps].
double bce_loss(std::span<const std::array<double, 2>> probabilities, std::span<const BinaryLabel> targets);

inline std::array<double, 2> one_hot(BinaryLabel label) {
  return label == BinaryLabel::True ? std::array<double, 2>{0.0, 1.0} : std::array<double, 2>{1.0, 0.0};
}

/// Patience counter over validation losses; strictly lower counts as improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Records one epoch; returns true when it is the new best.
  bool update(std::size_t epoch, double valid_loss) {
    if (valid_loss < best_loss_) {
      best_loss_ = valid_loss;
      best_epoch_ = epoch;
      stale_ = 0;
      return true;
    }
    ++stale_;
    return false;
  }

  bool should_stop() const { return stale_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t stale_ = 0;
  std::size_t best_epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
};

/// Adam with bias correction, no weight decay.
template <typename Scalar>
class Adam {
 public:
  Adam(nn::ParameterList<Scalar> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto* p : params_) {
      m_.push_back(nn::Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(nn::Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void step() {
    ++t_;
    const Scalar b1 = static_cast<Scalar>(beta1_), b2 = static_cast<Scalar>(beta2_);
    const Scalar correction1 = static_cast<Scalar>(1.0 - std::pow(beta1_, static_cast<double>(t_)));
    const Scalar correction2 = static_cast<Scalar>(1.0 - std::pow(beta2_, static_cast<double>(t_)));
    const Scalar step = static_cast<Scalar>(lr_) / correction1;
    const Scalar eps = static_cast<Scalar>(eps_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& g = params_[i]->grad;
      m_[i] = b1 * m_[i] + (Scalar(1) - b1) * g;
      v_[i] = b2 * v_[i] + (Scalar(1) - b2) * g.cwiseAbs2();
      params_[i]->value.array() -= step * m_[i].array() / ((v_[i].array() / correction2).sqrt() + eps);
    }
  }

  std::size_t steps() const { return t_; }

 private:
  nn::ParameterList<Scalar> params_;
  std::vector<nn::Matrix<Scalar>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

/// Eval-mode BCE over a record list.
template <typename Scalar>
double evaluate_loss(const Model<Scalar>& model, const std::vector<SentimentalRecord>& records) {
  if (records.empty()) return 0.0;
  std::vector<std::array<double, 2>> probs;
  std::vector<BinaryLabel> targets;
  probs.reserve(records.size());
  for (const auto& r : records) {
    probs.push_back(model.predict(r).probabilities);
    targets.push_back(r.label());
  }
  return bce_loss(probs, targets);
}

/// Predictions in input order; batching only groups the work.
template <typename Scalar>
std::vector<Prediction> predict_batch(const Model<Scalar>& model, const std::vector<SentimentalRecord>& records,
                                      std::size_t batch_size = 8) {
  if (batch_size == 0) throw ValidationError("batch size must be at least 1");
  std::vector<Prediction> out;
  out.reserve(records.size());
  for (std::size_t start = 0; start < records.size(); start += batch_size) {
    const auto end = std::min(records.size(), start + batch_size);
    for (std::size_t i = start; i < end; ++i) out.push_back(model.predict(records[i]));
  }
  return out;
}

/// One optimizer step over `batch`; returns the mean per-sample loss.
template <typename Scalar>
double train_step(Model<Scalar>& model, Adam<Scalar>& optimizer, std::span<const SentimentalRecord* const> batch,
                  const std::array<double, 2>& class_weights, bool train_encoder, std::mt19937_64& rng) {
  model.zero_grad();
  double loss_sum = 0;
  const double per_unit = 1.0 / (2.0 * static_cast<double>(batch.size()));
  typename Model<Scalar>::Trace trace;
  for (const auto* record : batch) {
    const auto logits = model.forward(*record, &trace, &rng);
    const auto target = one_hot(record->label());
    const double w = class_weights[to_index(record->label())];
    nn::Vector<Scalar> dlogits(2);
    double sample_loss = 0;
    for (int k = 0; k < 2; ++k) {
      const double p = static_cast<double>(nn::sigmoid(logits(k)));
      const double pc = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
      sample_loss -= target[k] * std::log(pc) + (1.0 - target[k]) * std::log(1.0 - pc);
      dlogits(k) = static_cast<Scalar>(w * (p - target[k]) * per_unit);
    }
    loss_sum += w * sample_loss / 2.0;
    model.backward(trace, dlogits, train_encoder);
  }
  optimizer.step();
  return loss_sum / static_cast<double>(batch.size());
}

/// Seeded epoch loop with best-validation checkpointing and patience-based
/// early stopping. The model is left holding the final-epoch weights.
template <typename Scalar>
TrainResult<Scalar> train(Model<Scalar>& model, const DatasetSplit<SentimentalRecord>& split,
                          const TrainConfig& config,
                          const std::function<void(const EpochLoss&)>& on_epoch = {}) {
  config.validate();
  if (split.train.empty() || split.valid.empty() || split.test.empty()) {
    throw ValidationError("training needs non-empty train, valid and test splits");
  }
  std::array<double, 2> class_weights{1.0, 1.0};
  if (config.class_weighted) {
    const auto hist = label_distribution([&] {
      std::vector<BinaryLabel> labels;
      for (const auto& r : split.train) labels.push_back(r.label());
      return labels;
    }());
    for (int c = 0; c < 2; ++c) {
      class_weights[c] = hist.counts[c] ? static_cast<double>(hist.total()) / (2.0 * hist.counts[c]) : 1.0;
    }
  }

  auto params = config.train_encoder ? model.parameters() : model.head_parameters();
  Adam<Scalar> optimizer(params, config.learning_rate, config.beta1, config.beta2, config.epsilon);
  TrainResult<Scalar> result;
  EarlyStopping stopper(config.early_stop_patience);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto order = seeded_permutation(split.train.size(), config.seed + epoch);
    std::mt19937_64 dropout_rng(config.seed * 6364136223846793005ull + epoch);
    std::vector<const SentimentalRecord*> batch;
    double loss_sum = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
        batch.push_back(&split.train[order[i]]);
      }
      ++batches;
      const double loss = train_step(model, optimizer, std::span<const SentimentalRecord* const>(batch),
                                     class_weights, config.train_encoder, dropout_rng);
      if (!std::isfinite(loss)) throw DivergenceError(epoch, batches);
      loss_sum += loss * static_cast<double>(batch.size());
    }
    EpochLoss entry{epoch, loss_sum / static_cast<double>(order.size()), evaluate_loss(model, split.valid)};
    if (!std::isfinite(entry.valid_loss)) throw DivergenceError(epoch, batches);
    result.curve.epochs.push_back(entry);
    if (stopper.update(epoch, entry.valid_loss)) {
      result.best = {model.snapshot(), epoch, entry.valid_loss};
    }
    if (on_epoch) on_epoch(entry);
    if (stopper.should_stop()) break;
  }
  return result;
}

}  // namespace sliar
