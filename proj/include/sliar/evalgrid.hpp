#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sliar/corpus.hpp"
#include "sliar/encoder.hpp"
#include "sliar/enrichment.hpp"
#include "sliar/fusion.hpp"
#include "sliar/heads.hpp"
#include "sliar/metrics.hpp"
#include "sliar/model.hpp"
#include "sliar/trainer.hpp"

namespace sliar {

/// Per-experiment changes to the grid's TrainConfig.
struct TrainOverrides {
  std::optional<std::size_t> batch_size;
  std::optional<double> learning_rate;
  std::optional<std::size_t> max_epochs;
  std::optional<std::size_t> early_stop_patience;
  std::optional<bool> class_weighted;
  std::optional<bool> train_encoder;

  TrainConfig apply(TrainConfig base) const;
};

enum class HeadKind { Ffn, Cnn };

std::string_view to_string(HeadKind kind);

struct ExperimentEntry {
  std::string id;
  FusionSpec fusion;
  HeadKind head = HeadKind::Ffn;
  /// FFN only: 800-512-256-128 hidden stack, or a single affine layer.
  bool deep_ffn = true;
  TrainOverrides overrides;
};

struct ExperimentGrid {
  std::string name;
  TrainConfig train;
  std::vector<ExperimentEntry> entries;

  /// Throws ConfigError on duplicate or empty ids.
  void validate() const;
};

/// Feed-forward rows, in table order.
ExperimentGrid table2_grid();
/// CNN rows, in table order.
ExperimentGrid table3_grid();

/// YAML grid file. Errors are ConfigError messages naming the line.
ExperimentGrid parse_grid(const std::string& text, const std::string& source = "<grid>");
ExperimentGrid load_grid(const std::filesystem::path& path);

/// e.g. "TEXT+SPC → [BB], BB_OP+EMO → [CNN]"
std::string render_experiment_label(const FusionSpec& spec, HeadKind head);

struct EvalMetrics {
  std::size_t epoch = 0;
  double valid_loss = 0;
  double accuracy = 0;
  double macro_f1 = 0;
  ConfusionMatrix confusion;
};

EvalMetrics evaluate_predictions(const std::vector<SentimentalRecord>& records,
                                 const std::vector<Prediction>& predictions);

enum class EvalMode { Best, Final };

struct EvalReport {
  std::string experiment_id;
  std::string label;
  bool ok = false;
  std::string error;
  EvalMode mode = EvalMode::Best;
  EvalMetrics best;
  EvalMetrics final;
  std::filesystem::path loss_curve;

  const EvalMetrics& reported() const { return mode == EvalMode::Best ? best : final; }
  double accuracy() const { return reported().accuracy; }
  double macro_f1() const { return reported().macro_f1; }
  nlohmann::json to_json() const;
};

struct GridOptions {
  EncoderConfig encoder = EncoderConfig::tiny();
  std::uint64_t seed = 0;
  SplitRatios ratios{};
  EvalMode mode = EvalMode::Best;
  /// Experiments run concurrently when > 1; each has its own directory and seed.
  std::size_t parallelism = 1;
  /// Overrides the CNN kernel; otherwise cnn_kernel_for(encoder).
  std::optional<nn::Index> cnn_kernel;
  /// Applied on top of the grid's own training settings.
  TrainOverrides train;
  std::function<void(const std::string& id, const EpochLoss&)> on_epoch;
  std::function<void(const EvalReport&)> on_report;
};

/// 20 when two such kernels fit behind the encoder width, else 4.
nn::Index cnn_kernel_for(const EncoderConfig& encoder);

/// Trains one entry with `seed` and evaluates it on split.test, writing the
/// per-experiment artifacts (report, curve, plot, checkpoints) into `dir`.
EvalReport run_experiment(const ExperimentEntry& entry, const TrainConfig& base,
                          const DatasetSplit<SentimentalRecord>& split, const std::filesystem::path& dir,
                          const GridOptions& options, std::uint64_t seed);

/// Trains and evaluates every entry on one shared split. Writes
/// out_dir/<id>/{report.json, loss_curve.csv, loss_curve.png,
/// checkpoint_best.safetensors, checkpoint_latest.safetensors} and the
/// summary files, which are rewritten after each experiment. A failing
/// experiment is reported as FAILED and the grid carries on.
std::vector<EvalReport> run_grid(const ExperimentGrid& grid, const std::vector<SentimentalRecord>& data,
                                 const std::filesystem::path& out_dir, const GridOptions& options = {});

/// Columns: sn, id, experiment, accuracy, macro_f1, status, message.
void write_summary_csv(const std::vector<EvalReport>& reports, std::ostream& out);
/// Aligned S.N. / Experiment / Accuracy / F1 Score Macro table.
void write_summary_text(const std::vector<EvalReport>& reports, std::ostream& out);

}  // namespace sliar
