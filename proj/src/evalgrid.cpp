#include "sliar/evalgrid.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "sliar/csv.hpp"
#include "sliar/diagnostics.hpp"
#include "sliar/errors.hpp"
#include "sliar/plot.hpp"

namespace sliar {

TrainConfig TrainOverrides::apply(TrainConfig base) const {
  if (batch_size) base.batch_size = *batch_size;
  if (learning_rate) base.learning_rate = *learning_rate;
  if (max_epochs) base.max_epochs = *max_epochs;
  if (early_stop_patience) base.early_stop_patience = *early_stop_patience;
  if (class_weighted) base.class_weighted = *class_weighted;
  if (train_encoder) base.train_encoder = *train_encoder;
  return base;
}

std::string_view to_string(HeadKind kind) { return kind == HeadKind::Ffn ? "ffn" : "cnn"; }

void ExperimentGrid::validate() const {
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (e.id.empty()) throw ConfigError("experiment id must not be empty");
    if (e.id.find_first_of("/\\") != std::string::npos || e.id == "." || e.id == "..") {
      throw ConfigError("experiment id '" + e.id + "' is not a valid directory name");
    }
    if (!seen.insert(e.id).second) throw ConfigError("duplicate experiment id '" + e.id + "'");
    e.fusion.validate();
  }
  train.validate();
}

namespace {

ExperimentEntry entry(std::string id, std::vector<std::string> encoder, std::vector<std::string> side, HeadKind head,
                      bool deep = true) {
  ExperimentEntry e;
  e.id = std::move(id);
  e.fusion = make_fusion_spec(encoder, side);
  e.head = head;
  e.deep_ffn = deep;
  return e;
}

}  // namespace

ExperimentGrid table2_grid() {
  ExperimentGrid g;
  g.name = "table2";
  // Rows 1-4 use the single hidden layer, row 5 the widened stack.
  g.entries = {
      entry("t2-1", {"TEXT"}, {}, HeadKind::Ffn, false),
      entry("t2-2", {"TEXT", "EMO"}, {}, HeadKind::Ffn, false),
      entry("t2-3", {"TEXT", "EMO", "SPC"}, {}, HeadKind::Ffn, false),
      entry("t2-4", {"TEXT", "EMO", "SPC", "SEN"}, {}, HeadKind::Ffn, false),
      entry("t2-5", {"TEXT"}, {"EMO", "SPC", "SEN"}, HeadKind::Ffn, true),
  };
  return g;
}

ExperimentGrid table3_grid() {
  ExperimentGrid g;
  g.name = "table3";
  g.entries = {
      entry("t3-1", {"TEXT"}, {}, HeadKind::Cnn),
      entry("t3-2", {"TEXT", "EMO", "SPC"}, {}, HeadKind::Cnn),
      entry("t3-3", {"TEXT"}, {"EMO"}, HeadKind::Cnn),
      entry("t3-4", {"TEXT", "SPC"}, {"EMO"}, HeadKind::Cnn),
      entry("t3-5", {"TEXT"}, {"EMO", "SPC"}, HeadKind::Cnn),
      entry("t3-6", {"TEXT"}, {"EMO", "SPC", "SEN"}, HeadKind::Cnn),
  };
  return g;
}

// ---------------------------------------------------------------------------
// Config files

namespace {

class GridParser {
 public:
  explicit GridParser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
    const auto mark = node.Mark();
    if (mark.line >= 0) throw ConfigError(source_ + ":" + std::to_string(mark.line + 1) + ": " + what);
    throw ConfigError(source_ + ": " + what);
  }

  template <typename T>
  T scalar(const YAML::Node& node, const std::string& key) const {
    if (!node.IsScalar()) fail(node, "'" + key + "' must be a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "'" + key + "' has an invalid value '" + node.Scalar() + "'");
    }
  }

  std::size_t count(const YAML::Node& node, const std::string& key) const {
    const auto v = scalar<long long>(node, key);
    if (v < 0) fail(node, "'" + key + "' must not be negative");
    return static_cast<std::size_t>(v);
  }

  std::vector<std::string> groups(const YAML::Node& node, const std::string& key) const {
    if (!node) return {};
    if (node.IsNull()) return {};
    if (!node.IsSequence()) fail(node, "'" + key + "' must be a list of group names");
    std::vector<std::string> out;
    for (const auto& item : node) out.push_back(scalar<std::string>(item, key));
    return out;
  }

  TrainOverrides overrides(const YAML::Node& node) const {
    TrainOverrides o;
    if (!node || node.IsNull()) return o;
    if (!node.IsMap()) fail(node, "'train' must be a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      const auto& v = kv.second;
      if (key == "batch_size") o.batch_size = count(v, key);
      else if (key == "learning_rate") o.learning_rate = scalar<double>(v, key);
      else if (key == "max_epochs") o.max_epochs = count(v, key);
      else if (key == "early_stop_patience") o.early_stop_patience = count(v, key);
      else if (key == "class_weighted") o.class_weighted = scalar<bool>(v, key);
      else if (key == "train_encoder") o.train_encoder = scalar<bool>(v, key);
      else fail(kv.first, "unknown training key '" + key + "'");
    }
    return o;
  }

  ExperimentEntry experiment(const YAML::Node& node) const {
    if (!node.IsMap()) fail(node, "each experiment must be a mapping");
    static const std::set<std::string> known{"id", "encoder", "side", "head", "ffn", "normalize_spc", "train"};
    for (const auto& kv : node) {
      if (!known.contains(kv.first.as<std::string>())) {
        fail(kv.first, "unknown experiment key '" + kv.first.as<std::string>() + "'");
      }
    }
    ExperimentEntry e;
    if (!node["id"]) fail(node, "experiment is missing 'id'");
    e.id = scalar<std::string>(node["id"], "id");
    if (!node["head"]) fail(node, "experiment '" + e.id + "' is missing 'head'");
    const auto head = scalar<std::string>(node["head"], "head");
    if (head == "ffn") e.head = HeadKind::Ffn;
    else if (head == "cnn") e.head = HeadKind::Cnn;
    else fail(node["head"], "head must be 'ffn' or 'cnn', got '" + head + "'");
    if (node["ffn"]) {
      const auto depth = scalar<std::string>(node["ffn"], "ffn");
      if (depth != "deep" && depth != "shallow") fail(node["ffn"], "ffn must be 'deep' or 'shallow'");
      if (e.head != HeadKind::Ffn) fail(node["ffn"], "'ffn' only applies to the feed-forward head");
      e.deep_ffn = depth == "deep";
    }
    const bool normalize = node["normalize_spc"] ? scalar<bool>(node["normalize_spc"], "normalize_spc") : false;
    const auto encoder = node["encoder"] ? groups(node["encoder"], "encoder") : std::vector<std::string>{"TEXT"};
    try {
      e.fusion = make_fusion_spec(encoder, groups(node["side"], "side"), normalize);
    } catch (const ConfigError& err) {
      fail(node, "experiment '" + e.id + "': " + err.what());
    }
    e.overrides = overrides(node["train"]);
    return e;
  }

  ExperimentGrid grid(const YAML::Node& root) const {
    ExperimentGrid g;
    if (root.IsNull()) return g;
    if (!root.IsMap()) fail(root, "top level must be a mapping");
    for (const auto& kv : root) {
      const auto key = kv.first.as<std::string>();
      if (key != "grid" && key != "train" && key != "experiments") fail(kv.first, "unknown key '" + key + "'");
    }
    if (root["grid"]) g.name = scalar<std::string>(root["grid"], "grid");
    g.train = overrides(root["train"]).apply(g.train);
    const auto experiments = root["experiments"];
    if (experiments && !experiments.IsNull()) {
      if (!experiments.IsSequence()) fail(experiments, "'experiments' must be a list");
      std::set<std::string> seen;
      for (const auto& node : experiments) {
        auto e = experiment(node);
        if (!seen.insert(e.id).second) fail(node, "duplicate experiment id '" + e.id + "'");
        g.entries.push_back(std::move(e));
      }
    }
    try {
      g.validate();
    } catch (const ConfigError& err) {
      throw ConfigError(source_ + ": " + err.what());
    }
    return g;
  }

 private:
  std::string source_;
};

}  // namespace

ExperimentGrid parse_grid(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  return GridParser(source).grid(root);
}

ExperimentGrid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open grid config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_grid(buffer.str(), path.string());
}

std::string render_experiment_label(const FusionSpec& spec, HeadKind head) {
  auto join = [](std::string first, const std::vector<Group>& groups) {
    for (auto g : groups) {
      if (g == Group::Text && first.empty()) {
        first = std::string(to_string(g));
        continue;
      }
      if (!first.empty()) first += '+';
      first += to_string(g);
    }
    return first;
  };
  return join("", spec.encoder_groups.ordered()) + " → [BB], " + join("BB_OP", spec.side_groups.ordered()) + " → [" +
         (head == HeadKind::Ffn ? "NN" : "CNN") + "]";
}

// ---------------------------------------------------------------------------
// Evaluation

EvalMetrics evaluate_predictions(const std::vector<SentimentalRecord>& records,
                                 const std::vector<Prediction>& predictions) {
  if (records.size() != predictions.size()) throw ShapeError("one prediction per record required");
  EvalMetrics m;
  for (std::size_t i = 0; i < records.size(); ++i) m.confusion.add(records[i].label(), predictions[i].predicted);
  m.accuracy = accuracy(m.confusion);
  m.macro_f1 = macro_f1(m.confusion);
  return m;
}

namespace {

nlohmann::json metrics_json(const EvalMetrics& m) {
  return {{"epoch", m.epoch},
          {"valid_loss", m.valid_loss},
          {"accuracy", m.accuracy},
          {"macro_f1", m.macro_f1},
          {"confusion", m.confusion.counts}};
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j{{"experiment_id", experiment_id}, {"experiment", label}, {"status", ok ? "ok" : "failed"}};
  if (!ok) {
    j["error"] = error;
    return j;
  }
  j["eval_mode"] = mode == EvalMode::Best ? "best" : "final";
  j["accuracy"] = accuracy();
  j["macro_f1"] = macro_f1();
  j["confusion"] = reported().confusion.counts;
  j["best"] = metrics_json(best);
  j["final"] = metrics_json(final);
  j["loss_curve"] = loss_curve.filename().string();
  return j;
}

nn::Index cnn_kernel_for(const EncoderConfig& encoder) {
  constexpr nn::Index standard_kernel = 20;
  return encoder.hidden_width >= 2 * (standard_kernel - 1) + 1 ? standard_kernel : 4;
}

namespace {

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

EvalReport run_experiment(const ExperimentEntry& entry, const TrainConfig& base,
                          const DatasetSplit<SentimentalRecord>& split, const std::filesystem::path& dir,
                          const GridOptions& options, std::uint64_t seed) {
  EvalReport report;
  report.experiment_id = entry.id;
  report.label = render_experiment_label(entry.fusion, entry.head);
  report.mode = options.mode;
  std::filesystem::create_directories(dir);

  auto config = options.train.apply(entry.overrides.apply(base));
  config.seed = seed;
  const auto kernel = options.cnn_kernel.value_or(cnn_kernel_for(options.encoder));
  const auto head = head_for(std::string(to_string(entry.head)), entry.fusion, options.encoder, entry.deep_ffn, kernel);
  const auto stats = NormalizationStats::from_training(split.train);
  auto model = build_model<float>(entry.fusion, options.encoder, head, config.seed, stats);

  auto result = train(model, split, config, [&](const EpochLoss& e) {
    if (options.on_epoch) options.on_epoch(entry.id, e);
  });

  report.loss_curve = dir / "loss_curve.csv";
  {
    std::ostringstream csv_text;
    result.curve.write_csv(csv_text);
    write_text_file(report.loss_curve, csv_text.str());
  }
  plot::write_loss_curve_png(result.curve, dir / "loss_curve.png");

  const std::map<std::string, std::string> common{{"experiment_id", entry.id}, {"experiment", report.label}};
  auto meta = common;
  meta["epoch"] = std::to_string(result.curve.epochs.back().epoch);
  meta["valid_loss"] = std::to_string(result.curve.epochs.back().valid_loss);
  model.save(dir / "checkpoint_latest.safetensors", meta);
  report.final = evaluate_predictions(split.test, predict_batch(model, split.test, config.batch_size));
  report.final.epoch = result.curve.epochs.back().epoch;
  report.final.valid_loss = result.curve.epochs.back().valid_loss;

  model.restore(result.best.weights);
  meta = common;
  meta["epoch"] = std::to_string(result.best.epoch);
  meta["valid_loss"] = std::to_string(result.best.valid_loss);
  model.save(dir / "checkpoint_best.safetensors", meta);
  report.best = evaluate_predictions(split.test, predict_batch(model, split.test, config.batch_size));
  report.best.epoch = result.best.epoch;
  report.best.valid_loss = result.best.valid_loss;
  report.ok = true;
  write_text_file(dir / "report.json", report.to_json().dump(2) + "\n");
  return report;
}

namespace {

std::string fixed4(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

void write_summaries(const std::vector<EvalReport>& reports, const std::filesystem::path& out_dir) {
  std::ostringstream csv_text, table;
  write_summary_csv(reports, csv_text);
  write_summary_text(reports, table);
  write_text_file(out_dir / "summary.csv", csv_text.str());
  write_text_file(out_dir / "summary.txt", table.str());
}

}  // namespace

std::vector<EvalReport> run_grid(const ExperimentGrid& grid, const std::vector<SentimentalRecord>& data,
                                 const std::filesystem::path& out_dir, const GridOptions& options) {
  grid.validate();
  std::filesystem::create_directories(out_dir);
  std::vector<EvalReport> reports(grid.entries.size());
  std::vector<bool> done(grid.entries.size(), false);
  std::mutex mutex;

  auto finished = [&] {
    std::vector<EvalReport> out;
    for (std::size_t i = 0; i < reports.size(); ++i)
      if (done[i]) out.push_back(reports[i]);
    return out;
  };
  write_summaries({}, out_dir);
  if (grid.entries.empty()) return {};
  if (data.empty()) throw ValidationError("grid needs a non-empty enriched corpus");

  const auto split = split_dataset(data, options.seed, options.ratios);

  auto run_one = [&](std::size_t i) {
    const auto& entry = grid.entries[i];
    const auto dir = out_dir / entry.id;
    EvalReport report;
    try {
      report = run_experiment(entry, grid.train, split, dir, options, options.seed + 1000003ull * (i + 1));
    } catch (const std::exception& e) {
      report = {};
      report.experiment_id = entry.id;
      report.label = render_experiment_label(entry.fusion, entry.head);
      report.mode = options.mode;
      report.error = e.what();
      warn("experiment " + entry.id + " failed: " + report.error);
      try {
        std::filesystem::create_directories(dir);
        write_text_file(dir / "report.json", report.to_json().dump(2) + "\n");
      } catch (const std::exception& e2) {
        warn("cannot write report for " + entry.id + ": " + e2.what());
      }
    }
    std::lock_guard lock(mutex);
    reports[i] = report;
    done[i] = true;
    write_summaries(finished(), out_dir);
    if (options.on_report) options.on_report(report);
  };

  if (options.parallelism <= 1) {
    for (std::size_t i = 0; i < grid.entries.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    const auto n = std::min(options.parallelism, grid.entries.size());
    for (std::size_t w = 0; w < n; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < grid.entries.size();) run_one(i);
      });
    }
  }
  return reports;
}

void write_summary_csv(const std::vector<EvalReport>& reports, std::ostream& out) {
  csv::write_row(out, {"sn", "id", "experiment", "accuracy", "macro_f1", "status", "message"});
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    csv::write_row(out, {std::to_string(i + 1), r.experiment_id, r.label, r.ok ? fixed4(r.accuracy()) : "",
                         r.ok ? fixed4(r.macro_f1()) : "", r.ok ? "ok" : "FAILED", r.error});
  }
}

namespace {

// Display width in code points, so "→" counts as one column.
std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::string pad(const std::string& s, std::size_t width) {
  return s + std::string(width > display_width(s) ? width - display_width(s) : 0, ' ');
}

}  // namespace

void write_summary_text(const std::vector<EvalReport>& reports, std::ostream& out) {
  const std::vector<std::string> header{"S.N.", "Experiment", "Accuracy", "F1 Score Macro"};
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    rows.push_back({std::to_string(i + 1) + ".", r.label, r.ok ? fixed4(r.accuracy()) : "FAILED",
                    r.ok ? fixed4(r.macro_f1()) : "FAILED"});
  }
  std::vector<std::size_t> widths;
  for (const auto& h : header) widths.push_back(display_width(h));
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], display_width(row[c]));
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t c = 0; c < cells.size(); ++c) s += (c ? "  " : "") + pad(cells[c], widths[c]);
    while (!s.empty() && s.back() == ' ') s.pop_back();
    out << s << '\n';
  };
  line(header);
  for (const auto& row : rows) line(row);
  for (const auto& r : reports)
    if (!r.ok) out << r.experiment_id << " FAILED: " << r.error << '\n';
}

}  // namespace sliar
