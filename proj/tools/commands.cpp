#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "sliar/corpus.hpp"
#include "sliar/csv.hpp"
#include "sliar/enrichment.hpp"
#include "sliar/errors.hpp"
#include "sliar/evalgrid.hpp"
#include "sliar/model.hpp"
#include "sliar/plot.hpp"
#include "sliar/trainer.hpp"

#ifndef SLIAR_DEFAULT_LEXICON
#define SLIAR_DEFAULT_LEXICON "data/lexicon/sentiment_emotion_v1.tsv"
#endif

namespace fs = std::filesystem;

namespace sliar::cli {
namespace {

std::string env(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw ValidationError(what + " '" + path + "' does not exist");
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void print_distribution(std::ostream& out, const LabelHistogram& h) {
  out << "records: " << h.total() << "\n"
      << "FALSE: " << h.counts[0] << " (" << fixed(h.fractions[0]) << ")\n"
      << "TRUE: " << h.counts[1] << " (" << fixed(h.fractions[1]) << ")\n";
}

// Options shared by train, eval and grid.
struct ModelFlags {
  std::string encoder = "tiny";
  std::string encoder_path;
  std::uint64_t seed = 0;
  std::optional<std::size_t> epochs, batch_size, patience;
  std::optional<double> lr;
  bool class_weighted = false;
  bool freeze_encoder = false;
  std::optional<nn::Index> cnn_kernel;
  std::string eval_mode = "best";

  void add_to(CLI::App* app) {
    app->add_option("--encoder", encoder, "Encoder preset: tiny (desk-scale, random init) or paper (pretrained BERT-base)")
        ->check(CLI::IsMember({"tiny", "paper"}))
        ->capture_default_str();
    app->add_option("--encoder-path", encoder_path,
                    "Pretrained encoder directory (config.json, vocab.txt, model.safetensors); "
                    "defaults to $SLIAR_BERT_DIR");
    app->add_option("--seed", seed, "Seed for splitting, initialization, shuffling and dropout")->capture_default_str();
    app->add_option("--epochs", epochs, "Maximum epochs (default 5)");
    app->add_option("--lr", lr, "Adam learning rate (default 1e-5)");
    app->add_option("--batch-size", batch_size, "Batch size (default 8)");
    app->add_option("--patience", patience, "Early-stopping patience in epochs (default 2)");
    app->add_flag("--class-weighted", class_weighted, "Weight the loss by inverse class frequency");
    app->add_flag("--freeze-encoder", freeze_encoder, "Train the head only");
    app->add_option("--cnn-kernel", cnn_kernel, "CNN kernel size (default 20, or 4 for the tiny encoder)");
    app->add_option("--eval-mode", eval_mode, "Checkpoint used for the reported metrics")
        ->check(CLI::IsMember({"best", "final"}))
        ->capture_default_str();
  }

  EncoderConfig encoder_config() const {
    if (encoder == "tiny") return EncoderConfig::tiny();
    auto dir = encoder_path.empty() ? env("SLIAR_BERT_DIR") : encoder_path;
    if (dir.empty()) throw ValidationError("--encoder paper needs --encoder-path or SLIAR_BERT_DIR");
    if (!fs::is_directory(dir)) throw ValidationError("encoder directory '" + dir + "' does not exist");
    return EncoderConfig::pretrained(dir);
  }

  TrainOverrides overrides() const {
    TrainOverrides o;
    o.max_epochs = epochs;
    o.learning_rate = lr;
    o.batch_size = batch_size;
    o.early_stop_patience = patience;
    if (class_weighted) o.class_weighted = true;
    if (freeze_encoder) o.train_encoder = false;
    return o;
  }

  GridOptions grid_options(std::ostream& err) const {
    GridOptions g;
    g.encoder = encoder_config();
    g.seed = seed;
    g.mode = eval_mode == "final" ? EvalMode::Final : EvalMode::Best;
    g.cnn_kernel = cnn_kernel;
    g.train = overrides();
    g.on_epoch = [&err](const std::string& id, const EpochLoss& e) {
      err << "[" << id << "] epoch " << e.epoch << " train_loss " << fixed(e.train_loss, 6) << " valid_loss "
          << fixed(e.valid_loss, 6) << "\n";
    };
    return g;
  }
};

void print_metrics(std::ostream& out, const EvalReport& r) {
  out << "experiment: " << r.label << "\n";
  if (!r.ok) {
    out << "status: FAILED (" << r.error << ")\n";
    return;
  }
  const auto& m = r.reported();
  out << "checkpoint: " << (r.mode == EvalMode::Best ? "best" : "final") << " (epoch " << m.epoch << ")\n"
      << "accuracy: " << fixed(m.accuracy) << "\n"
      << "macro_f1: " << fixed(m.macro_f1) << "\n";
}

// ---------------------------------------------------------------------------

struct BuildDatasetArgs {
  std::vector<std::string> inputs;
  std::string out;
  std::uint64_t seed = 0;
};

int build_dataset(const BuildDatasetArgs& a, std::ostream& out) {
  for (const auto& p : a.inputs) require_file(p, "input");
  std::vector<ClaimRecord> records;
  for (const auto& p : a.inputs) {
    auto part = parse_liar_file(p);
    records.insert(records.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  auto [anonymized, speakers] = anonymize_speakers(binarize(std::move(records)));
  const fs::path dir(a.out);
  {
    auto f = open_out(dir / "corpus.csv");
    write_canonical(f, anonymized);
  }
  {
    auto f = open_out(dir / "speakers.csv");
    write_speaker_map(f, speakers);
  }
  {
    const auto split = split_dataset(anonymized, a.seed);
    auto f = open_out(dir / "splits.csv");
    csv::write_row(f, {"id", "split"});
    for (const auto& r : split.train) csv::write_row(f, {r.id, "train"});
    for (const auto& r : split.valid) csv::write_row(f, {r.id, "valid"});
    for (const auto& r : split.test) csv::write_row(f, {r.id, "test"});
  }
  print_distribution(out, label_distribution(anonymized));
  out << "wrote " << (dir / "corpus.csv").string() << "\n";
  return kExitOk;
}

struct EnrichArgs {
  std::string in, out, cache, lexicon = SLIAR_DEFAULT_LEXICON;
  std::string analyzer = "local";
  std::size_t parallel = 1;
  long long min_interval_ms = 0;
  std::uint64_t seed = 0;
};

int enrich_command(const EnrichArgs& a, std::ostream& out, std::ostream& err) {
  const auto names = split_list(a.analyzer);
  const std::set<std::string> chosen(names.begin(), names.end());
  if (chosen.empty()) throw ValidationError("--analyzer needs at least one of google, ibm, local, precomputed");
  for (const auto& n : chosen) {
    if (n != "google" && n != "ibm" && n != "local" && n != "precomputed") {
      throw ValidationError("unknown analyzer '" + n + "'");
    }
  }
  if (chosen.contains("precomputed") && chosen.size() > 1) {
    throw ValidationError("precomputed cannot be combined with other analyzers");
  }
  // Credentials are checked before touching any input or network.
  const auto google_key = env("GOOGLE_NLP_KEY");
  const auto ibm_key = env("IBM_NLU_KEY");
  if (chosen.contains("google") && google_key.empty()) {
    throw ValidationError("--analyzer google requires GOOGLE_NLP_KEY");
  }
  if (chosen.contains("ibm") && ibm_key.empty()) throw ValidationError("--analyzer ibm requires IBM_NLU_KEY");
  require_file(a.in, "input");

  if (chosen.contains("precomputed")) {
    const auto records = load_precomputed_file(a.in);
    auto f = open_out(a.out);
    write_enriched(f, records);
    out << "records: " << records.size() << "\ncache hits: 0\nfresh analyses: 0\nremote calls: 0\n";
    return kExitOk;
  }

  std::shared_ptr<const Lexicon> lexicon;
  if (!chosen.contains("google") || !chosen.contains("ibm")) {
    require_file(a.lexicon, "lexicon");
    lexicon = std::make_shared<const Lexicon>(Lexicon::load(a.lexicon));
  }
  std::unique_ptr<SentimentAnalyzer> sentiment;
  std::unique_ptr<EmotionAnalyzer> emotions;
  if (chosen.contains("google")) {
    const auto url = env("GOOGLE_NLP_URL");
    sentiment = std::make_unique<GoogleSentimentClient>(
        google_key, url.empty() ? std::string(GoogleSentimentClient::kDefaultBaseUrl) : url);
  } else {
    sentiment = std::make_unique<LexiconSentimentAnalyzer>(lexicon);
  }
  if (chosen.contains("ibm")) {
    const auto url = env("IBM_NLU_URL");
    emotions = std::make_unique<WatsonEmotionClient>(
        ibm_key, url.empty() ? std::string(WatsonEmotionClient::kDefaultBaseUrl) : url);
  } else {
    emotions = std::make_unique<LexiconEmotionAnalyzer>(lexicon);
  }

  std::ifstream in(a.in);
  const auto claims = read_canonical(in);
  AnalysisCache cache = a.cache.empty() ? AnalysisCache() : AnalysisCache(a.cache);
  EnrichOptions options;
  options.parallelism = std::max<std::size_t>(1, a.parallel);
  options.min_call_interval = std::chrono::milliseconds(a.min_interval_ms);
  EnrichStats stats;
  int code = kExitOk;
  std::vector<SentimentalRecord> enriched;
  try {
    enriched = enrich(claims, *sentiment, *emotions, cache, options, &stats);
  } catch (const PartialEnrichmentError& e) {
    enriched = e.partial();
    err << "error: " << e.failed_ids().size() << " record(s) could not be enriched:";
    for (const auto& id : e.failed_ids()) err << ' ' << id;
    err << "\n";
    code = kExitRuntime;
  }
  auto f = open_out(a.out);
  write_enriched(f, enriched);
  out << "records: " << stats.records << "\ncache hits: " << stats.cache_hits
      << "\nfresh analyses: " << stats.fresh_analyses << "\nremote calls: " << stats.remote_calls << "\n";
  return code;
}

struct TrainArgs {
  std::string data, out, head = "ffn", ffn = "deep", encoder_groups = "TEXT", side;
  bool normalize_spc = false;
  ModelFlags model;
};

int train_command(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  require_file(a.data, "data");
  ExperimentEntry entry;
  entry.id = fs::path(a.out).filename().string();
  if (entry.id.empty()) entry.id = "model";
  entry.head = a.head == "cnn" ? HeadKind::Cnn : HeadKind::Ffn;
  entry.deep_ffn = a.ffn == "deep";
  entry.fusion = make_fusion_spec(split_list(a.encoder_groups), split_list(a.side), a.normalize_spc);
  const auto options = a.model.grid_options(err);
  const auto data = load_precomputed_file(a.data);
  const auto split = split_dataset(data, a.model.seed, options.ratios);
  const auto report = run_experiment(entry, TrainConfig{}, split, a.out, options, a.model.seed);
  print_metrics(out, report);
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint, data, split = "test", out;
  std::uint64_t seed = 0;
};

int eval_command(const EvalArgs& a, std::ostream& out) {
  require_file(a.checkpoint, "checkpoint");
  require_file(a.data, "data");
  std::map<std::string, std::string> meta;
  const auto model = Model<float>::load(a.checkpoint, &meta);
  const auto data = load_precomputed_file(a.data);
  std::vector<SentimentalRecord> subset;
  if (a.split == "all") {
    subset = data;
  } else {
    auto split = split_dataset(data, a.seed);
    subset = a.split == "train" ? split.train : a.split == "valid" ? split.valid : split.test;
  }
  if (subset.empty()) throw ValidationError("the " + a.split + " split is empty");
  const auto predictions = predict_batch(model, subset, 8);
  auto metrics = evaluate_predictions(subset, predictions);
  if (auto it = meta.find("epoch"); it != meta.end()) metrics.epoch = std::stoul(it->second);
  std::vector<std::array<double, 2>> probs;
  std::vector<BinaryLabel> targets;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    probs.push_back(predictions[i].probabilities);
    targets.push_back(subset[i].label());
  }
  const double loss = bce_loss(probs, targets);
  out << "records: " << subset.size() << "\nloss: " << fixed(loss, 6) << "\naccuracy: " << fixed(metrics.accuracy)
      << "\nmacro_f1: " << fixed(metrics.macro_f1) << "\nconfusion (actual x predicted): [[" << metrics.confusion.counts[0][0]
      << ", " << metrics.confusion.counts[0][1] << "], [" << metrics.confusion.counts[1][0] << ", "
      << metrics.confusion.counts[1][1] << "]]\n";
  if (!a.out.empty()) {
    nlohmann::json j{{"checkpoint", a.checkpoint}, {"split", a.split},          {"records", subset.size()},
                     {"loss", loss},                {"accuracy", metrics.accuracy}, {"macro_f1", metrics.macro_f1},
                     {"confusion", metrics.confusion.counts}};
    auto f = open_out(a.out);
    f << j.dump(2) << "\n";
  }
  return kExitOk;
}

struct GridArgs {
  std::string config, data, out;
  std::size_t parallel = 1;
  ModelFlags model;
};

int grid_command(const GridArgs& a, std::ostream& out, std::ostream& err) {
  require_file(a.config, "config");
  const auto grid = load_grid(a.config);
  auto options = a.model.grid_options(err);
  options.parallelism = std::max<std::size_t>(1, a.parallel);
  std::vector<SentimentalRecord> data;
  if (!grid.entries.empty()) {
    require_file(a.data, "data");
    data = load_precomputed_file(a.data);
  }
  const auto reports = run_grid(grid, data, a.out, options);
  write_summary_text(reports, out);
  const bool all_failed =
      !reports.empty() && std::none_of(reports.begin(), reports.end(), [](const EvalReport& r) { return r.ok; });
  return all_failed ? kExitRuntime : kExitOk;
}

struct ReportArgs {
  std::string run_dir, data;
};

int report_command(const ReportArgs& a, std::ostream& out) {
  if (a.run_dir.empty() && a.data.empty()) throw ValidationError("report needs --run-dir and/or --data");
  if (!a.data.empty()) {
    require_file(a.data, "data");
    std::ifstream in(a.data);
    print_distribution(out, label_distribution(read_canonical(in)));
  }
  if (!a.run_dir.empty()) {
    if (!fs::is_directory(a.run_dir)) throw ValidationError("run directory '" + a.run_dir + "' does not exist");
    std::vector<fs::path> curves;
    if (fs::exists(fs::path(a.run_dir) / "loss_curve.csv")) curves.push_back(fs::path(a.run_dir) / "loss_curve.csv");
    for (const auto& entry : fs::directory_iterator(a.run_dir)) {
      if (entry.is_directory() && fs::exists(entry.path() / "loss_curve.csv")) {
        curves.push_back(entry.path() / "loss_curve.csv");
      }
    }
    std::sort(curves.begin(), curves.end());
    for (const auto& csv_path : curves) {
      std::ifstream in(csv_path);
      const auto curve = LossCurve::read_csv(in);
      const auto png = csv_path.parent_path() / "loss_curve.png";
      plot::write_loss_curve_png(curve, png);
      out << "plot: " << png.string() << " (" << curve.epochs.size() << " epochs, best " << curve.best_epoch()
          << ")\n";
    }
    const auto summary = fs::path(a.run_dir) / "summary.txt";
    if (fs::exists(summary)) {
      std::ifstream in(summary);
      out << in.rdbuf();
    }
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fake-claim classifier: dataset build, enrichment, training, evaluation, grids and reports",
               "sliar"};
  app.require_subcommand(1);

  BuildDatasetArgs build;
  auto* build_cmd = app.add_subcommand("build-dataset", "Parse, binarize and anonymize raw LIAR TSV files");
  build_cmd->add_option("--liar-tsv", build.inputs, "Raw LIAR TSV file(s), concatenated in the given order")
      ->required();
  build_cmd->add_option("--out", build.out, "Output directory for corpus.csv, speakers.csv and splits.csv")
      ->required();
  build_cmd->add_option("--seed", build.seed, "Seed for the train/valid/test assignment in splits.csv")
      ->capture_default_str();

  EnrichArgs enrich_args;
  auto* enrich_cmd = app.add_subcommand("enrich", "Attach sentiment and emotion scores to a canonical corpus");
  enrich_cmd->add_option("--in", enrich_args.in, "Canonical corpus (or a published enriched corpus with "
                                                 "--analyzer precomputed)")
      ->required();
  enrich_cmd->add_option("--out", enrich_args.out, "Enriched corpus to write")->required();
  enrich_cmd->add_option("--analyzer", enrich_args.analyzer,
                         "Comma-separated analyzers: google (sentiment, needs GOOGLE_NLP_KEY), ibm (emotions, "
                         "needs IBM_NLU_KEY and optionally IBM_NLU_URL), local, precomputed")
      ->capture_default_str();
  enrich_cmd->add_option("--cache", enrich_args.cache, "Persistent analysis cache (JSON lines)");
  enrich_cmd->add_option("--lexicon", enrich_args.lexicon, "Lexicon for the local analyzer")->capture_default_str();
  enrich_cmd->add_option("--parallel", enrich_args.parallel, "Concurrent analyzer calls")->capture_default_str();
  enrich_cmd->add_option("--min-interval-ms", enrich_args.min_interval_ms,
                         "Minimum spacing between remote calls per backend")
      ->capture_default_str();
  enrich_cmd->add_option("--seed", enrich_args.seed, "Accepted for uniformity; enrichment is deterministic");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train and evaluate one model configuration");
  train_cmd->add_option("--data", train_args.data, "Enriched corpus")->required();
  train_cmd->add_option("--out", train_args.out, "Output directory for checkpoints, curves and the report")
      ->required();
  train_cmd->add_option("--head", train_args.head, "Classification head")
      ->check(CLI::IsMember({"ffn", "cnn"}))
      ->capture_default_str();
  train_cmd->add_option("--ffn", train_args.ffn, "Feed-forward depth")
      ->check(CLI::IsMember({"deep", "shallow"}))
      ->capture_default_str();
  train_cmd->add_option("--encoder-groups", train_args.encoder_groups,
                        "Groups serialized into the encoder input, e.g. TEXT,EMO")
      ->capture_default_str();
  train_cmd->add_option("--side", train_args.side, "Groups concatenated to the pooled output, e.g. EMO,SPC,SEN");
  train_cmd->add_flag("--normalize-spc", train_args.normalize_spc, "Min-max scale side SPC counts on the train split");
  train_args.model.add_to(train_cmd);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a split of an enriched corpus");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint written by train or grid")->required();
  eval_cmd->add_option("--data", eval_args.data, "Enriched corpus")->required();
  eval_cmd->add_option("--split", eval_args.split, "Which part to evaluate")
      ->check(CLI::IsMember({"train", "valid", "test", "all"}))
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval_args.seed, "Split seed used at training time")->capture_default_str();
  eval_cmd->add_option("--out", eval_args.out, "Optional JSON report path");

  GridArgs grid_args;
  auto* grid_cmd = app.add_subcommand("grid", "Run an experiment grid and write the summary table");
  grid_cmd->add_option("--config", grid_args.config, "Grid config (e.g. configs/table3.cfg)")->required();
  grid_cmd->add_option("--data", grid_args.data, "Enriched corpus");
  grid_cmd->add_option("--out", grid_args.out, "Output directory")->required();
  grid_cmd->add_option("--parallel", grid_args.parallel, "Experiments run concurrently")->capture_default_str();
  grid_args.model.add_to(grid_cmd);

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "Redraw loss plots and print summaries or label distributions");
  report_cmd->add_option("--run-dir", report_args.run_dir, "Directory written by train or grid");
  report_cmd->add_option("--data", report_args.data, "Canonical or enriched corpus to summarize");
  std::uint64_t report_seed = 0;
  report_cmd->add_option("--seed", report_seed, "Accepted for uniformity; reports are deterministic");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*build_cmd) return build_dataset(build, out);
    if (*enrich_cmd) return enrich_command(enrich_args, out, err);
    if (*train_cmd) return train_command(train_args, out, err);
    if (*eval_cmd) return eval_command(eval_args, out);
    if (*grid_cmd) return grid_command(grid_args, out, err);
    if (*report_cmd) return report_command(report_args, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {  // validation, config and shape errors
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const LoadError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace sliar::cli
