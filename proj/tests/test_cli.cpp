#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "sliar/corpus.hpp"
#include "sliar/enrichment.hpp"
#include "support.hpp"

using namespace sliar;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result sliar_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path write_liar_fixture(const fs::path& dir, std::size_t n) {
  const auto path = dir / "raw.tsv";
  std::ofstream f(path);
  write_liar(f, testing::synthetic_claims(n, 31));
  return path;
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help and unknown flags") {
  CHECK(sliar_run({"--help"}).code == 0);
  for (const auto* sub : {"build-dataset", "enrich", "train", "eval", "grid", "report"}) {
    const auto r = sliar_run({sub, "--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("--") != std::string::npos);
  }
  CHECK(sliar_run({"build-dataset", "--bogus"}).code == 1);
  CHECK(sliar_run({}).code == 1);
  CHECK(sliar_run({"frobnicate"}).code == 1);
}

TEST_CASE("build-dataset is deterministic and rejects missing inputs") {
  const auto dir = testing::scratch_dir("cli_build");
  const auto raw = write_liar_fixture(dir, 60);
  const auto a = sliar_run({"build-dataset", "--liar-tsv", raw.string(), "--out", (dir / "a").string(), "--seed", "7"});
  const auto b = sliar_run({"build-dataset", "--liar-tsv", raw.string(), "--out", (dir / "b").string(), "--seed", "7"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.out.find("records: 60") != std::string::npos);
  for (const auto* f : {"corpus.csv", "speakers.csv", "splits.csv"}) {
    CHECK(testing::read_file(dir / "a" / f) == testing::read_file(dir / "b" / f));
  }
  std::ifstream corpus(dir / "a" / "corpus.csv");
  CHECK(read_canonical(corpus).size() == 60);

  sliar_run({"build-dataset", "--liar-tsv", raw.string(), "--out", (dir / "c").string(), "--seed", "8"});
  CHECK(testing::read_file(dir / "a" / "splits.csv") != testing::read_file(dir / "c" / "splits.csv"));

  CHECK(sliar_run({"build-dataset", "--liar-tsv", (dir / "nope.tsv").string(), "--out", (dir / "x").string()}).code ==
        1);
  {
    std::ofstream bad(dir / "bad.tsv");
    bad << "1.json\ttrue\tshort row\n";
  }
  const auto bad = sliar_run({"build-dataset", "--liar-tsv", (dir / "bad.tsv").string(), "--out", (dir / "y").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("row 1") != std::string::npos);
}

TEST_CASE("enrich with the local analyzer, cache and credentials") {
  const auto dir = testing::scratch_dir("cli_enrich");
  const auto raw = write_liar_fixture(dir, 3);
  REQUIRE(sliar_run({"build-dataset", "--liar-tsv", raw.string(), "--out", dir.string()}).code == 0);
  const auto corpus = (dir / "corpus.csv").string();
  const auto cache = (dir / "cache.jsonl").string();

  const auto first = sliar_run({"enrich", "--in", corpus, "--out", (dir / "e1.csv").string(), "--analyzer", "local",
                                "--cache", cache});
  REQUIRE(first.code == 0);
  CHECK(first.out.find("remote calls: 0") != std::string::npos);
  CHECK(load_precomputed_file(dir / "e1.csv").size() == 3);

  const auto second = sliar_run({"enrich", "--in", corpus, "--out", (dir / "e2.csv").string(), "--analyzer", "local",
                                 "--cache", cache});
  REQUIRE(second.code == 0);
  CHECK(second.out.find("cache hits: 6") != std::string::npos);
  CHECK(second.out.find("fresh analyses: 0") != std::string::npos);
  CHECK(testing::read_file(dir / "e1.csv") == testing::read_file(dir / "e2.csv"));

  ::unsetenv("GOOGLE_NLP_KEY");
  ::unsetenv("IBM_NLU_KEY");
  const auto google = sliar_run({"enrich", "--in", corpus, "--out", (dir / "g.csv").string(), "--analyzer", "google"});
  CHECK(google.code == 1);
  CHECK(google.err.find("GOOGLE_NLP_KEY") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "g.csv"));
  CHECK(sliar_run({"enrich", "--in", corpus, "--out", (dir / "i.csv").string(), "--analyzer", "ibm"}).code == 1);
  CHECK(sliar_run({"enrich", "--in", corpus, "--out", (dir / "p.csv").string(), "--analyzer", "precomputed,local"})
            .code == 1);

  const auto pre = sliar_run({"enrich", "--in", testing::fixture("table1_enriched.csv").string(), "--out",
                              (dir / "pre.csv").string(), "--analyzer", "precomputed"});
  REQUIRE(pre.code == 0);
  CHECK(testing::read_file(dir / "pre.csv") == testing::read_file(testing::fixture("table1_enriched.csv")));
}

TEST_CASE("train, eval and report on a tiny corpus") {
  const auto dir = testing::scratch_dir("cli_train");
  {
    std::ofstream f(dir / "data.csv");
    write_enriched(f, testing::synthetic_enriched(40, 4));
  }
  const auto data = (dir / "data.csv").string();
  const auto run = (dir / "run").string();
  const auto trained = sliar_run({"train", "--data", data, "--out", run, "--head", "cnn", "--side", "EMO,SPC",
                                  "--normalize-spc", "--epochs", "2", "--lr", "1e-3", "--seed", "3"});
  REQUIRE(trained.code == 0);
  CHECK(trained.out.find("experiment: TEXT → [BB], BB_OP+EMO+SPC → [CNN]") != std::string::npos);
  CHECK(fs::exists(dir / "run" / "checkpoint_best.safetensors"));

  const auto evaluated = sliar_run({"eval", "--checkpoint", run + "/checkpoint_best.safetensors", "--data", data,
                                    "--split", "test", "--seed", "3", "--out", (dir / "eval.json").string()});
  REQUIRE(evaluated.code == 0);
  CHECK(evaluated.out.find("records: 4") != std::string::npos);
  CHECK(fs::exists(dir / "eval.json"));

  CHECK(sliar_run({"eval", "--checkpoint", (dir / "missing.safetensors").string(), "--data", data}).code == 1);
  CHECK(sliar_run({"train", "--data", data, "--out", run, "--side", "TEXT"}).code == 1);

  fs::remove(dir / "run" / "loss_curve.png");
  const auto report = sliar_run({"report", "--run-dir", run});
  CHECK(report.code == 0);
  CHECK(fs::exists(dir / "run" / "loss_curve.png"));
  CHECK(sliar_run({"report"}).code == 1);
}

TEST_CASE("grid runs a preset and reports config errors with lines") {
  const auto dir = testing::scratch_dir("cli_grid");
  {
    std::ofstream f(dir / "data.csv");
    write_enriched(f, testing::synthetic_enriched(40, 9));
  }
  const auto grid = sliar_run({"grid", "--config", std::string(SLIAR_CONFIG_DIR) + "/table2.cfg", "--data",
                               (dir / "data.csv").string(), "--out", (dir / "out").string(), "--epochs", "1",
                               "--encoder", "tiny", "--seed", "1"});
  REQUIRE(grid.code == 0);
  CHECK(line_count(grid.out) == 6);
  CHECK(grid.out.find("TEXT → [BB], BB_OP+EMO+SPC+SEN → [NN]") != std::string::npos);

  {
    std::ofstream bad(dir / "bad.cfg");
    bad << "grid: bad\nexperiments:\n  - id: a\n    encoder: [TEXT]\n    head: lstm\n";
  }
  const auto bad = sliar_run({"grid", "--config", (dir / "bad.cfg").string(), "--data", (dir / "data.csv").string(),
                              "--out", (dir / "bad").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("bad.cfg:5:") != std::string::npos);

  {
    std::ofstream empty(dir / "empty.cfg");
    empty << "grid: none\nexperiments: []\n";
  }
  CHECK(sliar_run({"grid", "--config", (dir / "empty.cfg").string(), "--out", (dir / "empty").string()}).code == 0);

  // every experiment failing is a runtime failure
  const auto failing = sliar_run({"grid", "--config", std::string(SLIAR_CONFIG_DIR) + "/table3.cfg", "--data",
                                  (dir / "data.csv").string(), "--out", (dir / "fail").string(), "--epochs", "1",
                                  "--cnn-kernel", "40"});
  CHECK(failing.code == 2);
}

}  // TEST_SUITE
