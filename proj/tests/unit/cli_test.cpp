#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "fastre/io.hpp"
#include "fastre/model_io.hpp"
#include "sample_fixture.hpp"

using namespace fastre;
using namespace fastre::testing;
using nlohmann::json;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string sample(const char* name) { return (sample_dir() / name).string(); }

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

constexpr const char* kSmallConfig = R"({
  "model": {"hidden": 32, "layers": 2, "dilation_rates": [1, 2], "type_dim": 8},
  "train": {"epochs": 200, "batch_size": 16, "lr": 0.003, "stop_when_perfect": true}
})";

// Trains once per test binary; several tests reuse the checkpoint.
const std::filesystem::path& trained_dir() {
  static const std::filesystem::path dir = [] {
    const auto d = scratch_dir("cli_train");
    write_text(d / "config.json", kSmallConfig);
    const auto r = run_cli({"train", "--corpus", sample("corpus.jsonl"), "--map",
                            sample("type_map.json"), "--glove", sample("glove.txt"), "--out",
                            (d / "run").string(), "--config", (d / "config.json").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    return d / "run";
  }();
  return dir;
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  const auto help = run_cli({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("train"), std::string::npos);

  const auto none = run_cli({});
  EXPECT_EQ(none.code, 1);
  EXPECT_EQ(none.err.rfind("ERROR:", 0), 0u);

  const auto unknown = run_cli({"eval", "--model", "m", "--corpus", "c", "--map", "x", "--bogus"});
  EXPECT_EQ(unknown.code, 1);
  EXPECT_NE(unknown.err.find("ERROR:"), std::string::npos);
  EXPECT_TRUE(unknown.out.empty());

  const auto missing_required = run_cli({"extract", "--model", "m"});
  EXPECT_EQ(missing_required.code, 1);
}

TEST(Cli, MissingFilesAreValidationErrors) {
  const auto r = run_cli({"eval", "--model", "/nonexistent/model.fre", "--corpus",
                          sample("corpus.jsonl"), "--map", sample("type_map.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("ERROR:", 0), 0u);
  EXPECT_TRUE(r.out.empty());

  const auto t = run_cli({"train", "--corpus", "/nonexistent.jsonl", "--map",
                          sample("type_map.json"), "--glove", sample("glove.txt"), "--out",
                          scratch_dir("cli_missing").string()});
  EXPECT_EQ(t.code, 1);
  EXPECT_NE(t.err.find("--corpus"), std::string::npos);
}

TEST(Cli, ConfigFileValidation) {
  const auto dir = scratch_dir("cli_config");
  auto train_with = [&](const std::string& config, std::vector<std::string> extra = {}) {
    write_text(dir / "c.json", config);
    std::vector<std::string> args{"train", "--corpus", sample("corpus.jsonl"), "--map",
                                  sample("type_map.json"), "--glove", sample("glove.txt"),
                                  "--out", (dir / "run").string(), "--config",
                                  (dir / "c.json").string()};
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
  };
  EXPECT_EQ(train_with(R"({"optimizer": {}})").code, 1);
  EXPECT_EQ(train_with(R"({"train": {"epochz": 3}})").code, 1);
  EXPECT_EQ(train_with(R"({"train": {"epochs": "three"}})").code, 1);
  EXPECT_EQ(train_with("[").code, 1);
  EXPECT_EQ(train_with(R"({"model": {"kernel_size": 2}})").code, 1);
  EXPECT_EQ(train_with("{}", {"--ablate", "no_attention"}).code, 1);
  EXPECT_EQ(train_with("{}", {"--layers", "3"}).code, 1);  // six dilations, three blocks

  // Flags override the file.
  const auto r = train_with(
      R"({"model": {"hidden": 8, "layers": 1, "dilation_rates": [1], "type_dim": 4},
          "train": {"epochs": 5, "batch_size": 60}})",
      {"--epochs", "2", "--ablate", "no_gate", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j.at("epochs_run"), 2);
  EXPECT_EQ(j.at("steps"), 2);
  const auto model = load_model(dir / "run" / "model.fre");
  EXPECT_TRUE(model.config.ablations.no_gate);
  EXPECT_EQ(model.config.encoder.hidden, 8u);
  std::istringstream metrics(read_file(dir / "run" / "metrics.jsonl"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(metrics, line)) {
    const auto m = json::parse(line);
    EXPECT_TRUE(m.contains("epoch") && m.contains("loss") && m.contains("lr") && m.contains("f1"));
    ++lines;
  }
  EXPECT_EQ(lines, 2u);
}

TEST(Cli, TrainThenEvalReachesPerfectScore) {
  const auto dir = trained_dir();
  ASSERT_TRUE(std::filesystem::exists(dir / "model.fre"));
  for (const char* mode : {"partial", "exact"}) {
    std::vector<std::string> args{"eval", "--model", (dir / "model.fre").string(), "--corpus",
                                  sample("corpus.jsonl"), "--map", sample("type_map.json")};
    if (std::string(mode) == "exact") args.push_back("--exact");
    const auto r = run_cli(args);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j.at("mode"), mode);
    EXPECT_DOUBLE_EQ(j.at("f1").get<double>(), 1.0);
    EXPECT_EQ(j.at("fn"), 0);
  }
}

TEST(Cli, EvalRejectsDifferentMap) {
  const auto dir = trained_dir();
  const auto other = scratch_dir("cli_map") / "map.json";
  write_text(other, R"({"PER": ["works_for"], "ORG": ["located_in", "founded"]})");
  const auto r = run_cli({"eval", "--model", (dir / "model.fre").string(), "--corpus",
                          sample("corpus.jsonl"), "--map", other.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ERROR:"), std::string::npos);
}

TEST(Cli, ExtractWritesTriples) {
  const auto dir = trained_dir();
  const auto work = scratch_dir("cli_extract");
  write_text(work / "in.jsonl",
             "{\"text\": \"Alice Smith works for Acme Corp\"}\n"
             "{\"text\": \"meanwhile it rained\"}\n");
  const auto r = run_cli({"extract", "--model", (dir / "model.fre").string(), "--input",
                          (work / "in.jsonl").string(), "--output",
                          (work / "out.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = json::parse(r.out);
  EXPECT_EQ(summary.at("sentences"), 2);
  std::istringstream lines(read_file(work / "out.jsonl"));
  std::string line;
  std::vector<json> rows;
  while (std::getline(lines, line)) rows.push_back(json::parse(line));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].at("tokens").size(), 6u);
  std::size_t triples = 0;
  for (const auto& row : rows)
    for (const auto& t : row.at("triples")) {
      for (const char* key : {"head", "head_type", "relation", "tail", "head_text", "tail_text",
                              "score"})
        EXPECT_TRUE(t.contains(key)) << key;
      ++triples;
    }
  EXPECT_EQ(summary.at("triples"), triples);
}

TEST(Cli, BenchAndInspect) {
  const auto dir = trained_dir();
  const auto work = scratch_dir("cli_bench");
  write_text(work / "empty.jsonl", "");
  const auto empty = run_cli({"bench", "--model", (dir / "model.fre").string(), "--corpus",
                              (work / "empty.jsonl").string()});
  ASSERT_EQ(empty.code, 0) << empty.err;
  EXPECT_EQ(json::parse(empty.out).at("instances"), 0);

  const auto r = run_cli({"bench", "--model", (dir / "model.fre").string(), "--corpus",
                          sample("corpus.jsonl"), "--batch-sizes", "1,8", "--repetitions", "1",
                          "--iteration-batch", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).at("instances"), 60);

  const auto bad = run_cli({"bench", "--model", (dir / "model.fre").string(), "--corpus",
                            sample("corpus.jsonl"), "--batch-sizes", "0"});
  EXPECT_EQ(bad.code, 1);

  const auto inspect = run_cli({"inspect", "--model", (dir / "model.fre").string(),
                                "--attribution", "Alice Smith works for Acme Corp"});
  ASSERT_EQ(inspect.code, 0) << inspect.err;
  const auto j = json::parse(inspect.out);
  EXPECT_GT(j.at("parameter_count").get<std::size_t>(), 0u);
  EXPECT_EQ(j.at("attribution").size(), 6u);
  std::size_t trainable = 0;
  for (const auto& t : j.at("tensors"))
    if (t.at("trainable").get<bool>()) trainable += t.at("elements").get<std::size_t>();
  EXPECT_EQ(trainable, j.at("parameter_count").get<std::size_t>());
}

TEST(Cli, CorruptModelIsFormatError) {
  const auto work = scratch_dir("cli_corrupt");
  write_text(work / "bad.fre", "FRE1\x05");
  const auto r = run_cli({"inspect", "--model", (work / "bad.fre").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("ERROR:", 0), 0u);
}
