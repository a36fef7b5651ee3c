#include "cli.hpp"

#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fastre/attribution.hpp"
#include "fastre/bench.hpp"
#include "fastre/errors.hpp"
#include "fastre/evaluation.hpp"
#include "fastre/glove.hpp"
#include "fastre/io.hpp"
#include "fastre/model_io.hpp"
#include "fastre/train.hpp"

namespace fastre::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

void require_file(const std::string& flag, const std::string& path) {
  if (!fs::is_regular_file(path)) throw ValidationError(flag + ": no such file: " + path);
}

// {"model": {...}, "train": {...}}; both sections optional.
json load_config_file(const std::string& path) {
  require_file("--config", path);
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("--config: " + std::string(e.what()));
  }
  if (!j.is_object()) throw ValidationError("--config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "model" && key != "train") {
      throw ValidationError("--config: unknown section \"" + key + "\"");
    }
    if (!value.is_object()) throw ValidationError("--config: \"" + key + "\" must be an object");
  }
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  static const std::set<std::string> known{"epochs",        "batch_size", "lr",
                                           "warmup_fraction", "weight_decay", "seed",
                                           "val_fraction",    "stop_when_perfect"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ValidationError("--config: unknown train key \"" + key + "\"");
  }
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.seed = j.value("seed", c.seed);
    c.val_fraction = j.value("val_fraction", c.val_fraction);
    c.stop_when_perfect = j.value("stop_when_perfect", c.stop_when_perfect);
  } catch (const json::exception& e) {
    throw ValidationError("--config: " + std::string(e.what()));
  }
  return c;
}

ordered_json triple_json(const Triple& t, const Model& model,
                         const std::vector<std::string>& tokens) {
  auto text = [&](std::size_t a, std::size_t b) {
    std::string s;
    for (std::size_t i = a; i <= b; ++i) s += (i > a ? " " : "") + tokens[i];
    return s;
  };
  ordered_json j;
  j["head"] = {t.head.start, t.head.end};
  j["head_type"] = std::string(kEntityTypes[t.head.type]);
  j["relation"] = model.type_map.relation_name(t.relation);
  j["tail"] = {t.tail.start, t.tail.end};
  j["head_text"] = text(t.head.start, t.head.end);
  j["tail_text"] = text(t.tail.start, t.tail.end);
  j["score"] = static_cast<double>(t.score);
  return j;
}

std::vector<Example> load_texts(const std::string& flag, const std::string& path) {
  require_file(flag, path);
  CorpusOptions opts;
  opts.max_len = std::numeric_limits<std::size_t>::max();
  return load_corpus(path, opts);
}

std::vector<std::vector<std::string>> token_lists(const std::vector<Example>& corpus) {
  std::vector<std::vector<std::string>> out;
  out.reserve(corpus.size());
  for (const auto& ex : corpus) out.push_back(ex.tokens);
  return out;
}

struct TrainArgs {
  std::string corpus, map, glove, out, config;
  std::uint64_t seed = 0;
  std::vector<std::string> ablate;
  std::size_t layers = 0;
  std::vector<std::size_t> dilations;
  std::size_t epochs = 0, batch_size = 0;
  double lr = 0.0, val_split = 0.0;
  bool stop_when_perfect = false;
};

int cmd_train(const TrainArgs& a, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  for (const auto& [flag, path] :
       {std::pair{"--corpus", a.corpus}, {"--map", a.map}, {"--glove", a.glove}}) {
    require_file(flag, path);
  }
  ModelConfig model_config;
  TrainConfig train_config;
  if (!a.config.empty()) {
    const json file = load_config_file(a.config);
    if (file.contains("model")) model_config = model_config_from_json(file.at("model").dump());
    if (file.contains("train")) train_config = train_config_from_json(file.at("train"));
  }
  auto given = [&](const char* name) { return sub.get_option(name)->count() > 0; };
  if (given("--seed")) train_config.seed = a.seed;
  if (given("--epochs")) train_config.epochs = a.epochs;
  if (given("--batch-size")) train_config.batch_size = a.batch_size;
  if (given("--lr")) train_config.lr = a.lr;
  if (given("--val-split")) train_config.val_fraction = a.val_split;
  if (a.stop_when_perfect) train_config.stop_when_perfect = true;
  for (const auto& name : a.ablate) enable_ablation(model_config.ablations, name);
  if (given("--layers")) model_config.encoder.layers = a.layers;
  if (given("--dilations")) model_config.encoder.dilation_rates = a.dilations;
  model_config.validate();
  train_config.validate();

  const auto map = TypeRelationMap::load(a.map);
  CorpusReport report;
  CorpusOptions corpus_opts;
  corpus_opts.max_len = model_config.encoder.max_len;
  const auto corpus = load_corpus(a.corpus, corpus_opts, &report);
  if (report.dropped_triples > 0) {
    err << "warning: dropped " << report.dropped_triples
        << " triples beyond the truncation window\n";
  }
  const auto glove = load_glove(a.glove, model_config.encoder.glove_dim);
  if (glove.malformed_lines > 0) {
    err << "warning: skipped " << glove.malformed_lines << " malformed GloVe lines\n";
  }
  auto vocab = build_vocab(corpus, glove);
  auto table = build_embedding_table(vocab, glove);
  auto model = create_model(model_config, map, std::move(vocab), table, train_config.seed);

  std::string metrics_text;
  auto result = train(std::move(model), corpus, train_config, [&](const EpochMetrics& m) {
    metrics_text += m.to_json() + "\n";
    err << "epoch " << m.epoch << " loss " << m.loss << " f1 " << m.f1 << "\n";
  });

  const fs::path dir(a.out);
  fs::create_directories(dir);
  const auto checkpoint = dir / "model.fre";
  const auto metrics = dir / "metrics.jsonl";
  save_model(result.model, checkpoint);
  atomic_write(metrics, metrics_text);

  ordered_json j;
  j["checkpoint"] = checkpoint.string();
  j["metrics"] = metrics.string();
  j["epochs_run"] = result.log.size();
  j["steps"] = result.log.size() * result.steps_per_epoch;
  j["final_loss"] = result.log.back().loss;
  j["final_f1"] = result.log.back().f1;
  j["first_perfect_epoch"] = result.first_perfect_epoch ? json(*result.first_perfect_epoch)
                                                        : json(nullptr);
  j["parameter_count"] = count_params(result.model).total;
  out << j.dump() << "\n";
  return 0;
}

int cmd_extract(const std::string& model_path, const std::string& input,
                const std::string& output, std::ostream& out, std::ostream& err) {
  require_file("--model", model_path);
  const auto model = load_model(model_path);
  const auto corpus = load_texts("--input", input);
  const auto tokens = token_lists(corpus);
  ExtractStats stats;
  const auto results = extract_batch(model, tokens, &stats);
  if (stats.truncated > 0) {
    err << "warning: " << stats.truncated << " sentences truncated to "
        << model.config.encoder.max_len << " tokens\n";
  }
  std::string lines;
  std::size_t count = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    ordered_json j;
    j["tokens"] = tokens[i];
    j["triples"] = json::array();
    for (const auto& t : results[i]) j["triples"].push_back(triple_json(t, model, tokens[i]));
    count += results[i].size();
    lines += j.dump() + "\n";
  }
  atomic_write(output, lines);
  ordered_json j;
  j["output"] = output;
  j["sentences"] = results.size();
  j["triples"] = count;
  out << j.dump() << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& corpus_path,
             const std::string& map_path, bool exact, std::ostream& out) {
  require_file("--model", model_path);
  require_file("--corpus", corpus_path);
  require_file("--map", map_path);
  const auto model = load_model(model_path);
  if (!(TypeRelationMap::load(map_path) == model.type_map)) {
    throw ValidationError("--map does not match the type-relation map stored in the model");
  }
  CorpusOptions opts;
  opts.max_len = model.config.encoder.max_len;
  const auto corpus = load_corpus(corpus_path, opts);
  const auto r = evaluate_model(model, corpus, exact ? MatchMode::exact : MatchMode::partial);
  auto j = ordered_json::parse(r.to_json());
  j["mode"] = exact ? "exact" : "partial";
  out << j.dump() << "\n";
  return 0;
}

int cmd_bench(const std::string& model_path, const std::string& corpus_path,
              const BenchOptions& opts, std::ostream& out) {
  require_file("--model", model_path);
  const auto model = load_model(model_path);
  const auto tokens = token_lists(load_texts("--corpus", corpus_path));
  out << benchmark(model, tokens, opts).to_json() << "\n";
  return 0;
}

int cmd_inspect(const std::string& model_path, const std::optional<std::string>& sentence,
                std::ostream& out) {
  require_file("--model", model_path);
  const auto model = load_model(model_path);
  const auto counts = count_params(model);
  ordered_json j;
  j["parameter_count"] = counts.total;
  j["groups"] = counts.groups;
  ordered_json tensors = ordered_json::array();
  for (const auto& p : model.params.params()) {
    ordered_json t;
    t["name"] = p.name;
    t["shape"] = p.tensor.shape();
    t["elements"] = p.tensor.numel();
    t["trainable"] = p.trainable;
    tensors.push_back(std::move(t));
  }
  j["tensors"] = std::move(tensors);
  j["config"] = ordered_json::parse(to_json(model.config));
  if (sentence) {
    Example ex;
    ex.tokens = tokenize(*sentence);
    ordered_json rows = ordered_json::array();
    for (const auto& a : gradient_attribution(model, ex)) {
      rows.push_back({{"token", a.token}, {"norm", a.norm}, {"normalized", a.normalized}});
    }
    j["attribution"] = std::move(rows);
  }
  out << j.dump() << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint entity and relation extraction with a dilated convolutional encoder",
               "fastre"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--corpus", ta.corpus, "Training corpus (JSONL)")->required();
  train_cmd->add_option("--map", ta.map, "Type-relation map (JSON)")->required();
  train_cmd->add_option("--glove", ta.glove, "Word vectors (GloVe text format)")->required();
  train_cmd->add_option("--out", ta.out, "Output directory")->required();
  train_cmd->add_option("--config", ta.config,
                        "JSON with optional \"model\" and \"train\" sections; flags win");
  train_cmd->add_option("--seed", ta.seed, "Random seed");
  train_cmd->add_option("--ablate", ta.ablate,
                        "no_dilation|no_gate|no_residual|no_mapping|global_threshold "
                        "(repeatable)");
  train_cmd->add_option("--layers", ta.layers, "Number of encoder blocks");
  train_cmd->add_option("--dilations", ta.dilations, "Dilation per block, comma separated")
      ->delimiter(',');
  train_cmd->add_option("--epochs", ta.epochs, "Training epochs");
  train_cmd->add_option("--batch-size", ta.batch_size, "Sentences per update");
  train_cmd->add_option("--lr", ta.lr, "Peak learning rate");
  train_cmd->add_option("--val-split", ta.val_split,
                        "Hold out this fraction for checkpoint selection (e.g. 0.05)");
  train_cmd->add_flag("--stop-when-perfect", ta.stop_when_perfect,
                      "Stop once the reported F1 reaches 1.0");

  std::string model_path, input, output, corpus, map;
  auto* extract_cmd = app.add_subcommand("extract", "Extract triples from raw sentences");
  extract_cmd->add_option("--model", model_path, "Checkpoint")->required();
  extract_cmd->add_option("--input", input, "JSONL with a \"text\" field per line")->required();
  extract_cmd->add_option("--output", output, "JSONL of extracted triples")->required();

  bool exact = false;
  auto* eval_cmd = app.add_subcommand("eval", "Score extractions against a gold corpus");
  eval_cmd->add_option("--model", model_path, "Checkpoint")->required();
  eval_cmd->add_option("--corpus", corpus, "Gold corpus (JSONL)")->required();
  eval_cmd->add_option("--map", map, "Type-relation map (JSON)")->required();
  eval_cmd->add_flag("--exact", exact, "Match full spans instead of last tokens");

  BenchOptions bench_opts;
  auto* bench_cmd = app.add_subcommand("bench", "Measure inference throughput");
  bench_cmd->add_option("--model", model_path, "Checkpoint")->required();
  bench_cmd->add_option("--corpus", corpus, "JSONL with a \"text\" field per line")->required();
  bench_cmd->add_option("--batch-sizes", bench_opts.batch_sizes, "Comma separated")
      ->delimiter(',');
  bench_cmd->add_option("--repetitions", bench_opts.repetitions, "Timed passes per batch size");
  bench_cmd->add_option("--threads", bench_opts.threads,
                        "Worker threads for an additional parallel pass");
  bench_cmd->add_option("--iteration-batch", bench_opts.iteration_batch,
                        "Batch size for training-step timing, 0 to skip");

  std::optional<std::string> sentence;
  auto* inspect_cmd = app.add_subcommand("inspect", "Parameter counts and gradient attribution");
  inspect_cmd->add_option("--model", model_path, "Checkpoint")->required();
  inspect_cmd->add_option("--attribution", sentence, "Sentence to attribute");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "ERROR: " << e.what() << "\n";
    err << (app.got_subcommand("train")     ? train_cmd->help()
            : app.got_subcommand("extract") ? extract_cmd->help()
            : app.got_subcommand("eval")    ? eval_cmd->help()
            : app.got_subcommand("bench")   ? bench_cmd->help()
            : app.got_subcommand("inspect") ? inspect_cmd->help()
                                            : app.help());
    return 1;
  }

  try {
    if (*train_cmd) return cmd_train(ta, *train_cmd, out, err);
    if (*extract_cmd) return cmd_extract(model_path, input, output, out, err);
    if (*eval_cmd) return cmd_eval(model_path, corpus, map, exact, out);
    if (*bench_cmd) return cmd_bench(model_path, corpus, bench_opts, out);
    if (*inspect_cmd) return cmd_inspect(model_path, sentence, out);
  } catch (const ValidationError& e) {
    err << "ERROR: " << e.what() << "\n";
    return 1;
  } catch (const RuntimeFailure& e) {
    err << "ERROR: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "ERROR: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace fastre::cli
