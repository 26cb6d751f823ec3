// Command-line front end: ingest, train, predict, evaluate,
// augment-lexicon and repl.

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dst/checkpoint.h"
#include "dst/corpus.h"
#include "dst/encoder.h"
#include "dst/errors.h"
#include "dst/lexicon.h"
#include "dst/metrics.h"
#include "dst/mrc_head.h"
#include "dst/repl.h"
#include "dst/schema.h"
#include "dst/sidecar.h"
#include "dst/tracker.h"
#include "dst/wd_head.h"
#include "json.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kSidecarEnv = "DST_SIDECAR";

void Log(const std::string& msg) { std::cerr << "[dst] " << msg << "\n"; }

void EchoConfig(const std::string& command, const json& config) {
  json j = config;
  j["command"] = command;
  Log("config " + j.dump());
}

// Applies the sidecar environment variable on top of `config`.
dst::EncoderConfig ResolveEncoder(dst::EncoderConfig config) {
  if (const char* addr = std::getenv(kSidecarEnv); addr != nullptr && *addr != '\0') {
    config.backend = dst::EncoderBackend::kSidecar;
    config.sidecar_address = addr;
  }
  return config;
}

json EncoderEcho(const dst::EncoderConfig& c) {
  json j = dst::EncoderConfigToJson(c);
  if (c.backend == dst::EncoderBackend::kSidecar) j["sidecar_address"] = c.sidecar_address;
  return j;
}

struct TrainFlags {
  std::string task;
  std::string schema;
  std::string dialogues;
  std::string out;
  std::string models;
  std::string lexicon;
  std::string dump;
  uint64_t seed = 0;
  uint64_t encoder_seed = 0;
  size_t dim = 64;
  size_t epochs = 20;
  size_t batch_size = 16;
  size_t hidden = 32;
  size_t proj = 64;
  size_t negatives = 3;
  std::optional<double> lr;
  double beta1 = 0.9;
  double beta2 = 0.9999;
  double epsilon = 1e-6;
  double weight_decay = 0.01;
  bool deep_only = false;
};

void WriteLines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dst::Error("cannot open '" + path + "' for writing");
  for (const auto& l : lines) out << l << "\n";
}

int RunTrain(const TrainFlags& f) {
  const dst::Task task = dst::ParseTask(f.task);
  if (f.out.empty() && f.models.empty()) throw dst::UsageError("train needs --out or --models");
  dst::EncoderConfig enc_config;
  enc_config.dim = f.dim;
  enc_config.seed = f.encoder_seed;
  enc_config = ResolveEncoder(enc_config);
  dst::AdamConfig adam;
  // The small learning rate suits pretrained sidecar encoders; the hash
  // baseline needs a larger one.
  adam.learning_rate = f.lr.value_or(enc_config.backend == dst::EncoderBackend::kSidecar ? 2e-5 : 1e-2);
  adam.beta1 = f.beta1;
  adam.beta2 = f.beta2;
  adam.epsilon = f.epsilon;
  adam.weight_decay = f.weight_decay;

  json echo = {{"task", f.task},          {"schema", f.schema},   {"dialogues", f.dialogues},
               {"out", f.out},            {"models", f.models},   {"lexicon", f.lexicon},
               {"seed", f.seed},          {"encoder", EncoderEcho(enc_config)},
               {"epochs", f.epochs},      {"batch_size", f.batch_size},
               {"learning_rate", adam.learning_rate}, {"beta1", adam.beta1},
               {"beta2", adam.beta2},     {"epsilon", adam.epsilon},
               {"weight_decay", adam.weight_decay}};
  if (task == dst::Task::kMrc) {
    echo["hidden"] = f.hidden;
  } else {
    echo["proj"] = f.proj;
    echo["negatives"] = f.negatives;
    echo["use_wide"] = task == dst::Task::kWd && !f.deep_only;
  }
  EchoConfig("train", echo);

  dst::Schema schema = dst::LoadSchema(f.schema);
  std::vector<dst::Dialogue> dialogues = dst::LoadDialogues(f.dialogues, schema);
  dst::ExampleSet examples = dst::MakeTrainingExamples(dialogues, schema, task);
  Log("loaded " + std::to_string(dialogues.size()) + " dialogues; " +
      std::to_string(task == dst::Task::kMrc ? examples.mrc.size() : examples.pairs.size()) +
      " examples, " + std::to_string(examples.skipped) + " skipped");
  if (!f.dump.empty()) {
    std::vector<std::string> lines;
    for (const auto& ex : examples.mrc) lines.push_back(dst::DumpExample(ex));
    for (const auto& ex : examples.pairs) lines.push_back(dst::DumpExample(ex));
    WriteLines(f.dump, lines);
  }

  std::unique_ptr<dst::Encoder> encoder = dst::MakeEncoder(enc_config);
  auto log = [](size_t epoch, double loss) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "epoch %zu loss %.6f", epoch + 1, loss);
    Log(buf);
  };

  std::string path = f.out;
  if (!f.models.empty()) {
    fs::create_directories(f.models);
    const fs::path enc_path = fs::path(f.models) / "encoder.json";
    json enc_json = dst::EncoderConfigToJson(enc_config);
    if (fs::exists(enc_path)) {
      json existing = dst::ReadJsonFile(enc_path.string());
      if (existing != enc_json) {
        throw dst::CompatibilityError("'" + enc_path.string() + "' was written for encoder " +
                                      existing.dump() + ", not " + enc_json.dump());
      }
    } else {
      dst::WriteJsonFile(enc_path.string(), enc_json);
    }
    if (path.empty()) path = (fs::path(f.models) / (std::string(dst::TaskName(task)) + ".json")).string();
  }

  if (task == dst::Task::kMrc) {
    dst::MrcModel model;
    model.config.hidden = f.hidden;
    model.config.epochs = f.epochs;
    model.config.batch_size = f.batch_size;
    model.config.adam = adam;
    model.config.seed = f.seed;
    model.params = dst::TrainMrc(examples.mrc, *encoder, model.config, log);
    dst::SaveMrcModel(model, path);
  } else {
    dst::SynonymLexicon lexicon;
    if (task == dst::Task::kWd && !f.lexicon.empty()) lexicon = dst::LoadLexicon(f.lexicon);
    dst::WdModel model;
    model.config.task = std::string(dst::TaskName(task));
    model.config.proj = f.proj;
    model.config.epochs = f.epochs;
    model.config.batch_size = f.batch_size;
    model.config.negatives = f.negatives;
    model.config.use_wide = task == dst::Task::kWd && !f.deep_only;
    model.config.adam = adam;
    model.config.seed = f.seed;
    auto encoded = dst::EncodeWdExamples(examples.pairs, dialogues, schema, *encoder,
                                         model.config.use_wide ? &lexicon : nullptr);
    model.params = dst::TrainWd(encoded, encoder->dim(), model.config, log);
    dst::SaveWdModel(model, path, std::string(dst::TaskName(task)));
    if (task == dst::Task::kWd && !f.models.empty()) {
      dst::SaveLexicon(lexicon, (fs::path(f.models) / "lexicon.tsv").string());
    }
  }
  Log("wrote " + path);
  return 0;
}

// Oracle or learned models. The encoder is kept alive alongside.
struct LoadedModels {
  std::unique_ptr<dst::Encoder> encoder;
  std::shared_ptr<const dst::TrackerModels> models;
};

LoadedModels LoadModels(const std::string& spec) {
  LoadedModels out;
  if (spec == "oracle") {
    out.models = std::make_shared<dst::OracleModels>();
    return out;
  }
  dst::ModelBundle bundle = dst::LoadModelBundle(spec);
  bundle.encoder = ResolveEncoder(bundle.encoder);
  out.encoder = dst::MakeEncoder(bundle.encoder);
  out.models = std::make_shared<dst::LearnedModels>(std::move(bundle), *out.encoder);
  return out;
}

int RunPredict(const std::string& schema_path, const std::string& dialogues_path,
               const std::string& models_spec, const std::string& out_path,
               const std::string& rules_path, uint64_t seed) {
  EchoConfig("predict", {{"schema", schema_path},
                         {"dialogues", dialogues_path},
                         {"models", models_spec},
                         {"out", out_path},
                         {"rules", rules_path},
                         {"seed", seed},
                         {"sidecar", std::getenv(kSidecarEnv) ? std::getenv(kSidecarEnv) : ""}});
  dst::Schema schema = dst::LoadSchema(schema_path);
  std::vector<dst::Dialogue> dialogues = dst::LoadDialogues(dialogues_path, schema);
  std::vector<dst::ResetRule> rules;
  if (!rules_path.empty()) rules = dst::LoadRules(rules_path, schema);
  LoadedModels loaded = LoadModels(models_spec);
  dst::PredictCorpusToFile(dialogues, schema, *loaded.models, rules, out_path);
  Log("wrote predictions for " + std::to_string(dialogues.size()) + " dialogues to " + out_path);
  return 0;
}

int RunEvaluate(const std::string& gold_path, const std::string& pred_path,
                const std::string& schema_path, const std::string& train_schema_path,
                const std::string& report_path, bool strict_binary) {
  EchoConfig("evaluate", {{"gold", gold_path},
                          {"pred", pred_path},
                          {"schema", schema_path},
                          {"train_schema", train_schema_path},
                          {"report", report_path},
                          {"strict_binary", strict_binary}});
  dst::Schema schema = dst::LoadSchema(schema_path);
  std::optional<dst::Schema> train_schema;
  if (!train_schema_path.empty()) train_schema = dst::LoadSchema(train_schema_path);
  std::vector<dst::Dialogue> gold = dst::LoadDialogues(gold_path, schema);
  std::vector<dst::Dialogue> pred = dst::LoadDialogues(pred_path, schema);
  dst::EvalOptions options;
  options.strict_binary = strict_binary;
  options.train_schema = train_schema ? &*train_schema : nullptr;
  dst::MetricsReport report = dst::Evaluate(pred, gold, schema, options);
  std::cout << report.ToKeyValue();
  if (!report_path.empty()) dst::WriteJsonFile(report_path, report.ToJson());
  return 0;
}

int RunIngest(const std::string& schema_path, const std::string& dialogues_path,
              const std::string& task_name, const std::string& dump_path) {
  EchoConfig("ingest", {{"schema", schema_path},
                        {"dialogues", dialogues_path},
                        {"task", task_name},
                        {"dump", dump_path}});
  dst::Schema schema = dst::LoadSchema(schema_path);
  std::vector<dst::Dialogue> dialogues = dst::LoadDialogues(dialogues_path, schema);
  size_t turns = 0, user_turns = 0, frames = 0;
  for (const auto& d : dialogues) {
    turns += d.turns.size();
    for (const auto& t : d.turns) {
      user_turns += t.speaker == dst::Speaker::kUser ? 1 : 0;
      frames += t.frames.size();
    }
  }
  std::cout << "services=" << schema.services.size() << "\n"
            << "dialogues=" << dialogues.size() << "\n"
            << "turns=" << turns << "\n"
            << "user_turns=" << user_turns << "\n"
            << "frames=" << frames << "\n";
  if (!task_name.empty()) {
    dst::Task task = dst::ParseTask(task_name);
    dst::ExampleSet ex = dst::MakeTrainingExamples(dialogues, schema, task);
    std::vector<std::string> lines;
    for (const auto& e : ex.mrc) lines.push_back(dst::DumpExample(e));
    for (const auto& e : ex.pairs) lines.push_back(dst::DumpExample(e));
    std::cout << "examples=" << lines.size() << "\n"
              << "skipped=" << ex.skipped << "\n";
    if (!dump_path.empty()) WriteLines(dump_path, lines);
  }
  return 0;
}

int RunAugment(const std::string& schema_path, const std::vector<std::string>& providers,
               size_t k, const std::string& out_path) {
  EchoConfig("augment-lexicon",
             {{"schema", schema_path}, {"providers", providers}, {"k", k}, {"out", out_path}});
  dst::Schema schema = dst::LoadSchema(schema_path);
  std::vector<std::unique_ptr<dst::CachedProvider>> owned;
  std::vector<const dst::ExpansionProvider*> ptrs;
  for (const auto& spec : providers) {
    size_t eq = spec.find('=');
    if (eq == std::string::npos) {
      throw dst::UsageError("--providers entries look like <kind>=<cache-file>, got '" + spec + "'");
    }
    dst::ProviderKind kind = dst::ParseProviderKind(spec.substr(0, eq));
    std::string path = spec.substr(eq + 1);
    owned.push_back(std::make_unique<dst::CachedProvider>(fs::path(path).stem().string(), kind, path));
    ptrs.push_back(owned.back().get());
  }
  dst::SynonymLexicon lex = dst::BuildLexicon(schema, ptrs, k);
  dst::SaveLexicon(lex, out_path);
  Log("lexicon: " + std::to_string(lex.term_count()) + " terms, " +
      std::to_string(lex.pair_count()) + " synonym pairs -> " + out_path);
  return 0;
}

int RunRepl(const std::string& schema_path, const std::string& service,
            const std::string& models_spec, const std::string& rules_path) {
  EchoConfig("repl", {{"schema", schema_path},
                      {"service", service},
                      {"models", models_spec},
                      {"rules", rules_path}});
  dst::Schema schema = dst::LoadSchema(schema_path);
  std::vector<dst::ResetRule> rules;
  if (!rules_path.empty()) rules = dst::LoadRules(rules_path, schema);
  // Encoders of every loaded bundle stay alive for the whole session.
  std::vector<std::unique_ptr<dst::Encoder>> encoders;
  auto loader = [&encoders](const std::string& spec) {
    LoadedModels m = LoadModels(spec);
    if (m.encoder) encoders.push_back(std::move(m.encoder));
    return m.models;
  };
  dst::Repl repl(schema, service, rules, loader);
  if (!models_spec.empty()) repl.SetModels(loader(models_spec));
  repl.Run(std::cin, std::cout, isatty(STDIN_FILENO) == 0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schema-guided dialogue state tracker"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // ingest
  std::string schema, dialogues, task, dump, out, models, rules, lexicon;
  auto* ingest = app.add_subcommand("ingest", "Load and validate a corpus; optionally dump examples");
  ingest->add_option("--schema", schema, "Schema file")->required();
  ingest->add_option("--dialogues", dialogues, "Dialogue file or directory")->required();
  ingest->add_option("--task", task, "Also build examples for mrc|wd|intent|reqslot");
  ingest->add_option("--dump", dump, "Write the examples as JSON lines");

  // train
  TrainFlags tf;
  double lr = 0.0;
  auto* train = app.add_subcommand("train", "Train one head");
  train->add_option("--task", tf.task, "mrc|wd|intent|reqslot")->required();
  train->add_option("--schema", tf.schema, "Schema file")->required();
  train->add_option("--dialogues", tf.dialogues, "Training dialogues")->required();
  train->add_option("--seed", tf.seed, "Root random seed")->required();
  train->add_option("--out", tf.out, "Checkpoint path");
  train->add_option("--models", tf.models, "Model directory to write <task>.json into");
  train->add_option("--lexicon", tf.lexicon, "Synonym lexicon (wd task)");
  train->add_option("--dump-examples", tf.dump, "Write training examples as JSON lines");
  train->add_option("--dim", tf.dim, "Encoder dimension")->capture_default_str();
  train->add_option("--encoder-seed", tf.encoder_seed, "Baseline encoder seed")->capture_default_str();
  train->add_option("--epochs", tf.epochs)->capture_default_str();
  train->add_option("--batch-size", tf.batch_size)->capture_default_str();
  train->add_option("--hidden", tf.hidden, "MRC gate width")->capture_default_str();
  train->add_option("--proj", tf.proj, "Deep projection width")->capture_default_str();
  train->add_option("--negatives", tf.negatives, "Sampled negatives per positive")->capture_default_str();
  auto* lr_opt = train->add_option("--lr", lr, "Learning rate (default 1e-2, 2e-5 with a sidecar)");
  train->add_option("--beta1", tf.beta1)->capture_default_str();
  train->add_option("--beta2", tf.beta2)->capture_default_str();
  train->add_option("--epsilon", tf.epsilon)->capture_default_str();
  train->add_option("--weight-decay", tf.weight_decay)->capture_default_str();
  train->add_flag("--deep-only", tf.deep_only, "Disable wide features (wd task)");

  // predict
  uint64_t seed = 0;
  auto* predict = app.add_subcommand("predict", "Track every user turn of a corpus");
  predict->add_option("--schema", schema, "Schema file")->required();
  predict->add_option("--dialogues", dialogues, "Dialogue file or directory")->required();
  predict->add_option("--models", models, "Model directory, or 'oracle'")->required();
  predict->add_option("--out", out, "Prediction file")->required();
  predict->add_option("--seed", seed, "Root random seed")->required();
  predict->add_option("--rules", rules, "Reset rules file");

  // evaluate
  std::string gold, pred, train_schema, report;
  bool strict = false;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold");
  evaluate->add_option("--gold", gold, "Gold dialogues")->required();
  evaluate->add_option("--pred", pred, "Predicted dialogues")->required();
  evaluate->add_option("--schema", schema, "Schema file")->required();
  evaluate->add_option("--train-schema", train_schema, "Schema of the training split (seen services)");
  evaluate->add_option("--report", report, "Also write the JSON report here");
  evaluate->add_flag("--strict-binary", strict, "All-or-nothing joint goal per frame");

  // augment-lexicon
  std::vector<std::string> providers;
  size_t k = 10;
  auto* augment = app.add_subcommand("augment-lexicon", "Build the synonym lexicon from provider caches");
  augment->add_option("--schema", schema, "Schema file")->required();
  augment->add_option("--providers", providers, "<kind>=<cache-file>, comma separated")
      ->required()
      ->delimiter(',');
  augment->add_option("--k", k, "Expansions per provider and term")->capture_default_str();
  augment->add_option("--out", out, "Lexicon file")->required();

  // repl
  std::string service;
  auto* repl = app.add_subcommand("repl", "Interactive turn-by-turn tracking");
  repl->add_option("--schema", schema, "Schema file")->required();
  repl->add_option("--service", service, "Service to track")->required();
  repl->add_option("--models", models, "Model directory, or 'oracle'");
  repl->add_option("--rules", rules, "Reset rules file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*ingest) return RunIngest(schema, dialogues, task, dump);
    if (*train) {
      if (*lr_opt) tf.lr = lr;
      return RunTrain(tf);
    }
    if (*predict) return RunPredict(schema, dialogues, models, out, rules, seed);
    if (*evaluate) return RunEvaluate(gold, pred, schema, train_schema, report, strict);
    if (*augment) return RunAugment(schema, providers, k, out);
    if (*repl) return RunRepl(schema, service, models, rules);
  } catch (const dst::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
