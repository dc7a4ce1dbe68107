#include "nlnde/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "nlnde/corpus.hpp"
#include "nlnde/distant.hpp"
#include "nlnde/errors.hpp"
#include "nlnde/eval.hpp"
#include "nlnde/log.hpp"
#include "nlnde/model_io.hpp"
#include "nlnde/trainer.hpp"

namespace nlnde {

namespace fs = std::filesystem;

namespace {

// Signals a usage problem found after flag parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_exists(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw DataError(std::string(what) + " not found: " + p.string());
}

// Sentences to tag from a standoff directory, a corpus TSV or a text file,
// plus the document texts when known.
struct Input {
  std::vector<Sentence> sentences;
  std::map<std::string, std::string> texts;
  bool is_directory = false;
};

Input read_input(const fs::path& path) {
  require_exists(path, "input");
  Input in;
  if (fs::is_directory(path)) {
    in.is_directory = true;
    for (const auto& doc : load_standoff_dir(path)) {
      in.texts[doc.document.id] = doc.document.text;
      for (auto& s : tokenize(doc.document)) in.sentences.push_back(std::move(s));
    }
  } else {
    in.sentences = load_raw_sentences(path);
  }
  return in;
}

int cmd_train(const std::string& config, const std::optional<std::string>& run,
              const std::optional<std::uint64_t>& seed, std::ostream& out) {
  ConfigFile cfg = load_config(config, run);
  if (seed) cfg.run.seed = *seed;
  const TrainReport report = run_training(cfg);
  out << "run " << report.run_id << " seed " << report.seed << ": best dev F1 " << report.best_f1
      << " at epoch " << report.best_epoch << " (" << report.stop_reason << ")\n";
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::optional<std::string>& run,
                const std::string& input, const std::string& out_path, std::ostream& out) {
  require_exists(model_path, "model");
  LoadedModel model = load_model(model_path);
  const std::string model_run = model.metadata.at("run").value("run", std::string());
  if (run && *run != model_run) {
    throw ConfigError("model was trained as run " + model_run + ", not " + *run);
  }
  SourceSet sources = sources_from_metadata(model.metadata.at("run"));
  Input in = read_input(input);
  if (model.tagger->uses_features()) prepare_pos(in.sentences);
  const LabelCatalog catalog;
  if (in.is_directory) {
    const auto spans = predict(*model.tagger, in.sentences, sources, in.texts);
    std::map<std::string, const DocumentSpans*> by_doc;
    for (const auto& d : spans) by_doc[d.doc_id] = &d;
    std::size_t total = 0;
    for (const auto& [id, _] : in.texts) {
      const auto it = by_doc.find(id);
      std::vector<EntitySpan> doc_spans;
      if (it != by_doc.end()) doc_spans = it->second->spans;
      total += doc_spans.size();
      write_ann(fs::path(out_path) / (id + ".ann"), doc_spans);
    }
    out << "wrote " << in.texts.size() << " documents, " << total << " entities\n";
  } else {
    const auto labels = predict_labels(*model.tagger, in.sentences, sources);
    std::vector<LabeledSentence> tagged;
    for (std::size_t i = 0; i < in.sentences.size(); ++i) tagged.push_back({in.sentences[i], labels[i]});
    write_corpus_tsv(out_path, tagged, catalog);
    out << "wrote " << tagged.size() << " sentences\n";
  }
  return kExitOk;
}

int cmd_eval(const std::string& gold, const std::string& pred, const std::vector<std::string>& exclude,
             const std::string& json_out, std::ostream& out) {
  require_exists(gold, "gold");
  require_exists(pred, "predictions");
  std::set<EntityType> ex;
  for (const auto& name : exclude) {
    const auto t = parse_entity_type(name);
    if (!t) throw UsageError("--exclude: unknown type '" + name + "'");
    ex.insert(*t);
  }
  const EvalResult r = entity_f1(load_spans(gold), load_spans(pred), ex);
  out << report(r);
  if (!json_out.empty()) write_file(json_out, report_json(r).dump(2) + "\n");
  return kExitOk;
}

Gazetteer load_gazetteer(const std::string& path, const std::string& train_path) {
  require_exists(path, "gazetteer");
  std::vector<LabeledSentence> train;
  if (!train_path.empty()) {
    require_exists(train_path, "training corpus");
    train = load_labeled_corpus(train_path, LabelCatalog{});
  }
  return build_gazetteer(read_gazetteer_tsv(path), train);
}

int cmd_annotate(const std::string& gazetteer, const std::string& train, const std::string& input,
                 const std::string& out_path, std::ostream& out) {
  const Gazetteer gaz = load_gazetteer(gazetteer, train);
  Input in = read_input(input);
  std::vector<LabeledSentence> tagged;
  std::size_t entities = 0;
  for (auto& s : in.sentences) {
    LabelSeq labels = annotate(s, gaz);
    entities += static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), LabelCatalog::is_begin));
    tagged.push_back({std::move(s), std::move(labels)});
  }
  write_corpus_tsv(out_path, tagged, LabelCatalog{});
  out << "annotated " << tagged.size() << " sentences, " << entities << " entities\n";
  return kExitOk;
}

int cmd_confusion(const std::string& gold, const std::string& gazetteer, const std::string& out_path,
                  std::ostream& out) {
  require_exists(gold, "gold");
  const LabelCatalog catalog;
  const auto train = load_labeled_corpus(gold, catalog);
  require_exists(gazetteer, "gazetteer");
  const Gazetteer gaz = build_gazetteer(read_gazetteer_tsv(gazetteer), train);
  std::vector<LabelSeq> clean;
  std::vector<LabelSeq> noisy;
  for (const auto& s : train) {
    clean.push_back(s.labels);
    noisy.push_back(annotate(s.sentence, gaz));
  }
  const ConfusionMatrix m = estimate_confusion(clean, noisy, static_cast<int>(catalog.size()));
  write_file(out_path, m.to_tsv(catalog));
  out << "confusion over " << train.size() << " sentences written to " << out_path << "\n";
  return kExitOk;
}

int cmd_attention(const std::string& model_path, const std::string& input, const std::string& out_path,
                  std::ostream& out) {
  require_exists(model_path, "model");
  LoadedModel model = load_model(model_path);
  Tagger& tagger = *model.tagger;
  if (!tagger.uses_attention()) {
    throw UsageError("model run " + model.metadata.at("run").value("run", std::string("?")) +
                     " has no attention layer");
  }
  SourceSet sources = sources_from_metadata(model.metadata.at("run"));
  Input in = read_input(input);
  prepare_pos(in.sentences);
  std::string tsv = "token";
  for (const auto& name : tagger.config().representation.sources) tsv += "\tw_" + name;
  tsv += '\n';
  char buf[32];
  std::size_t rows = 0;
  for (std::size_t i = 0; i < in.sentences.size(); i += 32) {
    std::vector<const Sentence*> batch;
    for (std::size_t j = i; j < std::min(in.sentences.size(), i + 32); ++j) {
      if (!in.sentences[j].tokens.empty()) batch.push_back(&in.sentences[j]);
    }
    if (batch.empty()) continue;
    const auto weights = tagger.attention_weights(tagger.make_batch(batch, sources));
    for (std::size_t b = 0; b < batch.size(); ++b) {
      for (std::size_t t = 0; t < batch[b]->size(); ++t) {
        tsv += batch[b]->tokens[t].surface;
        for (Eigen::Index k = 0; k < weights[b].rows(); ++k) {
          std::snprintf(buf, sizeof buf, "\t%.6f", weights[b](k, static_cast<Eigen::Index>(t)));
          tsv += buf;
        }
        tsv += '\n';
        ++rows;
      }
    }
  }
  write_file(out_path, tsv);
  out << "wrote attention weights for " << rows << " tokens\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Biomedical entity tagger: train, predict, evaluate, distant annotation", "nlnde"};
  app.require_subcommand(1);
  std::uint64_t seed = 13;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (default 13)");

  std::string config, model, input, output, gold, pred, gazetteer, train_corpus, json_out;
  std::optional<std::string> run;
  std::vector<std::string> exclude;

  auto* train = app.add_subcommand("train", "Train a model from a run configuration");
  train->add_option("--config", config, "Run configuration file")->required();
  train->add_option("--run", run, "Run preset S1..S5, overrides the config")
      ->check(CLI::IsMember({"S1", "S2", "S3", "S4", "S5"}));

  auto* predict_cmd = app.add_subcommand("predict", "Tag documents with a trained model");
  predict_cmd->add_option("--model", model, "Model file")->required();
  predict_cmd->add_option("--run", run, "Expected run preset of the model")
      ->check(CLI::IsMember({"S1", "S2", "S3", "S4", "S5"}));
  predict_cmd->add_option("--input", input, "Directory of .txt documents, corpus TSV or text")->required();
  predict_cmd->add_option("--out", output, "Output directory for .ann files (or TSV file)")->required();

  auto* eval = app.add_subcommand("eval", "Entity-level precision, recall and F1");
  eval->add_option("--gold", gold, "Gold standoff directory or corpus TSV")->required();
  eval->add_option("--pred", pred, "Predicted standoff directory or corpus TSV")->required();
  eval->add_option("--exclude", exclude, "Entity types to leave out");
  eval->add_option("--json", json_out, "Also write the result as JSON");

  auto* annotate_cmd = app.add_subcommand("annotate", "Distantly annotate raw text with a gazetteer");
  annotate_cmd->add_option("--gazetteer", gazetteer, "Gazetteer TSV")->required();
  annotate_cmd->add_option("--train", train_corpus, "Training corpus for mention-derived entries");
  annotate_cmd->add_option("--input", input, "Text (one sentence per line), corpus TSV or directory")->required();
  annotate_cmd->add_option("--out", output, "Output corpus TSV")->required();

  auto* confusion = app.add_subcommand("confusion", "Estimate the distant-label confusion matrix");
  confusion->add_option("--gold", gold, "Gold training corpus")->required();
  confusion->add_option("--gazetteer", gazetteer, "Gazetteer TSV")->required();
  confusion->add_option("--out", output, "Output matrix TSV")->required();

  auto* attention = app.add_subcommand("attention", "Per-token embedding attention weights");
  attention->add_option("--model", model, "Model file")->required();
  attention->add_option("--input", input, "Text (one sentence per line), corpus TSV or directory")->required();
  attention->add_option("--out", output, "Output TSV")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(config, run, seed_opt->count() ? std::optional(seed) : std::nullopt, out);
    if (*predict_cmd) return cmd_predict(model, run, input, output, out);
    if (*eval) return cmd_eval(gold, pred, exclude, json_out, out);
    if (*annotate_cmd) return cmd_annotate(gazetteer, train_corpus, input, output, out);
    if (*confusion) return cmd_confusion(gold, gazetteer, output, out);
    if (*attention) return cmd_attention(model, input, output, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitData;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "data error: malformed model metadata: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace nlnde
