#include "nlnde/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nlnde/errors.hpp"
#include "nlnde/log.hpp"
#include "nlnde/model_io.hpp"
#include "nlnde/text.hpp"

namespace nlnde {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig preset(std::string_view run_id) {
  RunConfig run;
  run.run_id = std::string(run_id);
  auto& rep = run.representation;
  if (run_id == "S1") {
    rep.sources = {kCharSource, "ft", "bpe"};
  } else if (run_id == "S2") {
    rep.sources = {kCharSource, "ft", "ft_domain", "bpe"};
  } else if (run_id == "S3") {
    rep.sources = {kCharSource, "ft", "ft_domain", "bpe"};
    rep.include_features_in_input = true;
    run.use_noisy = true;
  } else if (run_id == "S4" || run_id == "S5") {
    rep.sources = {kCharSource, "ft", "ft_domain", "bpe"};
    rep.combine = Combine::kAttention;
    run.use_noisy = run_id == "S5";
  } else {
    throw ConfigError("unknown run '" + std::string(run_id) + "' (expected S1..S5)");
  }
  return run;
}

namespace {

SourceSpec spec_for(const RunConfig& run, const std::string& name) {
  auto it = run.sources.find(name);
  return it != run.sources.end() ? it->second : default_source_spec(name);
}

}  // namespace

SourceSet open_sources(const RunConfig& run) {
  SourceSet set;
  for (const auto& name : run.representation.sources) {
    if (name == kCharSource) continue;
    set.add(open_source(spec_for(run, name)));
  }
  return set;
}

std::map<std::string, int> frozen_source_dims(const RunConfig& run, SourceSet& sources) {
  std::map<std::string, int> dims;
  for (const auto& name : run.representation.sources) {
    if (name == kCharSource) continue;
    if (!sources.contains(name)) throw ConfigError("embedding source '" + name + "' is not loaded");
    dims[name] = sources.get(name).dim();
  }
  return dims;
}

// --- configuration file -----------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (in.fail() || !in.eof()) throw ConfigError("config key '" + key + "': bad number '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::istringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

ConfigFile parse_config(std::string_view content, const fs::path& base_dir,
                        const std::optional<std::string>& run_override) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::string> run_id = run_override;
  std::optional<std::string> file_run;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key == "run") {
      file_run = value;
    } else {
      entries.emplace_back(std::move(key), std::move(value));
    }
  }
  if (!run_id) run_id = file_run;
  if (!run_id) throw ConfigError("config names no run (set run = S1..S5 or pass --run)");

  ConfigFile cfg;
  cfg.run = preset(*run_id);
  RunConfig& run = cfg.run;
  auto path_of = [&](const std::string& v) {
    fs::path p(v);
    return p.is_absolute() ? p : base_dir / p;
  };
  for (const auto& [key, value] : entries) {
    if (key == "train_dir") {
      cfg.files.train = path_of(value);
    } else if (key == "dev_dir") {
      cfg.files.dev = path_of(value);
    } else if (key == "noisy_corpus") {
      cfg.files.noisy_corpus = path_of(value);
    } else if (key == "gazetteer") {
      cfg.files.gazetteer = path_of(value);
    } else if (key == "confusion") {
      cfg.files.confusion = path_of(value);
    } else if (key == "model_out") {
      cfg.files.model_out = path_of(value);
    } else if (key == "report_out") {
      cfg.files.report_out = path_of(value);
    } else if (key == "seed") {
      run.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "max_epochs") {
      run.max_epochs = parse_number<std::size_t>(key, value);
    } else if (key == "patience") {
      run.patience = parse_number<std::size_t>(key, value);
    } else if (key == "batch_size") {
      run.batch_size = parse_number<std::size_t>(key, value);
      if (run.batch_size == 0) throw ConfigError("batch_size must be positive");
    } else if (key == "dropout") {
      run.dropout = parse_number<double>(key, value);
      if (run.dropout < 0.0 || run.dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
    } else if (key == "learning_rate") {
      run.optimizer.lr = parse_number<double>(key, value);
    } else if (key == "noise_floor") {
      run.noise_floor = parse_number<std::size_t>(key, value);
    } else if (key == "noisy_mode") {
      if (value == "channel") {
        run.noisy_mode = NoisyMode::kChannel;
      } else if (value == "merged") {
        run.noisy_mode = NoisyMode::kMerged;
      } else {
        throw ConfigError("noisy_mode must be channel or merged");
      }
    } else if (key == "use_noisy") {
      run.use_noisy = parse_bool(key, value);
    } else if (key == "dev_exclude") {
      run.dev_exclude.clear();
      for (const auto& name : split_list(value)) {
        const auto type = parse_entity_type(name);
        if (!type) throw ConfigError("dev_exclude: unknown type '" + name + "'");
        run.dev_exclude.insert(*type);
      }
    } else if (key == "hidden") {
      run.dims.hidden = parse_number<int>(key, value);
    } else if (key == "char_dim") {
      run.dims.char_dim = parse_number<int>(key, value);
    } else if (key == "char_hidden") {
      run.dims.char_hidden = parse_number<int>(key, value);
    } else if (key == "attention_hidden") {
      run.dims.attention_hidden = parse_number<int>(key, value);
    } else if (key == "pos_dim") {
      run.dims.pos_dim = parse_number<int>(key, value);
    } else if (key.starts_with("sources.")) {
      // sources.<name> = path, sources.<name>.dim / .kind / .seed
      std::string rest = key.substr(8);
      std::string field;
      if (const auto dot = rest.find('.'); dot != std::string::npos) {
        field = rest.substr(dot + 1);
        rest = rest.substr(0, dot);
      }
      if (rest.empty() || rest == kCharSource) throw ConfigError("config key '" + key + "': bad source name");
      auto it = run.sources.find(rest);
      if (it == run.sources.end()) it = run.sources.emplace(rest, default_source_spec(rest)).first;
      SourceSpec& spec = it->second;
      if (field.empty()) {
        spec.path = path_of(value).string();
      } else if (field == "dim") {
        spec.dim = parse_number<int>(key, value);
      } else if (field == "kind") {
        if (value != "word" && value != "subword" && value != "hash") {
          throw ConfigError("config key '" + key + "': kind must be word, subword or hash");
        }
        spec.kind = value;
      } else if (field == "seed") {
        spec.seed = parse_number<std::uint64_t>(key, value);
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return cfg;
}

ConfigFile load_config(const fs::path& path, const std::optional<std::string>& run_override) {
  if (!fs::exists(path)) throw DataError("config file not found: " + path.string());
  return parse_config(read_file(path), path.parent_path(), run_override);
}

// --- report ---------------------------------------------------------------------

std::string TrainReport::to_tsv() const {
  std::ostringstream out;
  out << "epoch\tclean_loss\tnoisy_loss\tnoisy_size\tdev_p\tdev_r\tdev_f1\n";
  char buf[256];
  for (const auto& e : epochs) {
    std::string noisy = "-";
    if (e.noisy_loss) {
      std::snprintf(buf, sizeof buf, "%.6f", *e.noisy_loss);
      noisy = buf;
    }
    std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%s\t%zu\t%.4f\t%.4f\t%.4f\n", e.epoch, e.clean_loss,
                  noisy.c_str(), e.noisy_size, e.precision, e.recall, e.f1);
    out << buf;
  }
  return out.str();
}

json TrainReport::to_json() const {
  json epochs_json = json::array();
  for (const auto& e : epochs) {
    json j{{"epoch", e.epoch},       {"clean_loss", e.clean_loss}, {"noisy_size", e.noisy_size},
           {"precision", e.precision}, {"recall", e.recall},         {"f1", e.f1}};
    j["noisy_loss"] = e.noisy_loss ? json(*e.noisy_loss) : json(nullptr);
    epochs_json.push_back(std::move(j));
  }
  return {{"run", run_id},          {"seed", seed},         {"best_epoch", best_epoch},
          {"best_f1", best_f1},     {"stop_reason", stop_reason}, {"epochs", epochs_json}};
}

// --- training -------------------------------------------------------------------

namespace {

struct Example {
  const Sentence* sentence;
  const LabelSeq* labels;
};

// Shuffled, then sorted by length inside windows of 20 batches so batches
// carry little padding, then the batch order is shuffled again.
std::vector<std::vector<Example>> make_batches(const std::vector<Example>& examples,
                                               std::size_t batch_size, Rng& rng) {
  std::vector<Example> order = examples;
  shuffle(order, rng);
  const std::size_t window = batch_size * 20;
  for (std::size_t i = 0; i < order.size(); i += window) {
    const auto end = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + window));
    std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(i), end,
                     [](const Example& a, const Example& b) { return a.sentence->size() < b.sentence->size(); });
  }
  std::vector<std::vector<Example>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size)));
  }
  shuffle(batches, rng);
  return batches;
}

std::vector<ad::Parameter*> join(std::vector<ad::Parameter*> a, const std::vector<ad::Parameter*>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void check_finite(double loss, const char* pass, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(loss)) {
    throw DataError(std::string("non-finite ") + pass + " loss at epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(batch));
  }
}

void drop_empty(std::vector<LabeledSentence>& sentences, const char* what) {
  const auto before = sentences.size();
  std::erase_if(sentences, [](const LabeledSentence& s) { return s.sentence.tokens.empty(); });
  if (sentences.size() != before) log::warn("{}: skipped {} empty sentences", what, before - sentences.size());
  for (const auto& s : sentences) {
    if (s.labels.size() != s.sentence.size()) throw DataError(std::string(what) + ": label/token count mismatch");
  }
}

}  // namespace

void prepare_pos(std::vector<LabeledSentence>& sentences) { fill_missing_pos(sentences); }

void prepare_pos(std::vector<Sentence>& sentences) {
  for (auto& s : sentences) {
    for (auto& t : s.tokens) {
      if (!t.pos) t.pos = heuristic_pos(t.surface);
    }
  }
}

TrainResult train(const RunConfig& run, std::vector<LabeledSentence> clean,
                  std::vector<LabeledSentence> dev, std::optional<NoisyData> noisy,
                  SourceSet& sources, const EpochHook& hook) {
  drop_empty(clean, "training corpus");
  drop_empty(dev, "dev corpus");
  if (clean.empty()) throw DataError("training corpus is empty");
  if (dev.empty()) throw DataError("dev corpus is empty");
  if (run.use_noisy && !noisy) throw ConfigError("run " + run.run_id + " needs noisy data");
  if (!run.use_noisy && noisy) throw ConfigError("run " + run.run_id + " does not use noisy data");
  if (noisy) drop_empty(noisy->sentences, "noisy corpus");

  const LabelCatalog catalog;
  const int L = static_cast<int>(catalog.size());
  const bool channel = run.use_noisy && run.noisy_mode == NoisyMode::kChannel;

  TaggerConfig tc;
  tc.representation = run.representation;
  tc.dims = run.dims;
  tc.source_dims = frozen_source_dims(run, sources);
  tc.num_labels = L;
  tc.use_channel = channel;
  const bool features = run.representation.include_features_in_input ||
                        run.representation.combine == Combine::kAttention;
  if (features) {
    prepare_pos(clean);
    prepare_pos(dev);
    if (noisy) prepare_pos(noisy->sentences);
  }
  auto tagger = std::make_unique<Tagger>(tc, build_char_vocabulary(clean),
                                         features ? build_pos_vocabulary(clean) : Vocabulary{},
                                         FrequencyTable::from_sentences(clean), run.seed);
  if (channel) {
    tagger->channel() = init_channel(noisy->confusion, L);
    tagger->channel().logits.name = "channel.logits";
  }

  Nadam clean_opt(run.optimizer);
  Nadam noisy_opt(run.optimizer);
  const auto clean_group = join(tagger->encoder_parameters(), tagger->crf_parameters());
  const auto noisy_group =
      join(join(tagger->encoder_parameters(), tagger->head_parameters()), tagger->channel_parameters());
  for (auto* p : tagger->parameters()) p->zero_grad();

  std::vector<Example> clean_examples;
  for (const auto& s : clean) clean_examples.push_back({&s.sentence, &s.labels});

  NoiseSchedule schedule{noisy ? noisy->sentences.size() : 0, run.noise_decay, run.noise_floor};

  TrainReport report;
  report.run_id = run.run_id;
  report.seed = run.seed;
  std::vector<ad::Matrix> best;
  std::size_t since_best = 0;
  report.stop_reason = "max_epochs";

  auto snapshot = [&] {
    best.clear();
    for (auto* p : tagger->parameters()) best.push_back(p->value);
  };
  snapshot();

  // One optimizer per pass, as with two compiled models sharing layers: the
  // encoder keeps separate moments for its clean and noisy updates.
  for (std::size_t epoch = 0; epoch < run.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch + 1;

    std::vector<std::size_t> noisy_idx;
    if (noisy) {
      rec.noisy_size = schedule_size(epoch, schedule);
      noisy_idx = sample_noisy(noisy->sentences.size(), rec.noisy_size, run.seed, epoch);
    }

    std::vector<Example> pass = clean_examples;
    if (noisy && !channel) {
      for (auto i : noisy_idx) pass.push_back({&noisy->sentences[i].sentence, &noisy->sentences[i].labels});
    }

    Rng order_rng = make_rng(run.seed, {0x636c65616e, epoch});
    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (const auto& batch : make_batches(pass, run.batch_size, order_rng)) {
      std::vector<const Sentence*> sents;
      std::vector<LabelSeq> gold;
      for (const auto& ex : batch) {
        sents.push_back(ex.sentence);
        gold.push_back(*ex.labels);
      }
      const TaggerBatch tb = tagger->make_batch(sents, sources);
      Rng drop_rng = make_rng(run.seed, {0x64726f70, epoch, batch_no});
      ad::Tape tape;
      auto enc = tagger->encode(tape, tb, run.dropout, true, &drop_rng);
      ad::Var loss = tagger->crf_loss(tape, tb, enc.hidden, gold);
      check_finite(loss.scalar(), "clean", epoch + 1, batch_no);
      tape.backward(loss);
      clean_opt.step(clean_group);
      loss_sum += loss.scalar() * static_cast<double>(batch.size());
      ++batch_no;
    }
    rec.clean_loss = loss_sum / static_cast<double>(pass.size());

    if (channel && !noisy_idx.empty()) {
      std::vector<Example> noisy_examples;
      for (auto i : noisy_idx) noisy_examples.push_back({&noisy->sentences[i].sentence, &noisy->sentences[i].labels});
      Rng noisy_rng = make_rng(run.seed, {0x6e6f72646572, epoch});
      double noisy_sum = 0.0;
      std::size_t nb = 0;
      for (const auto& batch : make_batches(noisy_examples, run.batch_size, noisy_rng)) {
        std::vector<const Sentence*> sents;
        std::vector<LabelSeq> labels;
        for (const auto& ex : batch) {
          sents.push_back(ex.sentence);
          labels.push_back(*ex.labels);
        }
        const TaggerBatch tb = tagger->make_batch(sents, sources);
        Rng drop_rng = make_rng(run.seed, {0x6e64726f70, epoch, nb});
        ad::Tape tape;
        auto enc = tagger->encode(tape, tb, run.dropout, true, &drop_rng);
        ad::Var loss = tagger->channel_loss(tape, tb, enc.hidden, labels);
        check_finite(loss.scalar(), "noisy", epoch + 1, nb);
        tape.backward(loss);
        noisy_opt.step(noisy_group);
        noisy_sum += loss.scalar() * static_cast<double>(batch.size());
        ++nb;
      }
      rec.noisy_loss = noisy_sum / static_cast<double>(noisy_examples.size());
    }
    // Gradients of parameters outside the stepped group (e.g. the CRF in
    // the noisy pass) must not leak into the next step.
    for (auto* p : tagger->parameters()) p->zero_grad();

    const EvalResult dev_result = evaluate(*tagger, dev, sources, run.dev_exclude, run.batch_size);
    rec.precision = dev_result.precision();
    rec.recall = dev_result.recall();
    rec.f1 = dev_result.f1();
    report.epochs.push_back(rec);
    log::info("epoch {} clean_loss {:.4f} dev F1 {:.4f}", rec.epoch, rec.clean_loss, rec.f1);
    if (hook) hook(rec);

    if (report.best_epoch == 0 || rec.f1 > report.best_f1) {
      report.best_epoch = rec.epoch;
      report.best_f1 = rec.f1;
      since_best = 0;
      snapshot();
    } else if (++since_best >= run.patience) {
      report.stop_reason = "early_stop";
      break;
    }
  }

  auto params = tagger->parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  return {std::move(tagger), std::move(report)};
}

std::vector<LabelSeq> predict_labels(Tagger& tagger, const std::vector<Sentence>& sentences,
                                     SourceSet& sources, std::size_t batch_size) {
  std::vector<LabelSeq> out(sentences.size());
  // Length-sorted batches; results go back to input order.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (!sentences[i].tokens.empty()) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sentences[a].size() < sentences[b].size(); });
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    std::vector<const Sentence*> batch;
    const std::size_t end = std::min(order.size(), i + batch_size);
    for (std::size_t j = i; j < end; ++j) batch.push_back(&sentences[order[j]]);
    auto labels = tagger.decode(tagger.make_batch(batch, sources));
    for (std::size_t j = i; j < end; ++j) out[order[j]] = std::move(labels[j - i]);
  }
  return out;
}

std::vector<DocumentSpans> predict(Tagger& tagger, const std::vector<Sentence>& sentences,
                                   SourceSet& sources, const std::map<std::string, std::string>& texts,
                                   std::size_t batch_size) {
  const auto labels = predict_labels(tagger, sentences, sources, batch_size);
  std::map<std::string, std::u32string> decoded;
  std::vector<DocumentSpans> out;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const Sentence& s = sentences[i];
    auto [it, fresh] = index.emplace(s.doc_id, out.size());
    if (fresh) out.push_back({s.doc_id, {}});
    std::u32string_view source;
    if (auto t = texts.find(s.doc_id); t != texts.end()) {
      auto d = decoded.find(s.doc_id);
      if (d == decoded.end()) d = decoded.emplace(s.doc_id, text::decode(t->second)).first;
      source = d->second;
    }
    auto spans = decode_bio(labels[i], s, source);
    auto& dst = out[it->second].spans;
    dst.insert(dst.end(), spans.begin(), spans.end());
  }
  return out;
}

EvalResult evaluate(Tagger& tagger, const std::vector<LabeledSentence>& dev, SourceSet& sources,
                    const std::set<EntityType>& exclude, std::size_t batch_size) {
  std::vector<Sentence> sentences;
  for (const auto& s : dev) sentences.push_back(s.sentence);
  const auto labels = predict_labels(tagger, sentences, sources, batch_size);
  std::vector<LabeledSentence> predicted;
  for (std::size_t i = 0; i < dev.size(); ++i) predicted.push_back({dev[i].sentence, labels[i]});
  return entity_f1(spans_by_document(dev), spans_by_document(predicted), exclude);
}

// --- metadata -------------------------------------------------------------------

json run_metadata(const RunConfig& run) {
  json sources = json::array();
  for (const auto& name : run.representation.sources) {
    if (name == kCharSource) continue;
    const SourceSpec s = spec_for(run, name);
    sources.push_back({{"name", s.name}, {"kind", s.kind}, {"path", s.path}, {"dim", s.dim}, {"seed", s.seed}});
  }
  return {{"run", run.run_id},
          {"seed", run.seed},
          {"use_noisy", run.use_noisy},
          {"noisy_mode", run.noisy_mode == NoisyMode::kChannel ? "channel" : "merged"},
          {"sources", sources}};
}

SourceSet sources_from_metadata(const json& run_meta) {
  SourceSet set;
  if (!run_meta.contains("sources")) return set;
  for (const auto& s : run_meta.at("sources")) {
    SourceSpec spec{s.at("name").get<std::string>(), s.at("kind").get<std::string>(),
                    s.at("path").get<std::string>(), s.at("dim").get<int>(),
                    s.at("seed").get<std::uint64_t>()};
    set.add(open_source(spec));
  }
  return set;
}

// --- pipeline -------------------------------------------------------------------

TrainReport run_training(const ConfigFile& config, const EpochHook& hook) {
  const RunConfig& run = config.run;
  const TrainFiles& files = config.files;
  if (files.train.empty() || files.dev.empty()) throw ConfigError("config needs train_dir and dev_dir");
  if (files.model_out.empty()) throw ConfigError("config needs model_out");
  const LabelCatalog catalog;
  auto clean = load_labeled_corpus(files.train, catalog);
  auto dev = load_labeled_corpus(files.dev, catalog);
  log::info("loaded {} training and {} dev sentences", clean.size(), dev.size());

  std::optional<NoisyData> noisy;
  if (run.use_noisy) {
    if (files.noisy_corpus.empty()) throw ConfigError("run " + run.run_id + " needs noisy_corpus");
    NoisyData data;
    std::optional<Gazetteer> gaz;
    if (!files.gazetteer.empty()) gaz = build_gazetteer(read_gazetteer_tsv(files.gazetteer), clean);
    if (gaz) {
      for (auto& s : load_raw_sentences(files.noisy_corpus)) {
        LabelSeq labels = annotate(s, *gaz);
        data.sentences.push_back({std::move(s), std::move(labels)});
      }
    } else {
      // Already distantly labeled.
      data.sentences = read_corpus_tsv(files.noisy_corpus, catalog);
    }
    if (run.noisy_mode == NoisyMode::kChannel) {
      if (!files.confusion.empty()) {
        data.confusion = ConfusionMatrix::from_tsv(read_file(files.confusion), catalog).probabilities();
      } else if (gaz) {
        std::vector<LabelSeq> gold;
        std::vector<LabelSeq> distant;
        for (const auto& s : clean) {
          gold.push_back(s.labels);
          distant.push_back(annotate(s.sentence, *gaz));
        }
        data.confusion = estimate_confusion(gold, distant, static_cast<int>(catalog.size())).probabilities();
      } else {
        throw ConfigError("run " + run.run_id + " needs a gazetteer or a confusion file");
      }
    }
    log::info("noisy corpus: {} sentences", data.sentences.size());
    noisy = std::move(data);
  }

  SourceSet sources = open_sources(run);
  TrainResult result = train(run, std::move(clean), std::move(dev), std::move(noisy), sources, hook);
  save_model(files.model_out, *result.tagger, run_metadata(run));
  if (!files.report_out.empty()) {
    write_file(files.report_out, result.report.to_tsv());
    fs::path json_path = files.report_out;
    json_path.replace_extension(".json");
    write_file(json_path, result.report.to_json().dump(2) + "\n");
  }
  return result.report;
}

}  // namespace nlnde
