#pragma once

#include <cstdint>
#include <functional>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nlnde/corpus.hpp"
#include "nlnde/distant.hpp"
#include "nlnde/embeddings.hpp"
#include "nlnde/eval.hpp"
#include "nlnde/model.hpp"
#include "nlnde/optimizer.hpp"

namespace nlnde {

// How noisy sentences enter training. kChannel alternates a clean CRF pass
// with a noisy pass through the channel; kMerged adds them to the clean pass
// as if their labels were gold (the no-noise-handling baseline).
enum class NoisyMode { kChannel, kMerged };

struct RunConfig {
  std::string run_id;
  RepresentationSpec representation;
  bool use_noisy = false;
  NoisyMode noisy_mode = NoisyMode::kChannel;
  std::size_t batch_size = 32;
  double dropout = 0.5;
  std::uint64_t seed = 13;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  double noise_decay = 0.95;
  std::size_t noise_floor = 100;
  ModelDims dims;
  NadamConfig optimizer;
  // Types left out of the dev metric used for early stopping.
  std::set<EntityType> dev_exclude = {EntityType::kNoNormalizables};
  // Frozen embedding sources by name.
  std::map<std::string, SourceSpec> sources;
};

// S1 char+ft+bpe concat; S2 adds ft_domain; S3 = S2 + features + noisy;
// S4 = S2 sources with attention; S5 = S4 + noisy. Throws ConfigError.
RunConfig preset(std::string_view run_id);

// Frozen sources of the representation, opened from run.sources or the
// default spec for the name.
SourceSet open_sources(const RunConfig& run);
std::map<std::string, int> frozen_source_dims(const RunConfig& run, SourceSet& sources);

// Files named by a run configuration, resolved against its directory.
struct TrainFiles {
  std::filesystem::path train;
  std::filesystem::path dev;
  std::filesystem::path noisy_corpus;
  std::filesystem::path gazetteer;
  std::filesystem::path confusion;
  std::filesystem::path model_out;
  std::filesystem::path report_out;
};

struct ConfigFile {
  RunConfig run;
  TrainFiles files;
};

// Flat "key = value" lines, '#' comments. `run` selects the preset (the
// override wins), every other key adjusts it. Unknown keys are ConfigErrors.
ConfigFile parse_config(std::string_view content, const std::filesystem::path& base_dir,
                        const std::optional<std::string>& run_override = std::nullopt);
ConfigFile load_config(const std::filesystem::path& path,
                       const std::optional<std::string>& run_override = std::nullopt);

struct NoisyData {
  std::vector<LabeledSentence> sentences;  // distant labels
  ad::Matrix confusion;                    // row-stochastic, clean x noisy
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double clean_loss = 0.0;
  std::optional<double> noisy_loss;
  std::size_t noisy_size = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct TrainReport {
  std::string run_id;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_f1 = 0.0;
  std::string stop_reason;  // "early_stop" or "max_epochs"

  std::string to_tsv() const;
  nlohmann::json to_json() const;
};

struct TrainResult {
  std::unique_ptr<Tagger> tagger;  // parameters of the best epoch
  TrainReport report;
};

// Callback after each epoch, e.g. for progress logging.
using EpochHook = std::function<void(const EpochRecord&)>;

TrainResult train(const RunConfig& run, std::vector<LabeledSentence> clean,
                  std::vector<LabeledSentence> dev, std::optional<NoisyData> noisy,
                  SourceSet& sources, const EpochHook& hook = {});

// Viterbi labels per sentence, batched.
std::vector<LabelSeq> predict_labels(Tagger& tagger, const std::vector<Sentence>& sentences,
                                     SourceSet& sources, std::size_t batch_size = 32);

// Spans grouped per document. With document texts, span text is the exact
// slice of the source.
std::vector<DocumentSpans> predict(Tagger& tagger, const std::vector<Sentence>& sentences,
                                   SourceSet& sources,
                                   const std::map<std::string, std::string>& texts = {},
                                   std::size_t batch_size = 32);

// Dev metric of a tagger on labeled sentences.
EvalResult evaluate(Tagger& tagger, const std::vector<LabeledSentence>& dev, SourceSet& sources,
                    const std::set<EntityType>& exclude, std::size_t batch_size = 32);

// Run metadata stored beside the tagger in the model file.
nlohmann::json run_metadata(const RunConfig& run);
// Reopens the sources recorded in a model's run metadata.
SourceSet sources_from_metadata(const nlohmann::json& run_meta);

// Fills absent POS tags in place when the tagger uses word features.
void prepare_pos(std::vector<LabeledSentence>& sentences);
void prepare_pos(std::vector<Sentence>& sentences);

// The whole pipeline of `train --config`: loads corpora, builds the noisy
// data and confusion when the run needs them, trains, writes outputs.
TrainReport run_training(const ConfigFile& config, const EpochHook& hook = {});

}  // namespace nlnde
