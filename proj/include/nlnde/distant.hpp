#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "nlnde/autodiff.hpp"
#include "nlnde/corpus.hpp"
#include "nlnde/random.hpp"

namespace nlnde {

enum class MatchMode { kCaseInsensitive, kStrict };

// PROTEINAS matches case-insensitively, every other type strictly.
MatchMode match_mode(EntityType type);

struct GazetteerEntry {
  EntityType type;
  std::string surface;
};

// Gazetteer TSV: TYPE<TAB>surface form, '#' comments.
std::vector<GazetteerEntry> parse_gazetteer_tsv(std::string_view content);
std::vector<GazetteerEntry> read_gazetteer_tsv(const std::filesystem::path& path);

// Token-sequence gazetteer per entity type.
class Gazetteer {
 public:
  // Adds a surface already split into tokens; empty forms are ignored.
  void add(EntityType type, const std::vector<std::string>& tokens);
  // Tokenizes the surface with the corpus tokenizer first.
  void add_surface(EntityType type, std::string_view surface);

  bool contains(EntityType type, const std::vector<std::string>& tokens) const;
  std::size_t size(EntityType type) const;
  // Longest entry length (in tokens) for a type; 0 when empty.
  std::size_t max_length(EntityType type) const;
  const std::set<std::vector<std::string>>& entries(EntityType type) const;

 private:
  std::string key(EntityType type, const std::vector<std::string>& tokens) const;

  std::map<EntityType, std::set<std::vector<std::string>>> entries_;
  std::unordered_set<std::string> keys_;
  std::map<EntityType, std::size_t> max_length_;
};

// PROTEINAS and NORMALIZABLES come from the file entries. UNCLEAR and
// NO_NORMALIZABLES combine file entries (guideline examples) with training
// mentions of those types seen at least twice.
Gazetteer build_gazetteer(const std::vector<GazetteerEntry>& entries,
                          const std::vector<LabeledSentence>& train);

inline constexpr std::size_t kMinMentionCount = 2;

// Token-boundary matching; overlaps resolve to the longest match, then
// type priority (kEntityTypes order), then leftmost start.
LabelSeq annotate(const Sentence& sentence, const Gazetteer& gazetteer);
std::vector<LabelSeq> annotate(const std::vector<Sentence>& sentences, const Gazetteer& gazetteer);

// Rows are clean labels, columns noisy labels.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_labels);

  int num_labels() const { return num_labels_; }
  void add(int clean, int noisy, std::uint64_t count = 1);
  std::uint64_t count(int clean, int noisy) const;
  std::uint64_t row_total(int clean) const;
  // (counts + 1e-6) / (row total + L * 1e-6); unseen rows become uniform.
  ad::Matrix probabilities() const;

  bool operator==(const ConfusionMatrix&) const = default;

  // "#counts" block then "#probabilities" block, each with a label header
  // row and a label column. Only the counts block is read back.
  std::string to_tsv(const LabelCatalog& catalog) const;
  static ConfusionMatrix from_tsv(std::string_view content, const LabelCatalog& catalog);

 private:
  int num_labels_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix estimate_confusion(const std::vector<LabelSeq>& clean,
                                   const std::vector<LabelSeq>& noisy, int num_labels);

struct NoiseSchedule {
  std::size_t initial_size = 0;
  double decay = 0.95;
  std::size_t floor = 100;
};

// size(0) = initial; size(e) = max(floor, floor(size(e-1) * decay)); an
// initial size below the floor stays constant.
std::size_t schedule_size(std::size_t epoch, const NoiseSchedule& schedule);

// Indices of a uniform sample without replacement, freshly shuffled for each
// (seed, epoch). Sizes above the corpus size take the whole corpus.
std::vector<std::size_t> sample_noisy(std::size_t corpus_size, std::size_t size, std::uint64_t seed,
                                      std::size_t epoch);

template <typename T>
std::vector<T> sample_noisy(const std::vector<T>& corpus, std::size_t size, std::uint64_t seed,
                            std::size_t epoch) {
  std::vector<T> out;
  for (std::size_t i : sample_noisy(corpus.size(), size, seed, epoch)) out.push_back(corpus[i]);
  return out;
}

// Sentences to annotate: a corpus TSV (labels ignored) or plain text with one
// sentence per line.
std::vector<Sentence> load_raw_sentences(const std::filesystem::path& path);

}  // namespace nlnde
