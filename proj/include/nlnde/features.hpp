#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nlnde/corpus.hpp"

namespace nlnde {

// Word shape classes, in predicate evaluation order (first match wins).
enum class Shape : int {
  kUpper = 0,       // letters only, all uppercase
  kLower,           // letters only, all lowercase
  kCapitalized,     // letters only, first letter uppercase
  kNumeric,         // digits only
  kMostlyNumeric,   // > 50% digits
  kPunct,           // punctuation/symbols only
  kMostlyPunct,     // > 50% punctuation/symbols
  kLetters,         // letters only, mixed case
  kAlnum,           // letters and digits only
  kOther,
};

inline constexpr int kNumLengthBins = 10;
inline constexpr int kNumFrequencyBins = 10;
inline constexpr int kNumShapes = 10;
// One-hot length + frequency + shape block of the feature vector.
inline constexpr int kOneHotFeatureDim = kNumLengthBins + kNumFrequencyBins + kNumShapes;

Shape shape_class(std::string_view word);
int length_bin(std::string_view word);

class FrequencyTable {
 public:
  void add(std::string_view word, std::uint64_t count = 1);
  std::uint64_t count(std::string_view word) const;
  std::uint64_t total() const { return total_; }
  // Relative frequency in [0, 1]; 0 for unseen words or an empty table.
  double relative(std::string_view word) const;
  const std::unordered_map<std::string, std::uint64_t>& counts() const { return counts_; }

  static FrequencyTable from_sentences(const std::vector<LabeledSentence>& sentences);

  // "#total <n>" then word<TAB>count lines sorted by word.
  std::string to_tsv() const;
  static FrequencyTable from_tsv(std::string_view content);

 private:
  std::unordered_map<std::string, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// Percent thresholds; bin = index of the first threshold the frequency
// strictly exceeds, 9 otherwise.
inline constexpr double kFrequencyThresholdsPercent[] = {1,     0.5,   0.1,    0.05,  0.01,
                                                         0.005, 0.001, 0.0005, 0.0001};

int frequency_bin(std::string_view word, const FrequencyTable& table);

// String vocabulary with a reserved unknown entry at id 0.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  Vocabulary();

  int add(std::string_view item);
  int id(std::string_view item) const;
  std::size_t size() const { return items_.size(); }
  const std::vector<std::string>& items() const { return items_; }

  // One entry per line, excluding the unknown marker.
  std::string to_text() const;
  static Vocabulary from_text(std::string_view content);

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, int> index_;
};

struct WordFeatures {
  int pos_id = Vocabulary::kUnk;
  int length_bin = 0;
  int freq_bin = 0;
  int shape_class = 0;

  bool operator==(const WordFeatures&) const = default;
};

WordFeatures featurize(const Token& token, const FrequencyTable& table, const Vocabulary& pos_vocab);

// POS vocabulary over the tags present in a corpus.
Vocabulary build_pos_vocabulary(const std::vector<LabeledSentence>& sentences);

// Small suffix/closed-class Spanish tagger for input that carries no tags.
std::string heuristic_pos(std::string_view word);

// Fills absent POS tags with heuristic_pos; returns true if any was filled.
bool fill_missing_pos(std::vector<LabeledSentence>& sentences);

}  // namespace nlnde
