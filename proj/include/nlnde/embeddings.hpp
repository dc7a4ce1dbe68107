#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nlnde/autodiff.hpp"
#include "nlnde/corpus.hpp"
#include "nlnde/features.hpp"
#include "nlnde/layers.hpp"

namespace nlnde {

enum class TableKind { kWord, kSubword };

// Frozen pretrained vectors. Never modified after loading.
class EmbeddingTable {
 public:
  EmbeddingTable(std::string name, int dim, TableKind kind);

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  TableKind kind() const { return kind_; }
  std::size_t size() const { return keys_.size(); }

  // Returns false when an existing key was overwritten.
  bool set(std::string_view key, const double* values);
  // Pointer to dim() values, or nullptr.
  const double* find(std::string_view key) const;
  std::size_t max_key_length() const { return max_key_length_; }

  std::uint32_t checksum() const;

 private:
  std::string name_;
  int dim_;
  TableKind kind_;
  std::vector<std::string> keys_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
  std::size_t max_key_length_ = 0;
};

// Text vectors: "key v1 ... v_dim" per line, optional "count dim" header.
EmbeddingTable parse_vectors(std::string_view content, int expected_dim, std::string name = "",
                             TableKind kind = TableKind::kWord);
EmbeddingTable load_vectors(const std::filesystem::path& path, int expected_dim,
                            std::string name = "", TableKind kind = TableKind::kWord);

// Exact key, then lowercased key, then the zero vector.
ad::Vector lookup_word(const EmbeddingTable& table, std::string_view word);

// Mean of greedy longest-match pieces (a leading "▁" variant is tried
// first at the word start). Uncoverable characters become "<unk>" pieces if
// the table has that key and are skipped otherwise; no pieces gives zeros.
ad::Vector lookup_subword(const EmbeddingTable& table, std::string_view word);

// A named frozen word-vector provider.
class EmbeddingSource {
 public:
  virtual ~EmbeddingSource() = default;
  virtual const std::string& name() const = 0;
  virtual int dim() const = 0;
  virtual ad::Vector lookup(std::string_view word) const = 0;
};

class TableSource : public EmbeddingSource {
 public:
  explicit TableSource(EmbeddingTable table) : table_(std::move(table)) {}
  const std::string& name() const override { return table_.name(); }
  int dim() const override { return table_.dim(); }
  ad::Vector lookup(std::string_view word) const override;
  const EmbeddingTable& table() const { return table_; }

 private:
  EmbeddingTable table_;
};

// Deterministic stand-in for pretrained files: a seeded hash of the word
// selects a unit-norm vector.
class HashedSource : public EmbeddingSource {
 public:
  HashedSource(std::string name, int dim, std::uint64_t seed);
  const std::string& name() const override { return name_; }
  int dim() const override { return dim_; }
  ad::Vector lookup(std::string_view word) const override;

 private:
  std::string name_;
  int dim_;
  std::uint64_t seed_;
};

// Where a source comes from. kind is "word", "subword" or "hash"; the
// character encoder is the built-in source "char".
struct SourceSpec {
  std::string name;
  std::string kind;
  std::string path;
  int dim = 0;
  std::uint64_t seed = 0;
};

inline constexpr const char* kCharSource = "char";

// Defaults for the standard source names: ft (100, word),
// ft_domain (100, word), bpe (300, subword).
SourceSpec default_source_spec(const std::string& name);
std::unique_ptr<EmbeddingSource> open_source(const SourceSpec& spec);

// Open frozen sources with a per-word memo of lookups.
class SourceSet {
 public:
  void add(std::unique_ptr<EmbeddingSource> source);
  bool contains(const std::string& name) const;
  const EmbeddingSource& get(const std::string& name) const;
  const ad::Vector& lookup(const std::string& name, const std::string& word);

 private:
  std::map<std::string, std::unique_ptr<EmbeddingSource>> sources_;
  std::map<std::string, std::unordered_map<std::string, ad::Vector>> cache_;
};

// Character vocabulary with id 0 for unknown characters.
Vocabulary build_char_vocabulary(const std::vector<LabeledSentence>& sentences);

// Character BiLSTM; a word is the concatenation of the last forward and last
// backward hidden states.
struct CharEncoder {
  Vocabulary chars;
  ad::Parameter embedding;  // char_dim x |chars|
  BiLstm lstm;

  CharEncoder() = default;
  CharEncoder(Vocabulary chars, int char_dim, int hidden, Rng& rng);

  int dim() const { return static_cast<int>(2 * lstm.forward.hidden); }
  // One output column per word. Words must be non-empty.
  ad::Var encode(ad::Tape& tape, const std::vector<std::string>& words);
  ad::Vector encode(const std::string& word);
  std::vector<ad::Parameter*> parameters();
};

enum class Combine { kConcat, kAttention };

struct RepresentationSpec {
  std::vector<std::string> sources;
  Combine combine = Combine::kConcat;
  bool include_features_in_input = false;
};

// CONCAT: sum of source dims (+ feature_dim with features); ATTENTION: max
// source dim.
int representation_dim(const RepresentationSpec& spec, const std::map<std::string, int>& source_dims,
                       int feature_dim);

// Single-token CONCAT assembly: source vectors in spec order, then the
// realized feature vector when requested. Throws ConfigError on a missing
// source. ATTENTION specs are assembled by attention_select.
ad::Vector assemble_concat(const RepresentationSpec& spec,
                           const std::map<std::string, ad::Vector>& source_vectors,
                           const ad::Vector& features);

}  // namespace nlnde
