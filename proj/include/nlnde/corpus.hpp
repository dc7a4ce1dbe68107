#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nlnde {

enum class EntityType { kProteinas, kNormalizables, kNoNormalizables, kUnclear };

// Declaration order doubles as the distant-annotation tie-break priority.
inline constexpr std::array<EntityType, 4> kEntityTypes = {
    EntityType::kProteinas, EntityType::kNormalizables, EntityType::kNoNormalizables,
    EntityType::kUnclear};

std::string_view to_string(EntityType type);
std::optional<EntityType> parse_entity_type(std::string_view name);

struct Token {
  std::string surface;
  std::size_t start = 0;  // code point offset, inclusive
  std::size_t end = 0;    // exclusive
  std::optional<std::string> pos;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::string doc_id;
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
};

struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;
  EntityType type = EntityType::kProteinas;
  std::string text;
  std::string id;  // standoff id such as "T3"; empty for predicted spans

  // Identity for evaluation: offsets and type.
  bool same_entity(const EntitySpan& other) const {
    return start == other.start && end == other.end && type == other.type;
  }
};

struct Document {
  std::string id;
  std::string text;
};

struct StandoffDocument {
  Document document;
  std::vector<EntitySpan> spans;
};

struct DocumentSpans {
  std::string doc_id;
  std::vector<EntitySpan> spans;
};

using LabelSeq = std::vector<int>;

// O, then B-t / I-t for each entity type in kEntityTypes order.
class LabelCatalog {
 public:
  LabelCatalog();

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(int id) const { return labels_.at(static_cast<std::size_t>(id)); }
  // Throws DataError for unknown labels.
  int id(std::string_view label) const;

  static constexpr int outside() { return 0; }
  static int begin_id(EntityType type) { return 1 + 2 * static_cast<int>(type); }
  static int inside_id(EntityType type) { return 2 + 2 * static_cast<int>(type); }
  static bool is_begin(int id) { return id > 0 && id % 2 == 1; }
  static bool is_inside(int id) { return id > 0 && id % 2 == 0; }
  static EntityType type_of(int id) { return static_cast<EntityType>((id - 1) / 2); }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

struct LabeledSentence {
  Sentence sentence;
  LabelSeq labels;
};

// --- standoff ---------------------------------------------------------------

// Parses .ann content against its document text. Lines starting with '#'
// (annotator notes) and blank lines are ignored.
std::vector<EntitySpan> parse_ann(std::string_view ann, std::string_view text);
StandoffDocument load_standoff(const std::filesystem::path& text_file,
                               const std::filesystem::path& ann_file);
// One T-line per span; spans without an id are numbered T1, T2, ...
std::string format_ann(const std::vector<EntitySpan>& spans);
void write_ann(const std::filesystem::path& path, const std::vector<EntitySpan>& spans);

// All <name>.txt files in a directory, paired with <name>.ann when present.
std::vector<StandoffDocument> load_standoff_dir(const std::filesystem::path& dir);

// --- tokenization -----------------------------------------------------------

// Splits a token that the task tokenizer merged with underscores back into
// its components, locating each piece inside the original span.
std::vector<Token> repair_merged_token(const Token& token, std::u32string_view source);

// Fallback tokenizer: one sentence per non-empty line; tokens are runs of
// non-space characters split at punctuation, keeping punctuation that sits
// between two alphanumerics ("3,5", "CAM5.2", "alfa-1").
std::vector<Sentence> tokenize(const Document& doc);

// --- BIO --------------------------------------------------------------------

// Token index range [first, last] covered exactly by the span, or nullopt if
// a boundary falls inside a token or outside the sentence.
std::optional<std::pair<std::size_t, std::size_t>> span_token_range(const Sentence& sentence,
                                                                    const EntitySpan& span);

LabelSeq encode_bio(const Sentence& sentence, const std::vector<EntitySpan>& spans);

// Total: orphan I-t is read as B-t, and I-u after a t-run opens a new span.
// With `source` (document code points) span text is the exact slice,
// otherwise token surfaces joined over their gaps with spaces.
std::vector<EntitySpan> decode_bio(const LabelSeq& labels, const Sentence& sentence,
                                   std::u32string_view source = {});

// Tokenizes standoff documents and projects their spans to BIO labels.
// Spans that do not align with token boundaries are dropped with a warning.
std::vector<LabeledSentence> label_documents(const std::vector<StandoffDocument>& docs);

// --- prepared corpus TSV ----------------------------------------------------

// surface<TAB>start<TAB>end<TAB>pos<TAB>label, blank line between sentences,
// "#doc <id>" headers. A pos of "_" means absent.
std::vector<LabeledSentence> parse_corpus_tsv(std::string_view content, const LabelCatalog& catalog);
std::vector<LabeledSentence> read_corpus_tsv(const std::filesystem::path& path,
                                             const LabelCatalog& catalog);
std::string format_corpus_tsv(const std::vector<LabeledSentence>& sentences,
                              const LabelCatalog& catalog);
void write_corpus_tsv(const std::filesystem::path& path,
                      const std::vector<LabeledSentence>& sentences, const LabelCatalog& catalog);

// Either a directory of standoff pairs or a corpus TSV file.
std::vector<LabeledSentence> load_labeled_corpus(const std::filesystem::path& path,
                                                 const LabelCatalog& catalog);

// Gold spans grouped per document, as seen through the labeled sentences.
std::vector<DocumentSpans> spans_by_document(const std::vector<LabeledSentence>& sentences);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace nlnde
