#include "nlnde/features.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "nlnde/errors.hpp"
#include "nlnde/text.hpp"

namespace nlnde {

Shape shape_class(std::string_view word) {
  const std::u32string cps = text::decode(word);
  if (cps.empty()) throw DataError("shape_class of an empty word");
  std::size_t letters = 0, upper = 0, lower = 0, digits = 0, punct = 0;
  for (char32_t c : cps) {
    if (text::is_letter(c)) {
      ++letters;
      if (text::is_upper(c)) ++upper;
      if (text::is_lower(c)) ++lower;
    } else if (text::is_digit(c)) {
      ++digits;
    } else if (text::is_punct(c)) {
      ++punct;
    }
  }
  const std::size_t n = cps.size();
  const bool only_letters = letters == n;
  if (only_letters && upper > 0 && lower == 0) return Shape::kUpper;
  if (only_letters && lower > 0 && upper == 0) return Shape::kLower;
  if (only_letters && text::is_upper(cps.front())) return Shape::kCapitalized;
  if (digits == n) return Shape::kNumeric;
  if (2 * digits > n) return Shape::kMostlyNumeric;
  if (punct == n) return Shape::kPunct;
  if (2 * punct > n) return Shape::kMostlyPunct;
  if (only_letters) return Shape::kLetters;
  if (letters + digits == n) return Shape::kAlnum;
  return Shape::kOther;
}

int length_bin(std::string_view word) {
  const std::size_t n = text::length(word);
  if (n == 0) throw DataError("length_bin of an empty word");
  return static_cast<int>(std::min<std::size_t>(n, 10)) - 1;
}

// --- FrequencyTable ---------------------------------------------------------

void FrequencyTable::add(std::string_view word, std::uint64_t count) {
  counts_[std::string(word)] += count;
  total_ += count;
}

std::uint64_t FrequencyTable::count(std::string_view word) const {
  auto it = counts_.find(std::string(word));
  return it == counts_.end() ? 0 : it->second;
}

double FrequencyTable::relative(std::string_view word) const {
  if (total_ == 0) return 0.0;
  return static_cast<double>(count(word)) / static_cast<double>(total_);
}

FrequencyTable FrequencyTable::from_sentences(const std::vector<LabeledSentence>& sentences) {
  FrequencyTable table;
  for (const auto& ls : sentences) {
    for (const auto& t : ls.sentence.tokens) table.add(t.surface);
  }
  return table;
}

std::string FrequencyTable::to_tsv() const {
  std::vector<std::pair<std::string, std::uint64_t>> rows(counts_.begin(), counts_.end());
  std::sort(rows.begin(), rows.end());
  std::ostringstream out;
  out << "#total\t" << total_ << '\n';
  for (const auto& [w, c] : rows) out << w << '\t' << c << '\n';
  return out.str();
}

FrequencyTable FrequencyTable::from_tsv(std::string_view content) {
  FrequencyTable table;
  std::istringstream in{std::string(content)};
  std::string line;
  std::uint64_t declared = 0;
  bool has_total = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw DataError("malformed frequency line: " + line);
    const std::string key = line.substr(0, tab);
    const std::uint64_t value = std::stoull(line.substr(tab + 1));
    if (key == "#total") {
      declared = value;
      has_total = true;
    } else {
      table.add(key, value);
    }
  }
  if (has_total && declared != table.total_) {
    throw DataError("frequency table total " + std::to_string(declared) +
                    " does not match sum of counts " + std::to_string(table.total_));
  }
  return table;
}

int frequency_bin(std::string_view word, const FrequencyTable& table) {
  const double percent = 100.0 * table.relative(word);
  int bin = 0;
  for (double threshold : kFrequencyThresholdsPercent) {
    if (percent > threshold) return bin;
    ++bin;
  }
  return bin;
}

// --- Vocabulary -------------------------------------------------------------

Vocabulary::Vocabulary() { add("<unk>"); }

int Vocabulary::add(std::string_view item) {
  auto [it, fresh] = index_.emplace(std::string(item), static_cast<int>(items_.size()));
  if (fresh) items_.emplace_back(item);
  return it->second;
}

int Vocabulary::id(std::string_view item) const {
  auto it = index_.find(std::string(item));
  return it == index_.end() ? kUnk : it->second;
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (std::size_t i = 1; i < items_.size(); ++i) out += items_[i] + '\n';
  return out;
}

Vocabulary Vocabulary::from_text(std::string_view content) {
  Vocabulary v;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) v.add(line);
  }
  return v;
}

WordFeatures featurize(const Token& token, const FrequencyTable& table, const Vocabulary& pos_vocab) {
  WordFeatures f;
  f.pos_id = token.pos ? pos_vocab.id(*token.pos) : Vocabulary::kUnk;
  f.length_bin = length_bin(token.surface);
  f.freq_bin = frequency_bin(token.surface, table);
  f.shape_class = static_cast<int>(shape_class(token.surface));
  return f;
}

Vocabulary build_pos_vocabulary(const std::vector<LabeledSentence>& sentences) {
  Vocabulary v;
  for (const auto& ls : sentences) {
    for (const auto& t : ls.sentence.tokens) {
      if (t.pos) v.add(*t.pos);
    }
  }
  return v;
}

// --- heuristic tagger -------------------------------------------------------

namespace {

struct ClosedClass {
  const char* tag;
  std::initializer_list<const char*> words;
};

const std::array<ClosedClass, 6>& closed_classes() {
  static const std::array<ClosedClass, 6> classes = {{
      {"DA", {"el", "la", "los", "las", "lo", "al", "del"}},
      {"DI", {"un", "una", "unos", "unas"}},
      {"SP", {"de", "a", "en", "con", "por", "para", "sin", "sobre", "entre", "desde", "hasta",
              "tras", "según", "durante", "mediante", "hacia", "ante", "bajo", "contra"}},
      {"CC", {"y", "e", "o", "u", "pero", "ni", "sino"}},
      {"CS", {"que", "si", "porque", "como", "aunque", "cuando"}},
      {"P0", {"se", "le", "les", "me", "te", "nos", "su", "sus"}},
  }};
  return classes;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::string heuristic_pos(std::string_view word) {
  const Shape shape = shape_class(word);
  if (shape == Shape::kPunct || shape == Shape::kMostlyPunct) return "F";
  if (shape == Shape::kNumeric || shape == Shape::kMostlyNumeric) return "Z";
  const std::string lower = text::to_lower(word);
  for (const auto& cc : closed_classes()) {
    for (const char* w : cc.words) {
      if (lower == w) return cc.tag;
    }
  }
  if (shape == Shape::kUpper || shape == Shape::kCapitalized) return "NP";
  if (ends_with(lower, "mente")) return "RG";
  for (const char* s : {"ción", "sión", "dad", "ismo", "ura", "miento", "ina", "asa", "osa"}) {
    if (ends_with(lower, s)) return "NC";
  }
  for (const char* s : {"ado", "ada", "ido", "ida", "ados", "adas", "idos", "idas"}) {
    if (ends_with(lower, s)) return "VMP";
  }
  for (const char* s : {"ar", "er", "ir"}) {
    if (ends_with(lower, s)) return "VMN";
  }
  for (const char* s : {"ico", "ica", "icos", "icas", "al", "ales", "ble", "bles", "ivo", "iva"}) {
    if (ends_with(lower, s)) return "AQ";
  }
  return "NC";
}

bool fill_missing_pos(std::vector<LabeledSentence>& sentences) {
  bool filled = false;
  for (auto& ls : sentences) {
    for (auto& t : ls.sentence.tokens) {
      if (!t.pos) {
        t.pos = heuristic_pos(t.surface);
        filled = true;
      }
    }
  }
  return filled;
}

}  // namespace nlnde
