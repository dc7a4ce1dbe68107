#include "nlnde/distant.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "nlnde/errors.hpp"
#include "nlnde/features.hpp"
#include "nlnde/log.hpp"
#include "nlnde/model.hpp"
#include "nlnde/text.hpp"

namespace nlnde {

namespace fs = std::filesystem;

MatchMode match_mode(EntityType type) {
  return type == EntityType::kProteinas ? MatchMode::kCaseInsensitive : MatchMode::kStrict;
}

std::vector<GazetteerEntry> parse_gazetteer_tsv(std::string_view content) {
  std::vector<GazetteerEntry> entries;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("gazetteer line " + std::to_string(line_no) + ": expected TYPE<TAB>surface");
    }
    const std::string type_name = line.substr(0, tab);
    const auto type = parse_entity_type(type_name);
    if (!type) {
      throw DataError("gazetteer line " + std::to_string(line_no) + ": unknown type '" + type_name + "'");
    }
    std::string surface = line.substr(tab + 1);
    if (surface.empty()) continue;
    entries.push_back({*type, std::move(surface)});
  }
  return entries;
}

std::vector<GazetteerEntry> read_gazetteer_tsv(const fs::path& path) {
  try {
    return parse_gazetteer_tsv(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// --- Gazetteer ----------------------------------------------------------------

std::string Gazetteer::key(EntityType type, const std::vector<std::string>& tokens) const {
  std::string k(1, static_cast<char>('0' + static_cast<int>(type)));
  const bool fold = match_mode(type) == MatchMode::kCaseInsensitive;
  for (const auto& t : tokens) {
    k.push_back('\x1f');
    k += fold ? text::to_lower(t) : t;
  }
  return k;
}

void Gazetteer::add(EntityType type, const std::vector<std::string>& tokens) {
  if (tokens.empty()) return;
  for (const auto& t : tokens) {
    if (t.empty()) return;
  }
  entries_[type].insert(tokens);
  keys_.insert(key(type, tokens));
  auto& m = max_length_[type];
  m = std::max(m, tokens.size());
}

void Gazetteer::add_surface(EntityType type, std::string_view surface) {
  std::vector<std::string> tokens;
  for (const Sentence& s : tokenize(Document{"", std::string(surface)})) {
    for (const Token& t : s.tokens) tokens.push_back(t.surface);
  }
  add(type, tokens);
}

bool Gazetteer::contains(EntityType type, const std::vector<std::string>& tokens) const {
  return keys_.count(key(type, tokens)) > 0;
}

std::size_t Gazetteer::size(EntityType type) const {
  auto it = entries_.find(type);
  return it == entries_.end() ? 0 : it->second.size();
}

std::size_t Gazetteer::max_length(EntityType type) const {
  auto it = max_length_.find(type);
  return it == max_length_.end() ? 0 : it->second;
}

const std::set<std::vector<std::string>>& Gazetteer::entries(EntityType type) const {
  static const std::set<std::vector<std::string>> empty;
  auto it = entries_.find(type);
  return it == entries_.end() ? empty : it->second;
}

Gazetteer build_gazetteer(const std::vector<GazetteerEntry>& entries,
                          const std::vector<LabeledSentence>& train) {
  Gazetteer gaz;
  for (const auto& e : entries) gaz.add_surface(e.type, e.surface);

  std::map<std::pair<EntityType, std::vector<std::string>>, std::size_t> mentions;
  for (const auto& ls : train) {
    const auto& tokens = ls.sentence.tokens;
    std::size_t i = 0;
    while (i < ls.labels.size()) {
      const int label = ls.labels[i];
      if (label == LabelCatalog::outside()) {
        ++i;
        continue;
      }
      const EntityType type = LabelCatalog::type_of(label);
      std::vector<std::string> surface{tokens[i].surface};
      std::size_t j = i + 1;
      while (j < ls.labels.size() && ls.labels[j] == LabelCatalog::inside_id(type)) {
        surface.push_back(tokens[j].surface);
        ++j;
      }
      if (type == EntityType::kUnclear || type == EntityType::kNoNormalizables) {
        ++mentions[{type, surface}];
      }
      i = j;
    }
  }
  for (const auto& [key, count] : mentions) {
    if (count >= kMinMentionCount) gaz.add(key.first, key.second);
  }
  return gaz;
}

LabelSeq annotate(const Sentence& sentence, const Gazetteer& gazetteer) {
  struct Match {
    std::size_t start;
    std::size_t length;
    EntityType type;
  };
  const std::size_t n = sentence.size();
  std::vector<std::string> surfaces;
  surfaces.reserve(n);
  for (const auto& t : sentence.tokens) surfaces.push_back(t.surface);

  std::vector<Match> matches;
  for (std::size_t start = 0; start < n; ++start) {
    for (EntityType type : kEntityTypes) {
      const std::size_t longest = std::min(gazetteer.max_length(type), n - start);
      for (std::size_t len = longest; len >= 1; --len) {
        const std::vector<std::string> window(surfaces.begin() + static_cast<std::ptrdiff_t>(start),
                                              surfaces.begin() + static_cast<std::ptrdiff_t>(start + len));
        if (gazetteer.contains(type, window)) {
          matches.push_back({start, len, type});
          break;
        }
      }
    }
  }
  std::stable_sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
    if (a.length != b.length) return a.length > b.length;
    if (a.type != b.type) return static_cast<int>(a.type) < static_cast<int>(b.type);
    return a.start < b.start;
  });
  LabelSeq labels(n, LabelCatalog::outside());
  std::vector<bool> taken(n, false);
  for (const Match& m : matches) {
    bool free = true;
    for (std::size_t i = m.start; i < m.start + m.length; ++i) free &= !taken[i];
    if (!free) continue;
    for (std::size_t i = m.start; i < m.start + m.length; ++i) {
      taken[i] = true;
      labels[i] = i == m.start ? LabelCatalog::begin_id(m.type) : LabelCatalog::inside_id(m.type);
    }
  }
  return labels;
}

std::vector<LabelSeq> annotate(const std::vector<Sentence>& sentences, const Gazetteer& gazetteer) {
  std::vector<LabelSeq> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(annotate(s, gazetteer));
  return out;
}

// --- ConfusionMatrix ----------------------------------------------------------

ConfusionMatrix::ConfusionMatrix(int num_labels)
    : num_labels_(num_labels), counts_(static_cast<std::size_t>(num_labels * num_labels), 0) {}

void ConfusionMatrix::add(int clean, int noisy, std::uint64_t count) {
  if (clean < 0 || clean >= num_labels_ || noisy < 0 || noisy >= num_labels_) {
    throw DataError("confusion label out of range");
  }
  counts_[static_cast<std::size_t>(clean * num_labels_ + noisy)] += count;
}

std::uint64_t ConfusionMatrix::count(int clean, int noisy) const {
  return counts_.at(static_cast<std::size_t>(clean * num_labels_ + noisy));
}

std::uint64_t ConfusionMatrix::row_total(int clean) const {
  std::uint64_t total = 0;
  for (int j = 0; j < num_labels_; ++j) total += count(clean, j);
  return total;
}

ad::Matrix ConfusionMatrix::probabilities() const {
  ad::Matrix p(num_labels_, num_labels_);
  for (int i = 0; i < num_labels_; ++i) {
    const double denom = static_cast<double>(row_total(i)) + num_labels_ * kConfusionSmoothing;
    for (int j = 0; j < num_labels_; ++j) {
      p(i, j) = (static_cast<double>(count(i, j)) + kConfusionSmoothing) / denom;
    }
  }
  return p;
}

std::string ConfusionMatrix::to_tsv(const LabelCatalog& catalog) const {
  std::ostringstream out;
  auto header = [&](const char* title) {
    out << title;
    for (int j = 0; j < num_labels_; ++j) out << '\t' << catalog.label(j);
    out << '\n';
  };
  header("#counts");
  for (int i = 0; i < num_labels_; ++i) {
    out << catalog.label(i);
    for (int j = 0; j < num_labels_; ++j) out << '\t' << count(i, j);
    out << '\n';
  }
  const ad::Matrix p = probabilities();
  header("#probabilities");
  out << std::setprecision(17);
  for (int i = 0; i < num_labels_; ++i) {
    out << catalog.label(i);
    for (int j = 0; j < num_labels_; ++j) out << '\t' << p(i, j);
    out << '\n';
  }
  return out.str();
}

ConfusionMatrix ConfusionMatrix::from_tsv(std::string_view content, const LabelCatalog& catalog) {
  const int L = static_cast<int>(catalog.size());
  ConfusionMatrix m(L);
  std::istringstream in{std::string(content)};
  std::string line;
  bool in_counts = false;
  std::vector<int> columns;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, '\t')) f.push_back(cell);
    if (f[0].starts_with('#')) {
      in_counts = f[0] == "#counts";
      if (in_counts) {
        columns.clear();
        for (std::size_t j = 1; j < f.size(); ++j) columns.push_back(catalog.id(f[j]));
        if (static_cast<int>(columns.size()) != L) throw DataError("confusion header has wrong label count");
      }
      continue;
    }
    if (!in_counts) continue;
    if (f.size() != columns.size() + 1) throw DataError("confusion row '" + f[0] + "' has wrong width");
    const int row = catalog.id(f[0]);
    for (std::size_t j = 1; j < f.size(); ++j) m.add(row, columns[j - 1], std::stoull(f[j]));
    ++rows;
  }
  if (rows != L) throw DataError("confusion counts block has " + std::to_string(rows) + " rows, expected " + std::to_string(L));
  return m;
}

ConfusionMatrix estimate_confusion(const std::vector<LabelSeq>& clean,
                                   const std::vector<LabelSeq>& noisy, int num_labels) {
  if (clean.size() != noisy.size()) throw DataError("clean and noisy corpora differ in sentence count");
  ConfusionMatrix m(num_labels);
  for (std::size_t s = 0; s < clean.size(); ++s) {
    if (clean[s].size() != noisy[s].size()) {
      throw DataError("sentence " + std::to_string(s) + ": clean and noisy label lengths differ");
    }
    for (std::size_t t = 0; t < clean[s].size(); ++t) m.add(clean[s][t], noisy[s][t]);
  }
  return m;
}

// --- schedule -------------------------------------------------------------------

std::size_t schedule_size(std::size_t epoch, const NoiseSchedule& schedule) {
  std::size_t size = schedule.initial_size;
  if (size <= schedule.floor) return size;
  for (std::size_t e = 0; e < epoch && size > schedule.floor; ++e) {
    const auto decayed = static_cast<std::size_t>(static_cast<double>(size) * schedule.decay);
    size = std::max(schedule.floor, decayed);
  }
  return size;
}

std::vector<std::size_t> sample_noisy(std::size_t corpus_size, std::size_t size, std::uint64_t seed,
                                      std::size_t epoch) {
  if (size > corpus_size) {
    log::warn("noisy sample size {} exceeds corpus size {}; using the whole corpus", size, corpus_size);
    size = corpus_size;
  }
  std::vector<std::size_t> order(corpus_size);
  for (std::size_t i = 0; i < corpus_size; ++i) order[i] = i;
  Rng rng = make_rng(seed, {0x6e6f697379, epoch});
  shuffle(order, rng);
  order.resize(size);
  return order;
}

std::vector<Sentence> load_raw_sentences(const fs::path& path) {
  if (path.extension() == ".tsv") {
    std::string content = read_file(path);
    // Labels are irrelevant here; tolerate any label column by reading with
    // a permissive pass over the first four columns.
    std::vector<Sentence> out;
    Sentence current;
    std::string doc;
    std::istringstream in(content);
    std::string line;
    auto flush = [&] {
      if (!current.tokens.empty()) out.push_back(std::move(current));
      current = Sentence{doc, {}};
    };
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) {
        flush();
        continue;
      }
      if (line.starts_with("#doc ")) {
        flush();
        doc = line.substr(5);
        current.doc_id = doc;
        continue;
      }
      if (line.front() == '#') continue;
      std::vector<std::string> f;
      std::istringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, '\t')) f.push_back(cell);
      if (f.size() < 4) throw DataError(path.string() + ": malformed corpus line '" + line + "'");
      Token t{f[0], std::stoull(f[1]), std::stoull(f[2]), std::nullopt};
      if (f[3] != "_" && !f[3].empty()) t.pos = f[3];
      current.tokens.push_back(std::move(t));
    }
    flush();
    return out;
  }
  Document doc{path.stem().string(), read_file(path)};
  return tokenize(doc);
}

}  // namespace nlnde
