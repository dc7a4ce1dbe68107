#include "nlnde/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "nlnde/errors.hpp"
#include "nlnde/log.hpp"
#include "nlnde/text.hpp"

namespace nlnde {

namespace fs = std::filesystem;

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

std::size_t parse_offset(std::string_view field, std::string_view context) {
  if (field.empty() || !std::all_of(field.begin(), field.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw DataError("invalid offset '" + std::string(field) + "' in " + std::string(context));
  }
  return std::stoull(std::string(field));
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool alnum(char32_t c) { return text::is_letter(c) || text::is_digit(c); }

}  // namespace

std::string_view to_string(EntityType type) {
  switch (type) {
    case EntityType::kProteinas: return "PROTEINAS";
    case EntityType::kNormalizables: return "NORMALIZABLES";
    case EntityType::kNoNormalizables: return "NO_NORMALIZABLES";
    case EntityType::kUnclear: return "UNCLEAR";
  }
  return "?";
}

std::optional<EntityType> parse_entity_type(std::string_view name) {
  for (EntityType t : kEntityTypes) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

LabelCatalog::LabelCatalog() {
  labels_.push_back("O");
  for (EntityType t : kEntityTypes) {
    labels_.push_back("B-" + std::string(to_string(t)));
    labels_.push_back("I-" + std::string(to_string(t)));
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) index_[labels_[i]] = static_cast<int>(i);
}

int LabelCatalog::id(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) throw DataError("unknown label '" + std::string(label) + "'");
  return it->second;
}

// --- standoff ---------------------------------------------------------------

std::vector<EntitySpan> parse_ann(std::string_view ann, std::string_view doc_text) {
  const std::u32string source = text::decode(doc_text);
  std::vector<EntitySpan> spans;
  std::size_t line_no = 0;
  for (std::string_view raw : split(ann, '\n')) {
    ++line_no;
    const std::string_view line = strip_cr(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = "annotation line " + std::to_string(line_no);
    const auto fields = split(line, '\t');
    if (fields.size() != 3 || fields[0].empty() || fields[0].front() != 'T') {
      throw DataError("malformed " + where + ": expected T<id>\\t<TYPE> <start> <end>\\t<text>");
    }
    const std::string id(fields[0]);
    const auto head = split(fields[1], ' ');
    if (head.size() != 3) throw DataError("malformed " + where + " (" + id + ")");
    const auto type = parse_entity_type(head[0]);
    if (!type) throw DataError("unknown entity type '" + std::string(head[0]) + "' in " + id);
    EntitySpan span;
    span.id = id;
    span.type = *type;
    span.start = parse_offset(head[1], id);
    span.end = parse_offset(head[2], id);
    span.text = std::string(fields[2]);
    if (span.end <= span.start) throw DataError(id + ": end offset must exceed start offset");
    if (span.end > source.size()) {
      throw DataError(id + ": offsets [" + std::to_string(span.start) + "," +
                      std::to_string(span.end) + ") out of bounds for text of length " +
                      std::to_string(source.size()));
    }
    const std::string slice = text::encode(source.substr(span.start, span.end - span.start));
    if (slice != span.text) {
      throw DataError(id + ": annotated text '" + span.text + "' does not match source slice '" +
                      slice + "'");
    }
    spans.push_back(std::move(span));
  }
  return spans;
}

StandoffDocument load_standoff(const fs::path& text_file, const fs::path& ann_file) {
  StandoffDocument doc;
  doc.document.id = text_file.stem().string();
  doc.document.text = read_file(text_file);
  try {
    doc.spans = parse_ann(read_file(ann_file), doc.document.text);
  } catch (const DataError& e) {
    throw DataError(ann_file.string() + ": " + e.what());
  }
  return doc;
}

std::string format_ann(const std::vector<EntitySpan>& spans) {
  std::ostringstream out;
  std::size_t next = 1;
  for (const auto& s : spans) {
    const std::string id = s.id.empty() ? "T" + std::to_string(next) : s.id;
    ++next;
    out << id << '\t' << to_string(s.type) << ' ' << s.start << ' ' << s.end << '\t' << s.text
        << '\n';
  }
  return out.str();
}

void write_ann(const fs::path& path, const std::vector<EntitySpan>& spans) {
  write_file(path, format_ann(spans));
}

std::vector<StandoffDocument> load_standoff_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> texts;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") texts.push_back(entry.path());
  }
  std::sort(texts.begin(), texts.end());
  std::vector<StandoffDocument> docs;
  docs.reserve(texts.size());
  for (const auto& t : texts) {
    fs::path ann = t;
    ann.replace_extension(".ann");
    if (fs::exists(ann)) {
      docs.push_back(load_standoff(t, ann));
    } else {
      docs.push_back({{t.stem().string(), read_file(t)}, {}});
    }
  }
  return docs;
}

// --- tokenization -----------------------------------------------------------

std::vector<Token> repair_merged_token(const Token& token, std::u32string_view source) {
  if (token.surface.find('_') == std::string::npos) return {token};
  if (token.end > source.size() || token.end <= token.start) {
    throw DataError("token '" + token.surface + "' has offsets outside the source text");
  }
  const std::u32string_view original = source.substr(token.start, token.end - token.start);
  if (original.find(U'_') != std::u32string_view::npos) return {token};

  std::vector<Token> pieces;
  std::size_t cursor = token.start;
  for (std::string_view piece : split(token.surface, '_')) {
    if (piece.empty()) continue;
    const std::u32string cps = text::decode(piece);
    const std::u32string_view window = source.substr(cursor, token.end - cursor);
    const auto at = window.find(cps);
    if (at == std::u32string_view::npos) {
      throw DataError("cannot locate piece '" + std::string(piece) + "' of merged token '" +
                      token.surface + "' inside [" + std::to_string(token.start) + "," +
                      std::to_string(token.end) + ")");
    }
    Token t;
    t.surface = std::string(piece);
    t.start = cursor + at;
    t.end = t.start + cps.size();
    t.pos = token.pos;
    cursor = t.end;
    pieces.push_back(std::move(t));
  }
  if (pieces.empty()) throw DataError("merged token '" + token.surface + "' has no pieces");
  return pieces;
}

std::vector<Sentence> tokenize(const Document& doc) {
  const std::u32string src = text::decode(doc.text);
  std::vector<Sentence> sentences;
  Sentence current{doc.id, {}};
  auto flush_sentence = [&] {
    if (!current.tokens.empty()) sentences.push_back(std::move(current));
    current = Sentence{doc.id, {}};
  };
  auto emit = [&](std::size_t b, std::size_t e) {
    current.tokens.push_back({text::encode(src.substr(b, e - b)), b, e, std::nullopt});
  };

  std::size_t i = 0;
  while (i < src.size()) {
    const char32_t c = src[i];
    if (c == U'\n') {
      flush_sentence();
      ++i;
      continue;
    }
    if (text::is_space(c)) {
      ++i;
      continue;
    }
    if (!alnum(c)) {
      emit(i, i + 1);
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < src.size()) {
      if (alnum(src[j])) {
        ++j;
      } else if (!text::is_space(src[j]) && src[j] != U'\n' && j + 1 < src.size() &&
                 alnum(src[j + 1])) {
        j += 2;
      } else {
        break;
      }
    }
    emit(i, j);
    i = j;
  }
  flush_sentence();
  return sentences;
}

// --- BIO --------------------------------------------------------------------

std::optional<std::pair<std::size_t, std::size_t>> span_token_range(const Sentence& sentence,
                                                                    const EntitySpan& span) {
  std::optional<std::size_t> first;
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    const Token& t = sentence.tokens[i];
    if (t.start == span.start) first = i;
    if (t.end == span.end) last = i;
    const bool overlaps = t.start < span.end && span.start < t.end;
    const bool inside = t.start >= span.start && t.end <= span.end;
    if (overlaps && !inside) return std::nullopt;
  }
  if (!first || !last || *last < *first) return std::nullopt;
  return std::make_pair(*first, *last);
}

LabelSeq encode_bio(const Sentence& sentence, const std::vector<EntitySpan>& spans) {
  LabelSeq labels(sentence.size(), LabelCatalog::outside());
  std::vector<bool> taken(sentence.size(), false);
  for (const auto& span : spans) {
    const auto range = span_token_range(sentence, span);
    if (!range) {
      throw DataError("span " + (span.id.empty() ? std::string() : span.id + " ") + "[" +
                      std::to_string(span.start) + "," + std::to_string(span.end) +
                      ") does not align with token boundaries");
    }
    for (std::size_t i = range->first; i <= range->second; ++i) {
      if (taken[i]) {
        throw DataError("overlapping spans at token '" + sentence.tokens[i].surface + "' [" +
                        std::to_string(sentence.tokens[i].start) + "," +
                        std::to_string(sentence.tokens[i].end) + ")");
      }
      taken[i] = true;
      labels[i] = i == range->first ? LabelCatalog::begin_id(span.type)
                                    : LabelCatalog::inside_id(span.type);
    }
  }
  return labels;
}

std::vector<EntitySpan> decode_bio(const LabelSeq& labels, const Sentence& sentence,
                                   std::u32string_view source) {
  std::vector<EntitySpan> spans;
  const std::size_t n = std::min(labels.size(), sentence.size());
  auto close = [&](std::size_t first, std::size_t last, EntityType type) {
    EntitySpan s;
    s.start = sentence.tokens[first].start;
    s.end = sentence.tokens[last].end;
    s.type = type;
    if (!source.empty() && s.end <= source.size()) {
      s.text = text::encode(source.substr(s.start, s.end - s.start));
    } else {
      s.text = sentence.tokens[first].surface;
      for (std::size_t i = first + 1; i <= last; ++i) {
        const auto gap = sentence.tokens[i].start - sentence.tokens[i - 1].end;
        s.text.append(gap, ' ');
        s.text += sentence.tokens[i].surface;
      }
    }
    spans.push_back(std::move(s));
  };

  std::optional<std::size_t> open;
  EntityType open_type = EntityType::kProteinas;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = labels[i];
    const bool entity = label > 0;
    const bool continues = entity && LabelCatalog::is_inside(label) && open &&
                           LabelCatalog::type_of(label) == open_type;
    if (continues) continue;
    if (open) close(*open, i - 1, open_type);
    open.reset();
    if (entity) {
      open = i;
      open_type = LabelCatalog::type_of(label);
    }
  }
  if (open) close(*open, n - 1, open_type);
  return spans;
}

std::vector<LabeledSentence> label_documents(const std::vector<StandoffDocument>& docs) {
  std::vector<LabeledSentence> out;
  for (const auto& doc : docs) {
    const std::u32string source = text::decode(doc.document.text);
    for (Sentence s : tokenize(doc.document)) {
      std::vector<Token> repaired;
      for (const Token& t : s.tokens) {
        for (Token& piece : repair_merged_token(t, source)) repaired.push_back(std::move(piece));
      }
      s.tokens = std::move(repaired);
      const std::size_t lo = s.tokens.front().start;
      const std::size_t hi = s.tokens.back().end;
      std::vector<EntitySpan> inside;
      for (const auto& span : doc.spans) {
        if (span.end <= lo || span.start >= hi) continue;
        if (!span_token_range(s, span)) {
          log::warn("{}: dropping span {} [{},{}) '{}' not aligned with tokens", doc.document.id,
                    span.id, span.start, span.end, span.text);
          continue;
        }
        bool overlap = false;
        for (const auto& kept : inside) overlap |= kept.start < span.end && span.start < kept.end;
        if (overlap) {
          log::warn("{}: dropping span {} overlapping an earlier span", doc.document.id, span.id);
          continue;
        }
        inside.push_back(span);
      }
      LabelSeq labels = encode_bio(s, inside);
      out.push_back({std::move(s), std::move(labels)});
    }
  }
  return out;
}

// --- prepared corpus TSV ----------------------------------------------------

std::vector<LabeledSentence> parse_corpus_tsv(std::string_view content, const LabelCatalog& catalog) {
  std::vector<LabeledSentence> out;
  std::string doc_id;
  LabeledSentence current;
  auto flush = [&] {
    if (!current.sentence.tokens.empty()) out.push_back(std::move(current));
    current = LabeledSentence{};
    current.sentence.doc_id = doc_id;
  };
  std::size_t line_no = 0;
  for (std::string_view raw : split(content, '\n')) {
    ++line_no;
    const std::string_view line = strip_cr(raw);
    if (line.empty()) {
      flush();
      continue;
    }
    if (line.starts_with("#doc ")) {
      flush();
      doc_id = std::string(line.substr(5));
      current.sentence.doc_id = doc_id;
      continue;
    }
    if (line.front() == '#') continue;
    const auto f = split(line, '\t');
    const std::string where = "corpus line " + std::to_string(line_no);
    if (f.size() != 5) throw DataError("malformed " + where + ": expected 5 tab-separated columns");
    Token t;
    t.surface = std::string(f[0]);
    t.start = parse_offset(f[1], where);
    t.end = parse_offset(f[2], where);
    if (t.surface.empty() || t.end <= t.start) throw DataError("invalid token on " + where);
    if (f[3] != "_" && !f[3].empty()) t.pos = std::string(f[3]);
    if (!current.sentence.tokens.empty() && current.sentence.tokens.back().end > t.start) {
      throw DataError("token offsets not increasing on " + where);
    }
    try {
      current.labels.push_back(catalog.id(f[4]));
    } catch (const DataError& e) {
      throw DataError(std::string(e.what()) + " on " + where);
    }
    current.sentence.tokens.push_back(std::move(t));
  }
  flush();
  return out;
}

std::vector<LabeledSentence> read_corpus_tsv(const fs::path& path, const LabelCatalog& catalog) {
  try {
    return parse_corpus_tsv(read_file(path), catalog);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_corpus_tsv(const std::vector<LabeledSentence>& sentences,
                              const LabelCatalog& catalog) {
  std::ostringstream out;
  std::optional<std::string> doc;
  for (const auto& ls : sentences) {
    if (!doc || *doc != ls.sentence.doc_id) {
      doc = ls.sentence.doc_id;
      out << "#doc " << *doc << '\n';
    }
    for (std::size_t i = 0; i < ls.sentence.size(); ++i) {
      const Token& t = ls.sentence.tokens[i];
      out << t.surface << '\t' << t.start << '\t' << t.end << '\t' << t.pos.value_or("_") << '\t'
          << catalog.label(ls.labels.at(i)) << '\n';
    }
    out << '\n';
  }
  return out.str();
}

void write_corpus_tsv(const fs::path& path, const std::vector<LabeledSentence>& sentences,
                      const LabelCatalog& catalog) {
  write_file(path, format_corpus_tsv(sentences, catalog));
}

std::vector<LabeledSentence> load_labeled_corpus(const fs::path& path, const LabelCatalog& catalog) {
  if (fs::is_directory(path)) return label_documents(load_standoff_dir(path));
  if (!fs::exists(path)) throw DataError("corpus not found: " + path.string());
  return read_corpus_tsv(path, catalog);
}

std::vector<DocumentSpans> spans_by_document(const std::vector<LabeledSentence>& sentences) {
  std::vector<DocumentSpans> docs;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& ls : sentences) {
    auto [it, fresh] = index.emplace(ls.sentence.doc_id, docs.size());
    if (fresh) docs.push_back({ls.sentence.doc_id, {}});
    auto spans = decode_bio(ls.labels, ls.sentence);
    auto& dst = docs[it->second].spans;
    dst.insert(dst.end(), spans.begin(), spans.end());
  }
  return docs;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace nlnde
