#include "nlnde/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>

#include <zlib.h>

#include "nlnde/errors.hpp"
#include "nlnde/log.hpp"
#include "nlnde/text.hpp"

namespace nlnde {

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t b = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > b) out.push_back(line.substr(b, i - b));
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool is_integer(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

constexpr std::string_view kWordStart = "\xE2\x96\x81";  // U+2581

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

// --- EmbeddingTable -----------------------------------------------------------

EmbeddingTable::EmbeddingTable(std::string name, int dim, TableKind kind)
    : name_(std::move(name)), dim_(dim), kind_(kind) {
  if (dim <= 0) throw ConfigError("embedding dimension must be positive");
}

bool EmbeddingTable::set(std::string_view key, const double* values) {
  const auto d = static_cast<std::size_t>(dim_);
  auto [it, fresh] = index_.emplace(std::string(key), keys_.size());
  if (fresh) {
    keys_.emplace_back(key);
    data_.insert(data_.end(), values, values + d);
    max_key_length_ = std::max(max_key_length_, text::length(key));
  } else {
    std::copy(values, values + d, data_.begin() + static_cast<std::ptrdiff_t>(it->second * d));
  }
  return fresh;
}

const double* EmbeddingTable::find(std::string_view key) const {
  auto it = index_.find(std::string(key));
  if (it == index_.end()) return nullptr;
  return data_.data() + it->second * static_cast<std::size_t>(dim_);
}

std::uint32_t EmbeddingTable::checksum() const {
  uLong crc = crc32(0L, Z_NULL, 0);
  for (const auto& k : keys_) {
    crc = crc32(crc, reinterpret_cast<const Bytef*>(k.data()), static_cast<uInt>(k.size()));
  }
  crc = crc32(crc, reinterpret_cast<const Bytef*>(data_.data()),
              static_cast<uInt>(data_.size() * sizeof(double)));
  return static_cast<std::uint32_t>(crc);
}

EmbeddingTable parse_vectors(std::string_view content, int expected_dim, std::string name,
                             TableKind kind) {
  EmbeddingTable table(std::move(name), expected_dim, kind);
  std::vector<double> values(static_cast<std::size_t>(expected_dim));
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto fields = split_spaces(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2 && is_integer(fields[0]) && is_integer(fields[1])) {
      if (std::stoi(std::string(fields[1])) != expected_dim) {
        throw DataError("vector header declares dimension " + std::string(fields[1]) +
                        ", expected " + std::to_string(expected_dim));
      }
      continue;
    }
    if (static_cast<int>(fields.size()) - 1 != expected_dim) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(expected_dim) + " values, found " +
                      std::to_string(fields.size() - 1));
    }
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (!parse_double(fields[i], values[i - 1])) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse '" +
                        std::string(fields[i]) + "' as a number");
      }
    }
    if (!table.set(fields[0], values.data())) {
      log::warn("vectors line {}: duplicate key '{}', keeping the last entry", line_no,
                std::string(fields[0]));
    }
  }
  return table;
}

EmbeddingTable load_vectors(const std::filesystem::path& path, int expected_dim, std::string name,
                            TableKind kind) {
  try {
    return parse_vectors(read_file(path), expected_dim, std::move(name), kind);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

ad::Vector lookup_word(const EmbeddingTable& table, std::string_view word) {
  const double* v = table.find(word);
  if (!v) v = table.find(text::to_lower(word));
  if (!v) return ad::Vector::Zero(table.dim());
  return Eigen::Map<const ad::Vector>(v, table.dim());
}

ad::Vector lookup_subword(const EmbeddingTable& table, std::string_view word) {
  const std::u32string cps = text::decode(word);
  ad::Vector total = ad::Vector::Zero(table.dim());
  int pieces = 0;
  const double* unk = table.find("<unk>");
  std::size_t i = 0;
  while (i < cps.size()) {
    const std::size_t longest = std::min(table.max_key_length(), cps.size() - i);
    const double* hit = nullptr;
    std::size_t used = 0;
    for (std::size_t len = longest; len >= 1 && !hit; --len) {
      const std::string piece = text::encode(std::u32string_view(cps).substr(i, len));
      if (i == 0) hit = table.find(std::string(kWordStart) + piece);
      if (!hit) hit = table.find(piece);
      if (hit) used = len;
    }
    if (hit) {
      total += Eigen::Map<const ad::Vector>(hit, table.dim());
      ++pieces;
      i += used;
    } else {
      if (unk) {
        total += Eigen::Map<const ad::Vector>(unk, table.dim());
        ++pieces;
      }
      ++i;
    }
  }
  if (pieces > 0) total /= static_cast<double>(pieces);
  return total;
}

// --- sources ----------------------------------------------------------------

ad::Vector TableSource::lookup(std::string_view word) const {
  return table_.kind() == TableKind::kWord ? lookup_word(table_, word) : lookup_subword(table_, word);
}

HashedSource::HashedSource(std::string name, int dim, std::uint64_t seed)
    : name_(std::move(name)), dim_(dim), seed_(seed) {
  if (dim <= 0) throw ConfigError("embedding dimension must be positive");
}

ad::Vector HashedSource::lookup(std::string_view word) const {
  const std::uint64_t h = fnv1a(word, fnv1a(name_) ^ seed_);
  Rng rng = make_rng(h);
  ad::Vector v(dim_);
  for (int i = 0; i < dim_; ++i) v(i) = uniform(rng, -1.0, 1.0);
  return v / v.norm();
}

SourceSpec default_source_spec(const std::string& name) {
  if (name == "ft") return {name, "word", "", 100, 0};
  if (name == "ft_domain") return {name, "word", "", 100, 0};
  if (name == "bpe") return {name, "subword", "", 300, 0};
  return {name, "word", "", 0, 0};
}

std::unique_ptr<EmbeddingSource> open_source(const SourceSpec& spec) {
  if (spec.kind == "hash") return std::make_unique<HashedSource>(spec.name, spec.dim, spec.seed);
  TableKind kind;
  if (spec.kind == "word") {
    kind = TableKind::kWord;
  } else if (spec.kind == "subword") {
    kind = TableKind::kSubword;
  } else {
    throw ConfigError("source '" + spec.name + "': unknown kind '" + spec.kind + "'");
  }
  if (spec.path.empty()) throw ConfigError("source '" + spec.name + "' has no vector file");
  if (!std::filesystem::exists(spec.path)) {
    throw DataError("embedding source '" + spec.name + "': file not found: " + spec.path);
  }
  return std::make_unique<TableSource>(load_vectors(spec.path, spec.dim, spec.name, kind));
}

void SourceSet::add(std::unique_ptr<EmbeddingSource> source) {
  const std::string name = source->name();
  cache_.erase(name);
  sources_[name] = std::move(source);
}

bool SourceSet::contains(const std::string& name) const { return sources_.count(name) > 0; }

const EmbeddingSource& SourceSet::get(const std::string& name) const {
  auto it = sources_.find(name);
  if (it == sources_.end()) throw ConfigError("embedding source '" + name + "' is not available");
  return *it->second;
}

const ad::Vector& SourceSet::lookup(const std::string& name, const std::string& word) {
  auto& memo = cache_[name];
  auto it = memo.find(word);
  if (it != memo.end()) return it->second;
  return memo.emplace(word, get(name).lookup(word)).first->second;
}

// --- character encoder ------------------------------------------------------

Vocabulary build_char_vocabulary(const std::vector<LabeledSentence>& sentences) {
  Vocabulary v;
  for (const auto& ls : sentences) {
    for (const auto& t : ls.sentence.tokens) {
      for (char32_t c : text::decode(t.surface)) v.add(text::encode(std::u32string(1, c)));
    }
  }
  return v;
}

CharEncoder::CharEncoder(Vocabulary vocab, int char_dim, int hidden, Rng& rng)
    : chars(std::move(vocab)),
      embedding("char.embedding", init_embedding(char_dim, static_cast<Eigen::Index>(chars.size()), rng)),
      lstm("char.lstm", char_dim, hidden, rng) {}

ad::Var CharEncoder::encode(ad::Tape& tape, const std::vector<std::string>& words) {
  const auto count = static_cast<Eigen::Index>(words.size());
  std::vector<std::vector<int>> ids;
  ids.reserve(words.size());
  Eigen::Index steps = 0;
  for (const auto& w : words) {
    std::vector<int> seq;
    for (char32_t c : text::decode(w)) seq.push_back(chars.id(text::encode(std::u32string(1, c))));
    if (seq.empty()) throw DataError("character encoder given an empty word");
    steps = std::max<Eigen::Index>(steps, static_cast<Eigen::Index>(seq.size()));
    ids.push_back(std::move(seq));
  }
  std::vector<int> flat(static_cast<std::size_t>(steps * count), Vocabulary::kUnk);
  std::vector<int> lengths(words.size());
  for (Eigen::Index w = 0; w < count; ++w) {
    const auto& seq = ids[static_cast<std::size_t>(w)];
    lengths[static_cast<std::size_t>(w)] = static_cast<int>(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) {
      flat[static_cast<std::size_t>(static_cast<Eigen::Index>(t) * count + w)] = seq[t];
    }
  }
  ad::Var inputs = ad::gather_cols(tape.parameter(embedding), std::move(flat));
  BiLstmOutput out = lstm.run(tape, inputs, lengths, steps);
  std::vector<int> last(words.size()), first(words.size());
  for (Eigen::Index w = 0; w < count; ++w) {
    last[static_cast<std::size_t>(w)] =
        static_cast<int>((lengths[static_cast<std::size_t>(w)] - 1) * count + w);
    first[static_cast<std::size_t>(w)] = static_cast<int>(w);
  }
  return ad::concat_rows({ad::gather_cols(out.forward, std::move(last)),
                          ad::gather_cols(out.backward, std::move(first))});
}

ad::Vector CharEncoder::encode(const std::string& word) {
  ad::Tape tape;
  return encode(tape, {word}).value().col(0);
}

std::vector<ad::Parameter*> CharEncoder::parameters() {
  std::vector<ad::Parameter*> p{&embedding};
  for (auto* q : lstm.parameters()) p.push_back(q);
  return p;
}

// --- representation ---------------------------------------------------------

int representation_dim(const RepresentationSpec& spec, const std::map<std::string, int>& source_dims,
                       int feature_dim) {
  int total = 0, widest = 0;
  for (const auto& name : spec.sources) {
    auto it = source_dims.find(name);
    if (it == source_dims.end()) throw ConfigError("no dimension known for source '" + name + "'");
    total += it->second;
    widest = std::max(widest, it->second);
  }
  if (spec.combine == Combine::kAttention) return widest;
  return total + (spec.include_features_in_input ? feature_dim : 0);
}

ad::Vector assemble_concat(const RepresentationSpec& spec,
                           const std::map<std::string, ad::Vector>& source_vectors,
                           const ad::Vector& features) {
  if (spec.combine != Combine::kConcat) throw ConfigError("assemble_concat on an attention spec");
  Eigen::Index dim = spec.include_features_in_input ? features.size() : 0;
  for (const auto& name : spec.sources) {
    auto it = source_vectors.find(name);
    if (it == source_vectors.end()) throw ConfigError("missing embedding source '" + name + "'");
    dim += it->second.size();
  }
  ad::Vector out(dim);
  Eigen::Index offset = 0;
  for (const auto& name : spec.sources) {
    const ad::Vector& v = source_vectors.at(name);
    out.segment(offset, v.size()) = v;
    offset += v.size();
  }
  if (spec.include_features_in_input) out.segment(offset, features.size()) = features;
  return out;
}

}  // namespace nlnde
