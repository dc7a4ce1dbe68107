#include "nlnde/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include <zlib.h>

#include "nlnde/errors.hpp"

namespace nlnde {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "NLNDEMDL";

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(bytes, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    char bytes[sizeof(T)];
    std::memcpy(bytes, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw DataError("model file truncated");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(bytes.data()),
            static_cast<uInt>(bytes.size())));
}

}  // namespace

json tagger_metadata(const Tagger& tagger) {
  const TaggerConfig& c = tagger.config();
  json freq = json::array();
  std::vector<std::pair<std::string, std::uint64_t>> rows(tagger.frequencies().counts().begin(),
                                                          tagger.frequencies().counts().end());
  std::sort(rows.begin(), rows.end());
  for (const auto& [w, n] : rows) freq.push_back({w, n});
  const auto& chars = tagger.char_vocabulary().items();
  const auto& pos = tagger.pos_vocabulary().items();
  return {
      {"representation",
       {{"sources", c.representation.sources},
        {"combine", c.representation.combine == Combine::kAttention ? "attention" : "concat"},
        {"include_features_in_input", c.representation.include_features_in_input}}},
      {"dims",
       {{"char_dim", c.dims.char_dim},
        {"char_hidden", c.dims.char_hidden},
        {"hidden", c.dims.hidden},
        {"attention_hidden", c.dims.attention_hidden},
        {"pos_dim", c.dims.pos_dim}}},
      {"source_dims", c.source_dims},
      {"num_labels", c.num_labels},
      {"use_channel", c.use_channel},
      {"char_vocab", std::vector<std::string>(chars.begin() + 1, chars.end())},
      {"pos_vocab", std::vector<std::string>(pos.begin() + 1, pos.end())},
      {"frequencies", freq},
  };
}

std::unique_ptr<Tagger> tagger_from_metadata(const json& meta) {
  try {
    TaggerConfig c;
    const auto& rep = meta.at("representation");
    c.representation.sources = rep.at("sources").get<std::vector<std::string>>();
    c.representation.combine =
        rep.at("combine").get<std::string>() == "attention" ? Combine::kAttention : Combine::kConcat;
    c.representation.include_features_in_input = rep.at("include_features_in_input").get<bool>();
    const auto& d = meta.at("dims");
    c.dims.char_dim = d.at("char_dim");
    c.dims.char_hidden = d.at("char_hidden");
    c.dims.hidden = d.at("hidden");
    c.dims.attention_hidden = d.at("attention_hidden");
    c.dims.pos_dim = d.at("pos_dim");
    c.source_dims = meta.at("source_dims").get<std::map<std::string, int>>();
    c.num_labels = meta.at("num_labels");
    c.use_channel = meta.at("use_channel");
    Vocabulary chars, pos;
    for (const auto& s : meta.at("char_vocab")) chars.add(s.get<std::string>());
    for (const auto& s : meta.at("pos_vocab")) pos.add(s.get<std::string>());
    FrequencyTable freq;
    for (const auto& row : meta.at("frequencies")) {
      freq.add(row.at(0).get<std::string>(), row.at(1).get<std::uint64_t>());
    }
    return std::make_unique<Tagger>(std::move(c), std::move(chars), std::move(pos), std::move(freq), 0);
  } catch (const json::exception& e) {
    throw DataError(std::string("model metadata is incomplete: ") + e.what());
  }
}

std::string serialize_model(Tagger& tagger, const json& run_metadata) {
  std::string out;
  out.append(kMagic);
  put<std::uint32_t>(out, kModelFormatVersion);
  const std::string meta = json{{"tagger", tagger_metadata(tagger)}, {"run", run_metadata}}.dump();
  put<std::uint64_t>(out, meta.size());
  out.append(meta);
  const auto params = tagger.parameters();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const ad::Parameter* p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out.append(p->name);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p->value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p->value.cols()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) put<double>(out, p->value.data()[i]);
  }
  put<std::uint32_t>(out, crc_of(out));
  return out;
}

LoadedModel deserialize_model(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) throw DataError("not a model file (bad magic)");
  if (bytes.size() < kMagic.size() + 8) throw DataError("model file truncated");
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  Reader tail(bytes.substr(bytes.size() - 4));
  Reader r(body);
  r.take(kMagic.size());
  const auto version = r.get<std::uint32_t>();
  if (version != kModelFormatVersion) {
    throw DataError("model format version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kModelFormatVersion) + ")");
  }
  if (tail.get<std::uint32_t>() != crc_of(body)) throw DataError("model file checksum mismatch");

  LoadedModel model;
  const auto meta_len = r.get<std::uint64_t>();
  try {
    model.metadata = json::parse(r.take(meta_len));
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model metadata is not valid JSON: ") + e.what());
  }
  model.tagger = tagger_from_metadata(model.metadata.at("tagger"));
  const auto params = model.tagger->parameters();
  const auto count = r.get<std::uint32_t>();
  if (count != params.size()) {
    throw DataError("model file has " + std::to_string(count) + " parameter blobs, configuration expects " +
                    std::to_string(params.size()));
  }
  for (ad::Parameter* p : params) {
    const auto name_len = r.get<std::uint32_t>();
    const std::string name(r.take(name_len));
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    if (name != p->name || rows != static_cast<std::uint64_t>(p->value.rows()) ||
        cols != static_cast<std::uint64_t>(p->value.cols())) {
      throw DataError("parameter blob '" + name + "' does not match expected '" + p->name + "'");
    }
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = r.get<double>();
    p->zero_grad();
  }
  if (r.remaining() != 0) throw DataError("trailing bytes in model file");
  return model;
}

void save_model(const std::filesystem::path& path, Tagger& tagger, const json& run_metadata) {
  write_file(path, serialize_model(tagger, run_metadata));
}

LoadedModel load_model(const std::filesystem::path& path) {
  try {
    return deserialize_model(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace nlnde
