#include "nlnde/model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "nlnde/errors.hpp"

namespace nlnde {

// --- attention ----------------------------------------------------------------

AttentionParams::AttentionParams(const std::vector<int>& source_dims, int feature_dim, int hidden,
                                 Rng& rng) {
  if (source_dims.empty()) throw ConfigError("attention needs at least one source");
  const int width = *std::max_element(source_dims.begin(), source_dims.end());
  for (std::size_t i = 0; i < source_dims.size(); ++i) {
    mappings.emplace_back("attention.map" + std::to_string(i),
                          init_uniform(width, source_dims[i], rng));
  }
  w = ad::Parameter("attention.w", init_uniform(hidden, width, rng));
  u = ad::Parameter("attention.u", init_uniform(hidden, feature_dim, rng));
  v = ad::Parameter("attention.v", init_uniform(1, hidden, rng));
}

std::vector<ad::Parameter*> AttentionParams::parameters() {
  std::vector<ad::Parameter*> p;
  for (auto& m : mappings) p.push_back(&m);
  p.push_back(&w);
  p.push_back(&u);
  p.push_back(&v);
  return p;
}

AttentionOutput attention_select(ad::Tape& tape, AttentionParams& params,
                                 const std::vector<ad::Var>& embeddings, ad::Var features) {
  if (embeddings.size() != params.mappings.size()) {
    throw ConfigError("attention: expected " + std::to_string(params.mappings.size()) +
                      " sources, got " + std::to_string(embeddings.size()));
  }
  if (features.rows() != params.u.value.cols()) throw ConfigError("attention: feature dimension mismatch");
  ad::Var w = tape.parameter(params.w);
  ad::Var v = tape.parameter(params.v);
  ad::Var uf = ad::matmul(tape.parameter(params.u), features);
  std::vector<ad::Var> mapped, scores;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].rows() != params.mappings[i].value.cols() ||
        embeddings[i].cols() != features.cols()) {
      throw ConfigError("attention: source " + std::to_string(i) + " dimension mismatch");
    }
    ad::Var x = ad::matmul(tape.parameter(params.mappings[i]), embeddings[i]);
    mapped.push_back(x);
    scores.push_back(ad::matmul(v, ad::tanh(ad::add(ad::matmul(w, x), uf))));
  }
  ad::Var weights = ad::softmax_cols(ad::concat_rows(scores));
  ad::Var out = ad::mul_row_broadcast(mapped[0], ad::slice_rows(weights, 0, 1));
  for (std::size_t i = 1; i < mapped.size(); ++i) {
    out = ad::add(out, ad::mul_row_broadcast(mapped[i],
                                             ad::slice_rows(weights, static_cast<Eigen::Index>(i), 1)));
  }
  return {out, weights};
}

AttentionResult attention_select(AttentionParams& params, const std::vector<ad::Vector>& embeddings,
                                 const ad::Vector& features) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& e : embeddings) vars.push_back(tape.constant(e));
  AttentionOutput out = attention_select(tape, params, vars, tape.constant(features));
  return {out.representation.value().col(0), out.weights.value().col(0)};
}

// --- channel and head -----------------------------------------------------------

ad::Matrix NoisyChannel::probabilities() const {
  ad::Matrix p = logits.value;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    auto row = p.row(r);
    row.array() = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
  return p;
}

NoisyChannel init_channel(const ad::Matrix& confusion, int num_labels) {
  if (confusion.rows() != num_labels || confusion.cols() != num_labels) {
    throw ConfigError("confusion matrix is " + std::to_string(confusion.rows()) + "x" +
                      std::to_string(confusion.cols()) + ", expected " +
                      std::to_string(num_labels) + "x" + std::to_string(num_labels));
  }
  return {ad::Parameter("channel.logits", (confusion.array() + kConfusionSmoothing).log().matrix())};
}

ad::Vector noisy_channel_forward(const ad::Vector& clean, const NoisyChannel& channel) {
  return channel.probabilities().transpose() * clean;
}

ad::Var noisy_channel_forward(ad::Tape& tape, ad::Var clean_probs, NoisyChannel& channel) {
  ad::Var rows = ad::softmax_rows(tape.parameter(channel.logits));
  return ad::matmul(ad::transpose(rows), clean_probs);
}

ad::Var softmax_head(ad::Tape& tape, Linear& head, ad::Var hidden) {
  return ad::softmax_cols(head(tape, hidden));
}

ad::Vector softmax_head(Linear& head, const ad::Vector& hidden) {
  ad::Tape tape;
  return softmax_head(tape, head, tape.constant(hidden)).value().col(0);
}

// --- batch ----------------------------------------------------------------------

std::vector<int> TaggerBatch::columns(Eigen::Index b) const {
  std::vector<int> cols;
  const int len = lengths.at(static_cast<std::size_t>(b));
  cols.reserve(static_cast<std::size_t>(len));
  for (int t = 0; t < len; ++t) cols.push_back(static_cast<int>(t * size + b));
  return cols;
}

// --- tagger -----------------------------------------------------------------------

namespace {

void append(std::vector<ad::Parameter*>& dst, const std::vector<ad::Parameter*>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

Tagger::Tagger(TaggerConfig config, Vocabulary chars, Vocabulary pos_vocab,
               FrequencyTable frequencies, std::uint64_t seed)
    : config_(std::move(config)), pos_vocab_(std::move(pos_vocab)), frequencies_(std::move(frequencies)) {
  const auto& rep = config_.representation;
  if (rep.sources.empty()) throw ConfigError("representation has no sources");
  if (config_.num_labels <= 0) throw ConfigError("label count must be positive");
  for (const auto& name : rep.sources) {
    if (name != kCharSource && !config_.source_dims.count(name)) {
      throw ConfigError("no dimension configured for source '" + name + "'");
    }
  }
  Rng rng = make_rng(seed, {0x7a66});
  const ModelDims& d = config_.dims;
  char_encoder_ = CharEncoder(std::move(chars), d.char_dim, d.char_hidden, rng);
  if (uses_features()) {
    pos_embedding_ = ad::Parameter("pos.embedding",
                                   init_embedding(d.pos_dim, static_cast<Eigen::Index>(pos_vocab_.size()), rng));
  }
  if (uses_attention()) {
    std::vector<int> dims;
    const auto all = all_source_dims();
    for (const auto& name : rep.sources) dims.push_back(all.at(name));
    attention_ = AttentionParams(dims, d.feature_dim(), d.attention_hidden, rng);
  }
  bilstm_ = BiLstm("encoder", input_dim(), d.hidden, rng);
  const int L = config_.num_labels;
  crf_.emission = Linear("crf.emission", 2 * d.hidden, L, rng);
  crf_.transitions = ad::Parameter("crf.transitions", ad::Matrix::Zero(L + 2, L + 2));
  crf::mask_transitions(crf_.transitions.value);
  head_ = Linear("head", 2 * d.hidden, L, rng);
  channel_ = init_channel(ad::Matrix::Identity(L, L), L);
}

bool Tagger::uses_features() const {
  return config_.representation.include_features_in_input || uses_attention();
}

bool Tagger::uses_chars() const {
  const auto& s = config_.representation.sources;
  return std::find(s.begin(), s.end(), kCharSource) != s.end();
}

std::map<std::string, int> Tagger::all_source_dims() const {
  auto dims = config_.source_dims;
  dims[kCharSource] = 2 * config_.dims.char_hidden;
  return dims;
}

int Tagger::input_dim() const {
  return representation_dim(config_.representation, all_source_dims(), config_.dims.feature_dim());
}

std::vector<ad::Parameter*> Tagger::encoder_parameters() {
  std::vector<ad::Parameter*> p;
  if (uses_chars()) append(p, char_encoder_.parameters());
  if (uses_features()) p.push_back(&pos_embedding_);
  if (uses_attention()) append(p, attention_.parameters());
  append(p, bilstm_.parameters());
  return p;
}

std::vector<ad::Parameter*> Tagger::crf_parameters() { return crf_.parameters(); }

std::vector<ad::Parameter*> Tagger::head_parameters() {
  if (!config_.use_channel) return {};
  return head_.parameters();
}

std::vector<ad::Parameter*> Tagger::channel_parameters() {
  if (!config_.use_channel) return {};
  return {&channel_.logits};
}

std::vector<ad::Parameter*> Tagger::parameters() {
  auto p = encoder_parameters();
  append(p, crf_parameters());
  append(p, head_parameters());
  append(p, channel_parameters());
  return p;
}

WordFeatures Tagger::features(const Token& token) const {
  return featurize(token, frequencies_, pos_vocab_);
}

ad::Vector Tagger::feature_vector(const Token& token) const {
  const WordFeatures f = features(token);
  const int pos_dim = config_.dims.pos_dim;
  ad::Vector v = ad::Vector::Zero(config_.dims.feature_dim());
  if (uses_features()) v.head(pos_dim) = pos_embedding_.value.col(f.pos_id);
  v(pos_dim + f.length_bin) = 1.0;
  v(pos_dim + kNumLengthBins + f.freq_bin) = 1.0;
  v(pos_dim + kNumLengthBins + kNumFrequencyBins + f.shape_class) = 1.0;
  return v;
}

TaggerBatch Tagger::make_batch(const std::vector<const Sentence*>& sentences, SourceSet& sources) const {
  TaggerBatch b;
  b.size = static_cast<Eigen::Index>(sentences.size());
  for (const Sentence* s : sentences) {
    if (s->tokens.empty()) throw DataError("cannot tag an empty sentence");
    b.lengths.push_back(static_cast<int>(s->size()));
    b.steps = std::max<Eigen::Index>(b.steps, static_cast<Eigen::Index>(s->size()));
  }
  const Eigen::Index positions = b.steps * b.size;
  b.word_columns.assign(static_cast<std::size_t>(positions), -1);
  b.pos_ids.assign(static_cast<std::size_t>(positions), Vocabulary::kUnk);
  if (uses_features()) b.one_hot = ad::Matrix::Zero(kOneHotFeatureDim, positions);
  for (const auto& name : config_.representation.sources) {
    if (name == kCharSource) continue;
    if (!sources.contains(name)) throw ConfigError("embedding source '" + name + "' is not loaded");
    b.frozen[name] = ad::Matrix::Zero(config_.source_dims.at(name), positions);
  }
  std::unordered_map<std::string, int> word_ids;
  for (Eigen::Index s = 0; s < b.size; ++s) {
    const Sentence& sent = *sentences[static_cast<std::size_t>(s)];
    for (std::size_t t = 0; t < sent.size(); ++t) {
      const Token& tok = sent.tokens[t];
      const auto col = static_cast<Eigen::Index>(t) * b.size + s;
      auto [it, fresh] = word_ids.emplace(tok.surface, static_cast<int>(b.words.size()));
      if (fresh) b.words.push_back(tok.surface);
      b.word_columns[static_cast<std::size_t>(col)] = it->second;
      if (uses_features()) {
        const WordFeatures f = features(tok);
        b.pos_ids[static_cast<std::size_t>(col)] = f.pos_id;
        b.one_hot(f.length_bin, col) = 1.0;
        b.one_hot(kNumLengthBins + f.freq_bin, col) = 1.0;
        b.one_hot(kNumLengthBins + kNumFrequencyBins + f.shape_class, col) = 1.0;
      }
      for (auto& [name, m] : b.frozen) {
        const ad::Vector& v = sources.lookup(name, tok.surface);
        if (v.size() != m.rows()) throw ConfigError("source '" + name + "' dimension mismatch");
        m.col(col) = v;
      }
    }
  }
  const int pad = static_cast<int>(b.words.size());
  for (auto& c : b.word_columns) {
    if (c < 0) c = pad;
  }
  return b;
}

Tagger::Encoded Tagger::encode(ad::Tape& tape, const TaggerBatch& batch, double dropout_p,
                               bool training, Rng* rng) {
  const auto& rep = config_.representation;
  std::vector<ad::Var> parts;
  for (const auto& name : rep.sources) {
    if (name == kCharSource) {
      ad::Var chars = char_encoder_.encode(tape, batch.words);
      ad::Var padded = ad::concat_cols({chars, tape.constant(ad::Matrix::Zero(chars.rows(), 1))});
      parts.push_back(ad::gather_cols(padded, batch.word_columns));
    } else {
      parts.push_back(tape.constant(batch.frozen.at(name)));
    }
  }
  std::optional<ad::Var> features;
  if (uses_features()) {
    features = ad::concat_rows({ad::gather_cols(tape.parameter(pos_embedding_), batch.pos_ids),
                                tape.constant(batch.one_hot)});
  }
  Encoded out;
  if (uses_attention()) {
    AttentionOutput att = attention_select(tape, attention_, parts, *features);
    out.representation = att.representation;
    out.attention_weights = att.weights;
  } else {
    if (rep.include_features_in_input) parts.push_back(*features);
    out.representation = parts.size() == 1 ? parts.front() : ad::concat_rows(parts);
  }
  if (training && dropout_p > 0.0) {
    if (!rng) throw std::invalid_argument("dropout during training needs an rng");
    out.representation = dropout(tape, out.representation, dropout_p, true, *rng);
  }
  BiLstmOutput h = bilstm_.run(tape, out.representation, batch.lengths, batch.steps);
  out.hidden = ad::concat_rows({h.forward, h.backward});
  return out;
}

ad::Var Tagger::emissions(ad::Tape& tape, ad::Var hidden) { return crf_.emission(tape, hidden); }

ad::Var Tagger::crf_loss(ad::Tape& tape, const TaggerBatch& batch, ad::Var hidden,
                         const std::vector<LabelSeq>& gold) {
  if (static_cast<Eigen::Index>(gold.size()) != batch.size) throw DataError("gold label count mismatch");
  ad::Var em = emissions(tape, hidden);
  ad::Var transitions = tape.parameter(crf_.transitions);
  std::vector<ad::Var> losses;
  for (Eigen::Index b = 0; b < batch.size; ++b) {
    losses.push_back(crf::nll(ad::gather_cols(em, batch.columns(b)), transitions,
                              gold[static_cast<std::size_t>(b)]));
  }
  return ad::scale(ad::add_scalars(losses), 1.0 / static_cast<double>(batch.size));
}

namespace {

std::pair<std::vector<int>, std::vector<int>> flatten(const TaggerBatch& batch,
                                                      const std::vector<LabelSeq>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != batch.size) throw DataError("label count mismatch");
  std::vector<int> cols, flat;
  for (Eigen::Index b = 0; b < batch.size; ++b) {
    const auto& seq = labels[static_cast<std::size_t>(b)];
    if (static_cast<int>(seq.size()) != batch.lengths[static_cast<std::size_t>(b)]) {
      throw DataError("label sequence length mismatch");
    }
    for (std::size_t t = 0; t < seq.size(); ++t) {
      cols.push_back(static_cast<int>(static_cast<Eigen::Index>(t) * batch.size + b));
      flat.push_back(seq[t]);
    }
  }
  return {cols, flat};
}

}  // namespace

ad::Var Tagger::channel_loss(ad::Tape& tape, const TaggerBatch& batch, ad::Var hidden,
                             const std::vector<LabelSeq>& noisy) {
  auto [cols, flat] = flatten(batch, noisy);
  ad::Var clean = softmax_head(tape, head_, ad::gather_cols(hidden, std::move(cols)));
  ad::Var observed = noisy_channel_forward(tape, clean, channel_);
  return ad::scale(ad::nll_of_probs(observed, std::move(flat)), 1.0 / static_cast<double>(batch.size));
}

ad::Var Tagger::head_loss(ad::Tape& tape, const TaggerBatch& batch, ad::Var hidden,
                          const std::vector<LabelSeq>& labels) {
  auto [cols, flat] = flatten(batch, labels);
  ad::Var clean = softmax_head(tape, head_, ad::gather_cols(hidden, std::move(cols)));
  return ad::scale(ad::nll_of_probs(clean, std::move(flat)), 1.0 / static_cast<double>(batch.size));
}

std::vector<LabelSeq> Tagger::decode(const TaggerBatch& batch) {
  ad::Tape tape;
  Encoded enc = encode(tape, batch, 0.0, false, nullptr);
  const ad::Matrix em = emissions(tape, enc.hidden).value();
  std::vector<LabelSeq> out;
  for (Eigen::Index b = 0; b < batch.size; ++b) {
    const auto cols = batch.columns(b);
    ad::Matrix e(em.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t t = 0; t < cols.size(); ++t) e.col(static_cast<Eigen::Index>(t)) = em.col(cols[t]);
    out.push_back(crf::viterbi(e, crf_.transitions.value));
  }
  return out;
}

std::vector<ad::Matrix> Tagger::attention_weights(const TaggerBatch& batch) {
  if (!uses_attention()) throw ConfigError("model does not use attention");
  ad::Tape tape;
  Encoded enc = encode(tape, batch, 0.0, false, nullptr);
  const ad::Matrix& w = enc.attention_weights->value();
  std::vector<ad::Matrix> out;
  for (Eigen::Index b = 0; b < batch.size; ++b) {
    const auto cols = batch.columns(b);
    ad::Matrix m(w.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t t = 0; t < cols.size(); ++t) m.col(static_cast<Eigen::Index>(t)) = w.col(cols[t]);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace nlnde
