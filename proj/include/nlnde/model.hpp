#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlnde/autodiff.hpp"
#include "nlnde/corpus.hpp"
#include "nlnde/crf.hpp"
#include "nlnde/embeddings.hpp"
#include "nlnde/features.hpp"
#include "nlnde/layers.hpp"

namespace nlnde {

// --- feature-conditioned attention over embedding sources -------------------

struct AttentionParams {
  std::vector<ad::Parameter> mappings;  // one E x E_i map per source, no bias
  ad::Parameter w;                      // H x E
  ad::Parameter u;                      // H x F
  ad::Parameter v;                      // 1 x H

  AttentionParams() = default;
  AttentionParams(const std::vector<int>& source_dims, int feature_dim, int hidden, Rng& rng);

  int output_dim() const { return static_cast<int>(w.value.cols()); }
  std::vector<ad::Parameter*> parameters();
};

struct AttentionOutput {
  ad::Var representation;  // E x N
  ad::Var weights;         // n x N, columns sum to one
};

// Maps each source to E dims, scores it with V tanh(W x_i + U f), and returns
// the softmax-weighted sum. Inputs hold one column per token.
AttentionOutput attention_select(ad::Tape& tape, AttentionParams& params,
                                 const std::vector<ad::Var>& embeddings, ad::Var features);

struct AttentionResult {
  ad::Vector representation;
  ad::Vector weights;
};
AttentionResult attention_select(AttentionParams& params, const std::vector<ad::Vector>& embeddings,
                                 const ad::Vector& features);

// --- noisy channel ----------------------------------------------------------

// Row i of softmax(logits) is p(noisy = j | clean = i).
struct NoisyChannel {
  ad::Parameter logits;

  ad::Matrix probabilities() const;
};

inline constexpr double kConfusionSmoothing = 1e-6;

// logits = log(confusion + 1e-6). Throws ConfigError on a shape mismatch.
NoisyChannel init_channel(const ad::Matrix& confusion, int num_labels);

// p(noisy = j) = sum_i p(noisy = j | clean = i) p(clean = i).
ad::Vector noisy_channel_forward(const ad::Vector& clean, const NoisyChannel& channel);
// clean_probs: L x N, one distribution per column.
ad::Var noisy_channel_forward(ad::Tape& tape, ad::Var clean_probs, NoisyChannel& channel);

// softmax(W h + b) per column.
ad::Var softmax_head(ad::Tape& tape, Linear& head, ad::Var hidden);
ad::Vector softmax_head(Linear& head, const ad::Vector& hidden);

// --- tagger -------------------------------------------------------------------

struct ModelDims {
  int char_dim = 50;
  int char_hidden = 25;
  int hidden = 256;
  int attention_hidden = 128;
  int pos_dim = 20;

  int feature_dim() const { return pos_dim + kOneHotFeatureDim; }
  bool operator==(const ModelDims&) const = default;
};

struct TaggerConfig {
  RepresentationSpec representation;
  ModelDims dims;
  std::map<std::string, int> source_dims;  // frozen sources only
  int num_labels = 0;
  bool use_channel = false;
};

// Token positions of a padded batch, time-major: column t * size + b.
struct TaggerBatch {
  Eigen::Index steps = 0;
  Eigen::Index size = 0;
  std::vector<int> lengths;
  std::vector<std::string> words;  // distinct surfaces for the character encoder
  std::vector<int> word_columns;   // per position; words.size() marks padding
  std::vector<int> pos_ids;
  ad::Matrix one_hot;                          // length/frequency/shape block
  std::map<std::string, ad::Matrix> frozen;    // per frozen source, zero at padding

  // Columns of sentence b's valid tokens, in order.
  std::vector<int> columns(Eigen::Index b) const;
};

struct CrfLayer {
  Linear emission;            // hidden -> L scores
  ad::Parameter transitions;  // (L+2) x (L+2), START/STOP masked

  std::vector<ad::Parameter*> parameters() { return {&emission.weight, &emission.bias, &transitions}; }
};

// BiLSTM-CRF tagger over a configurable word representation, with a
// per-token softmax head feeding an optional noisy channel.
class Tagger {
 public:
  Tagger(TaggerConfig config, Vocabulary chars, Vocabulary pos_vocab, FrequencyTable frequencies,
         std::uint64_t seed);

  const TaggerConfig& config() const { return config_; }
  const Vocabulary& char_vocabulary() const { return char_encoder_.chars; }
  const Vocabulary& pos_vocabulary() const { return pos_vocab_; }
  const FrequencyTable& frequencies() const { return frequencies_; }
  bool uses_features() const;
  bool uses_attention() const { return config_.representation.combine == Combine::kAttention; }
  bool uses_chars() const;
  // Width of the representation fed to the BiLSTM.
  int input_dim() const;
  // Source dims including the character encoder.
  std::map<std::string, int> all_source_dims() const;

  // Canonical order, used for serialization.
  std::vector<ad::Parameter*> parameters();
  // Character encoder, POS embedding, attention, BiLSTM.
  std::vector<ad::Parameter*> encoder_parameters();
  std::vector<ad::Parameter*> crf_parameters();
  std::vector<ad::Parameter*> head_parameters();
  std::vector<ad::Parameter*> channel_parameters();

  CharEncoder& char_encoder() { return char_encoder_; }
  AttentionParams& attention() { return attention_; }
  BiLstm& encoder() { return bilstm_; }
  CrfLayer& crf() { return crf_; }
  Linear& head() { return head_; }
  NoisyChannel& channel() { return channel_; }
  ad::Parameter& pos_embedding() { return pos_embedding_; }

  WordFeatures features(const Token& token) const;
  // POS embedding followed by the one-hot length/frequency/shape block.
  ad::Vector feature_vector(const Token& token) const;

  TaggerBatch make_batch(const std::vector<const Sentence*>& sentences, SourceSet& sources) const;

  struct Encoded {
    ad::Var representation;  // input_dim x (steps * size), after dropout
    ad::Var hidden;          // 2H x (steps * size)
    std::optional<ad::Var> attention_weights;
  };
  // rng is required when training with dropout > 0.
  Encoded encode(ad::Tape& tape, const TaggerBatch& batch, double dropout_p, bool training,
                 Rng* rng);

  ad::Var emissions(ad::Tape& tape, ad::Var hidden);
  // Mean CRF negative log-likelihood per sentence.
  ad::Var crf_loss(ad::Tape& tape, const TaggerBatch& batch, ad::Var hidden,
                   const std::vector<LabelSeq>& gold);
  // Token cross-entropy of noisy labels under the channel output, summed over
  // tokens and divided by the sentence count.
  ad::Var channel_loss(ad::Tape& tape, const TaggerBatch& batch, ad::Var hidden,
                       const std::vector<LabelSeq>& noisy);
  // Same cross-entropy against the softmax head directly, without the channel.
  ad::Var head_loss(ad::Tape& tape, const TaggerBatch& batch, ad::Var hidden,
                    const std::vector<LabelSeq>& labels);

  std::vector<LabelSeq> decode(const TaggerBatch& batch);
  // Per sentence: sources x tokens attention weights. Requires attention.
  std::vector<ad::Matrix> attention_weights(const TaggerBatch& batch);

 private:
  TaggerConfig config_;
  Vocabulary pos_vocab_;
  FrequencyTable frequencies_;
  CharEncoder char_encoder_;
  ad::Parameter pos_embedding_;
  AttentionParams attention_;
  BiLstm bilstm_;
  CrfLayer crf_;
  Linear head_;
  NoisyChannel channel_;
};

}  // namespace nlnde
