#include "nlnde/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace nlnde {

ad::Matrix init_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(cols));
  ad::Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = uniform(rng, -bound, bound);
  }
  return m;
}

ad::Matrix init_embedding(Eigen::Index dim, Eigen::Index count, Rng& rng) {
  return init_uniform(count, dim, rng).transpose();
}

Linear::Linear(const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng)
    : weight(name + ".weight", init_uniform(out, in, rng)),
      bias(name + ".bias", ad::Matrix::Zero(out, 1)) {}

ad::Var Linear::operator()(ad::Tape& tape, ad::Var x) {
  return ad::add_bias(ad::matmul(tape.parameter(weight), x), tape.parameter(bias));
}

Lstm::Lstm(const std::string& name, Eigen::Index input, Eigen::Index hidden_size, Rng& rng)
    : w_input(name + ".w_input", init_uniform(4 * hidden_size, input, rng)),
      w_hidden(name + ".w_hidden", init_uniform(4 * hidden_size, hidden_size, rng)),
      bias(name + ".bias", ad::Matrix::Zero(4 * hidden_size, 1)),
      hidden(hidden_size) {}

ad::Var Lstm::run(ad::Tape& tape, ad::Var inputs, Eigen::Index steps, Eigen::Index batch) {
  if (inputs.cols() != steps * batch) throw std::invalid_argument("lstm: input column count");
  const Eigen::Index H = hidden;
  ad::Var projected = ad::add_bias(ad::matmul(tape.parameter(w_input), inputs), tape.parameter(bias));
  ad::Var wh = tape.parameter(w_hidden);
  ad::Var h = tape.constant(ad::Matrix::Zero(H, batch));
  ad::Var c = tape.constant(ad::Matrix::Zero(H, batch));
  std::vector<ad::Var> outputs;
  outputs.reserve(static_cast<std::size_t>(steps));
  for (Eigen::Index t = 0; t < steps; ++t) {
    ad::Var gates = ad::add(ad::slice_cols(projected, t * batch, batch), ad::matmul(wh, h));
    ad::Var i = ad::sigmoid(ad::slice_rows(gates, 0, H));
    ad::Var f = ad::sigmoid(ad::slice_rows(gates, H, H));
    ad::Var g = ad::tanh(ad::slice_rows(gates, 2 * H, H));
    ad::Var o = ad::sigmoid(ad::slice_rows(gates, 3 * H, H));
    c = ad::add(ad::cwise_mul(f, c), ad::cwise_mul(i, g));
    h = ad::cwise_mul(o, ad::tanh(c));
    outputs.push_back(h);
  }
  return ad::concat_cols(outputs);
}

BiLstm::BiLstm(const std::string& name, Eigen::Index input, Eigen::Index hidden, Rng& rng)
    : forward(name + ".forward", input, hidden, rng), backward(name + ".backward", input, hidden, rng) {}

std::vector<int> reversal_permutation(const std::vector<int>& lengths, Eigen::Index steps) {
  const auto batch = static_cast<Eigen::Index>(lengths.size());
  std::vector<int> perm(static_cast<std::size_t>(steps * batch));
  for (Eigen::Index t = 0; t < steps; ++t) {
    for (Eigen::Index b = 0; b < batch; ++b) {
      const int len = lengths[static_cast<std::size_t>(b)];
      const Eigen::Index src = t < len ? (len - 1 - t) * batch + b : t * batch + b;
      perm[static_cast<std::size_t>(t * batch + b)] = static_cast<int>(src);
    }
  }
  return perm;
}

BiLstmOutput BiLstm::run(ad::Tape& tape, ad::Var inputs, const std::vector<int>& lengths,
                         Eigen::Index steps) {
  const auto batch = static_cast<Eigen::Index>(lengths.size());
  BiLstmOutput out;
  out.forward = forward.run(tape, inputs, steps, batch);
  const std::vector<int> perm = reversal_permutation(lengths, steps);
  ad::Var reversed = ad::gather_cols(inputs, perm);
  out.backward = ad::gather_cols(backward.run(tape, reversed, steps, batch), perm);
  return out;
}

std::vector<ad::Parameter*> BiLstm::parameters() {
  auto p = forward.parameters();
  for (auto* q : backward.parameters()) p.push_back(q);
  return p;
}

ad::Vector dropout(const ad::Vector& v, double p, bool training, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout probability must be in [0, 1)");
  if (!training || p == 0.0) return v;
  ad::Vector out(v.size());
  const double keep_scale = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = uniform01(rng) < p ? 0.0 : v(i) * keep_scale;
  return out;
}

ad::Var dropout(ad::Tape& tape, ad::Var v, double p, bool training, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout probability must be in [0, 1)");
  if (!training || p == 0.0) return v;
  const double keep_scale = 1.0 / (1.0 - p);
  ad::Matrix mask(v.rows(), v.cols());
  for (Eigen::Index c = 0; c < mask.cols(); ++c) {
    for (Eigen::Index r = 0; r < mask.rows(); ++r) mask(r, c) = uniform01(rng) < p ? 0.0 : keep_scale;
  }
  return ad::cwise_mul(v, tape.constant(std::move(mask)));
}

}  // namespace nlnde
