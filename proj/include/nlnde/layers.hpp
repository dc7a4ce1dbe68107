#pragma once

#include <string>
#include <vector>

#include "nlnde/autodiff.hpp"
#include "nlnde/random.hpp"

namespace nlnde {

// uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) with fan_in = cols.
ad::Matrix init_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng);
// Embedding table (dim x count), uniform(-sqrt(1/dim), +sqrt(1/dim)).
ad::Matrix init_embedding(Eigen::Index dim, Eigen::Index count, Rng& rng);

struct Linear {
  ad::Parameter weight;  // out x in
  ad::Parameter bias;    // out x 1

  Linear() = default;
  Linear(const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng);

  ad::Var operator()(ad::Tape& tape, ad::Var x);
  std::vector<ad::Parameter*> parameters() { return {&weight, &bias}; }
};

// LSTM with gate rows ordered input, forget, cell, output.
struct Lstm {
  ad::Parameter w_input;   // 4H x D
  ad::Parameter w_hidden;  // 4H x H
  ad::Parameter bias;      // 4H x 1
  Eigen::Index hidden = 0;

  Lstm() = default;
  Lstm(const std::string& name, Eigen::Index input, Eigen::Index hidden, Rng& rng);

  // inputs: D x (steps * batch), column t * batch + b. Returns H x (steps * batch).
  // Sequences are left-aligned, so padding after a sequence's end never
  // influences its valid positions.
  ad::Var run(ad::Tape& tape, ad::Var inputs, Eigen::Index steps, Eigen::Index batch);
  std::vector<ad::Parameter*> parameters() { return {&w_input, &w_hidden, &bias}; }
};

struct BiLstmOutput {
  ad::Var forward;   // H x (steps * batch), original positions
  ad::Var backward;  // H x (steps * batch), original positions
};

struct BiLstm {
  Lstm forward;
  Lstm backward;

  BiLstm() = default;
  BiLstm(const std::string& name, Eigen::Index input, Eigen::Index hidden, Rng& rng);

  // lengths[b] <= steps; the backward direction reads each sequence
  // right-to-left inside its own length.
  BiLstmOutput run(ad::Tape& tape, ad::Var inputs, const std::vector<int>& lengths,
                   Eigen::Index steps);
  std::vector<ad::Parameter*> parameters();
};

// Column permutation reversing each sequence inside its length; padding
// columns map to themselves. The permutation is its own inverse.
std::vector<int> reversal_permutation(const std::vector<int>& lengths, Eigen::Index steps);

// Inverted dropout: training zeroes each entry with probability p and scales
// survivors by 1/(1-p); inference is the identity.
ad::Vector dropout(const ad::Vector& v, double p, bool training, Rng& rng);
ad::Var dropout(ad::Tape& tape, ad::Var v, double p, bool training, Rng& rng);

}  // namespace nlnde
