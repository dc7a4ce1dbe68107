#pragma once

#include <vector>

#include "nlnde/autodiff.hpp"
#include "nlnde/corpus.hpp"

// Linear-chain CRF over L labels. Emissions are L x T (one column per token).
// Transitions are (L+2) x (L+2) with START = L and STOP = L+1; entry (i, j)
// scores moving from i to j. Transitions into START and out of STOP are -inf.
namespace nlnde::crf {

using ad::Matrix;

inline int start_index(int num_labels) { return num_labels; }
inline int stop_index(int num_labels) { return num_labels + 1; }

// Applies the START/STOP mask in place.
void mask_transitions(Matrix& transitions);

// Score of one label path including START and STOP transitions.
double sequence_score(const Matrix& emissions, const Matrix& transitions, const LabelSeq& labels);

// log of the sum of exp(score) over all label paths (forward algorithm).
double log_partition(const Matrix& emissions, const Matrix& transitions);

// Posterior marginals: unary (L x T) and pairwise counts expected over the
// full transition matrix, as d logZ / d emissions and d logZ / d transitions.
struct Marginals {
  Matrix unary;
  Matrix transitions;
  double log_z = 0.0;
};
Marginals marginals(const Matrix& emissions, const Matrix& transitions);

// Highest-scoring path. Ties resolve to the lowest label id.
LabelSeq viterbi(const Matrix& emissions, const Matrix& transitions);

// Negative log-likelihood log Z - score(gold), differentiable in both
// emissions and transitions.
ad::Var nll(ad::Var emissions, ad::Var transitions, const LabelSeq& gold);

}  // namespace nlnde::crf
