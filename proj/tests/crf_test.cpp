#include <cmath>

#include "doctest.h"
#include "nlnde/crf.hpp"
#include "nlnde/errors.hpp"
#include "nlnde/random.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace nlnde;
using ad::Matrix;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -scale, scale);
  return m;
}

Matrix masked_transitions(int L, Rng& rng) {
  Matrix tr = random_matrix(L + 2, L + 2, rng);
  crf::mask_transitions(tr);
  return tr;
}

}  // namespace

TEST_CASE("single token loss") {
  // logsumexp(1, 2) - 2 = log(1 + e^-1)
  Matrix em(2, 1);
  em << 1.0, 2.0;
  Matrix tr = Matrix::Zero(4, 4);
  crf::mask_transitions(tr);
  ad::Tape t;
  ad::Var loss = crf::nll(t.constant(em), t.constant(tr), {1});
  CHECK(loss.scalar() == doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-12));
  CHECK(loss.scalar() == doctest::Approx(0.3133).epsilon(1e-4));
}

TEST_CASE("T=2, L=2 partition against the four explicit paths") {
  Rng rng = make_rng(1);
  const Matrix em = random_matrix(2, 2, rng);
  const Matrix tr = masked_transitions(2, rng);
  double acc = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      acc += std::exp(tr(2, a) + em(a, 0) + tr(a, b) + em(b, 1) + tr(b, 3));
    }
  }
  CHECK(std::abs(crf::log_partition(em, tr) - std::log(acc)) < 1e-9);
}

TEST_CASE("path probabilities sum to one") {
  Rng rng = make_rng(2);
  for (int T = 1; T <= 4; ++T) {
    for (int L = 1; L <= 4; ++L) {
      const Matrix em = random_matrix(L, T, rng, 2.0);
      const Matrix tr = masked_transitions(L, rng);
      const double log_z = crf::log_partition(em, tr);
      double total = 0.0;
      oracle::for_each_path(T, L, [&](const LabelSeq& y) { total += std::exp(crf::sequence_score(em, tr, y) - log_z); });
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("forward algorithm and Viterbi match brute force") {
  Rng rng = make_rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int T = 1 + static_cast<int>(uniform01(rng) * 5);
    const int L = 1 + static_cast<int>(uniform01(rng) * 5);
    const Matrix em = random_matrix(L, T, rng, 3.0);
    const Matrix tr = masked_transitions(L, rng);
    CHECK(std::abs(crf::log_partition(em, tr) - oracle::brute_log_z(em, tr)) < 1e-6);
    const LabelSeq best = crf::viterbi(em, tr);
    CHECK(best == oracle::brute_argmax(em, tr));
    CHECK(std::abs(crf::sequence_score(em, tr, best) - oracle::path_score(em, tr, oracle::brute_argmax(em, tr))) < 1e-9);
  }
}

TEST_CASE("Viterbi special cases") {
  Rng rng = make_rng(4);
  const Matrix em = random_matrix(4, 5, rng);
  Matrix zero = Matrix::Zero(6, 6);
  crf::mask_transitions(zero);
  LabelSeq argmax;
  for (Eigen::Index t = 0; t < 5; ++t) {
    Eigen::Index i;
    em.col(t).maxCoeff(&i);
    argmax.push_back(static_cast<int>(i));
  }
  CHECK(crf::viterbi(em, zero) == argmax);
  CHECK(crf::viterbi(Matrix::Zero(4, 5), zero) == LabelSeq(5, 0));
}

TEST_CASE("marginals are a distribution per position") {
  Rng rng = make_rng(5);
  const Matrix em = random_matrix(4, 6, rng);
  const Matrix tr = masked_transitions(4, rng);
  const auto m = crf::marginals(em, tr);
  for (Eigen::Index t = 0; t < 6; ++t) CHECK(std::abs(m.unary.col(t).sum() - 1.0) < 1e-12);
  CHECK(std::abs(m.transitions.topLeftCorner(4, 4).sum() - 5.0) < 1e-9);
}

TEST_CASE("nll gradient against finite differences") {
  Rng rng = make_rng(6);
  ad::Parameter em("emissions", random_matrix(4, 3, rng));
  ad::Parameter tr("transitions", masked_transitions(4, rng));
  auto loss = [&](ad::Tape& t) { return crf::nll(t.parameter(em), t.parameter(tr), {1, 2, 0}); };
  for (const auto& r : gradcheck::check(loss, {&em, &tr})) {
    INFO(r.name);
    CHECK(r.relative_error < 1e-6);
  }
  ad::Tape t;
  CHECK(crf::nll(t.parameter(em), t.parameter(tr), {1, 2, 0}).scalar() >= 0.0);
  CHECK_THROWS_AS(crf::nll(t.parameter(em), t.parameter(tr), {1, 4, 0}), DataError);
  CHECK_THROWS_AS(crf::nll(t.parameter(em), t.parameter(tr), {1, 2}), DataError);
}
