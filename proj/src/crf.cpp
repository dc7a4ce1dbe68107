#include "nlnde/crf.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "nlnde/errors.hpp"

namespace nlnde::crf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsumexp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (m == kNegInf) return kNegInf;
  return m + std::log((v.array() - m).exp().sum());
}

void check_shapes(const Matrix& emissions, const Matrix& transitions) {
  const auto labels = emissions.rows();
  if (transitions.rows() != labels + 2 || transitions.cols() != labels + 2) {
    throw std::invalid_argument("crf: transitions must be (L+2)x(L+2)");
  }
  if (emissions.cols() == 0) throw std::invalid_argument("crf: empty sequence");
}

void check_labels(const LabelSeq& labels, Eigen::Index num_labels, Eigen::Index steps) {
  if (static_cast<Eigen::Index>(labels.size()) != steps) {
    throw DataError("crf: label sequence length does not match emissions");
  }
  for (int y : labels) {
    if (y < 0 || y >= num_labels) throw DataError("crf: label id " + std::to_string(y) + " out of range");
  }
}

// alpha(:, t) = log-sum of scores of all prefixes ending in each label at t.
Matrix forward_table(const Matrix& em, const Matrix& tr) {
  const Eigen::Index L = em.rows(), T = em.cols();
  const int start = start_index(static_cast<int>(L));
  Matrix alpha(L, T);
  alpha.col(0) = tr.row(start).head(L).transpose() + em.col(0);
  Eigen::VectorXd tmp(L);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index j = 0; j < L; ++j) {
      tmp = alpha.col(t - 1) + tr.col(j).head(L);
      alpha(j, t) = logsumexp(tmp) + em(j, t);
    }
  }
  return alpha;
}

// beta(:, t) = log-sum of scores of all suffixes after t, given the label at t.
Matrix backward_table(const Matrix& em, const Matrix& tr) {
  const Eigen::Index L = em.rows(), T = em.cols();
  const int stop = stop_index(static_cast<int>(L));
  Matrix beta(L, T);
  beta.col(T - 1) = tr.col(stop).head(L);
  Eigen::VectorXd tmp(L);
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    for (Eigen::Index i = 0; i < L; ++i) {
      tmp = tr.row(i).head(L).transpose() + em.col(t + 1) + beta.col(t + 1);
      beta(i, t) = logsumexp(tmp);
    }
  }
  return beta;
}

}  // namespace

void mask_transitions(Matrix& transitions) {
  const auto n = transitions.rows();
  const auto L = static_cast<int>(n - 2);
  transitions.col(start_index(L)).setConstant(kNegInf);
  transitions.row(stop_index(L)).setConstant(kNegInf);
}

double sequence_score(const Matrix& em, const Matrix& tr, const LabelSeq& labels) {
  check_shapes(em, tr);
  check_labels(labels, em.rows(), em.cols());
  const int L = static_cast<int>(em.rows());
  double s = tr(start_index(L), labels[0]);
  for (std::size_t t = 0; t < labels.size(); ++t) {
    s += em(labels[t], static_cast<Eigen::Index>(t));
    if (t > 0) s += tr(labels[t - 1], labels[t]);
  }
  return s + tr(labels.back(), stop_index(L));
}

double log_partition(const Matrix& em, const Matrix& tr) {
  check_shapes(em, tr);
  const Matrix alpha = forward_table(em, tr);
  const int L = static_cast<int>(em.rows());
  Eigen::VectorXd last = alpha.col(em.cols() - 1) + tr.col(stop_index(L)).head(L);
  return logsumexp(last);
}

Marginals marginals(const Matrix& em, const Matrix& tr) {
  check_shapes(em, tr);
  const Eigen::Index L = em.rows(), T = em.cols();
  const int start = start_index(static_cast<int>(L));
  const int stop = stop_index(static_cast<int>(L));
  const Matrix alpha = forward_table(em, tr);
  const Matrix beta = backward_table(em, tr);
  Marginals m;
  {
    Eigen::VectorXd last = alpha.col(T - 1) + tr.col(stop).head(L);
    m.log_z = logsumexp(last);
  }
  m.unary = ((alpha + beta).array() - m.log_z).exp().matrix();
  m.transitions = Matrix::Zero(L + 2, L + 2);
  m.transitions.row(start).head(L) = m.unary.col(0).transpose();
  m.transitions.col(stop).head(L) = m.unary.col(T - 1);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index i = 0; i < L; ++i) {
      for (Eigen::Index j = 0; j < L; ++j) {
        m.transitions(i, j) +=
            std::exp(alpha(i, t - 1) + tr(i, j) + em(j, t) + beta(j, t) - m.log_z);
      }
    }
  }
  return m;
}

LabelSeq viterbi(const Matrix& em, const Matrix& tr) {
  check_shapes(em, tr);
  const Eigen::Index L = em.rows(), T = em.cols();
  const int start = start_index(static_cast<int>(L));
  const int stop = stop_index(static_cast<int>(L));
  Matrix score(L, T);
  Eigen::MatrixXi back(L, T);
  score.col(0) = tr.row(start).head(L).transpose() + em.col(0);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index j = 0; j < L; ++j) {
      double best = kNegInf;
      int arg = 0;
      for (Eigen::Index i = 0; i < L; ++i) {
        const double s = score(i, t - 1) + tr(i, j);
        if (s > best) {
          best = s;
          arg = static_cast<int>(i);
        }
      }
      score(j, t) = best + em(j, t);
      back(j, t) = arg;
    }
  }
  double best = kNegInf;
  int last = 0;
  for (Eigen::Index j = 0; j < L; ++j) {
    const double s = score(j, T - 1) + tr(j, stop);
    if (s > best) {
      best = s;
      last = static_cast<int>(j);
    }
  }
  LabelSeq path(static_cast<std::size_t>(T));
  path.back() = last;
  for (Eigen::Index t = T - 1; t > 0; --t) {
    path[static_cast<std::size_t>(t - 1)] = back(path[static_cast<std::size_t>(t)], t);
  }
  return path;
}

ad::Var nll(ad::Var emissions, ad::Var transitions, const LabelSeq& gold) {
  ad::Tape& tape = *emissions.tape();
  const Matrix& em = emissions.value();
  const Matrix& tr = transitions.value();
  check_shapes(em, tr);
  check_labels(gold, em.rows(), em.cols());
  Marginals m = marginals(em, tr);
  const double loss = m.log_z - sequence_score(em, tr, gold);

  // d loss = marginals - gold indicator counts.
  const int L = static_cast<int>(em.rows());
  Matrix d_em = std::move(m.unary);
  Matrix d_tr = std::move(m.transitions);
  d_tr(start_index(L), gold.front()) -= 1.0;
  d_tr(gold.back(), stop_index(L)) -= 1.0;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    d_em(gold[t], static_cast<Eigen::Index>(t)) -= 1.0;
    if (t > 0) d_tr(gold[t - 1], gold[t]) -= 1.0;
  }

  const int ie = emissions.id(), it = transitions.id();
  const bool needs = tape.needs_grad(ie) || tape.needs_grad(it);
  return tape.push(Matrix::Constant(1, 1, loss), needs,
                   [ie, it, d_em = std::move(d_em), d_tr = std::move(d_tr)](ad::Tape& tp, int self) {
                     const double g = tp.grad(self)(0, 0);
                     if (tp.needs_grad(ie)) tp.accumulate(ie, d_em * g);
                     if (tp.needs_grad(it)) tp.accumulate(it, d_tr * g);
                   });
}

}  // namespace nlnde::crf
