#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Tape-based reverse-mode differentiation over dense double matrices.
//
// Every operation appends a node holding its value and a closure that pushes
// the node's gradient to its inputs. Parameters are leaves whose gradient is
// accumulated straight into Parameter::grad, so several tapes (or several
// backward passes) sum into the same buffers until zero_grad().
namespace nlnde::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Parameter& p);

  // Seeds d(root)/d(root) = 1 and propagates to every reachable input.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

  // --- for operation implementations ---
  Var push(Matrix value, bool needs_grad, Backward backward);
  const Matrix& value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.external_value ? *n.external_value : n.value;
  }
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  const Matrix& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

  template <typename Expr>
  void accumulate(int id, const Expr& expr) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad) return;
    if (n.external_grad) {
      n.external_grad->noalias() += expr;
    } else if (n.grad.size() == 0) {
      n.grad = expr;
    } else {
      n.grad.noalias() += expr;
    }
  }

 private:
  struct Node {
    Matrix value;
    const Matrix* external_value = nullptr;
    Matrix grad;
    Matrix* external_grad = nullptr;
    bool needs_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

// --- operations ---------------------------------------------------------------

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var cwise_mul(Var a, Var b);
Var scale(Var a, double factor);
// a (R x C) plus column vector bias (R x 1) broadcast over columns.
Var add_bias(Var a, Var bias);
// a (R x C) times row vector r (1 x C) broadcast over rows.
Var mul_row_broadcast(Var a, Var r);
Var tanh(Var a);
Var sigmoid(Var a);
Var transpose(Var a);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
// Columns of a at the given indices (repeats allowed); gradient scatter-adds.
Var gather_cols(Var a, std::vector<int> indices);
Var softmax_cols(Var a);
Var softmax_rows(Var a);
Var sum(Var a);
Var add_scalars(const std::vector<Var>& scalars);
// -sum_n log probs(labels[n], n) over the columns of a probability matrix.
Var nll_of_probs(Var probs, std::vector<int> labels);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }

}  // namespace nlnde::ad
