#include "nlnde/autodiff.hpp"

#include <cassert>
#include <stdexcept>

namespace nlnde::ad {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("autodiff: ") + what);
}

Tape& tape_of(Var a) {
  require(a.tape() != nullptr, "operation on an unbound variable");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  require(a.tape() != nullptr && a.tape() == b.tape(), "operands from different tapes");
  return *a.tape();
}

}  // namespace

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(Parameter& p) {
  Node n;
  n.external_value = &p.value;
  n.external_grad = &p.grad;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::push(Matrix value, bool needs_grad, Backward backward) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::backward(Var root) {
  require(root.tape() == this, "backward root from another tape");
  require(root.rows() == 1 && root.cols() == 1, "backward root must be a scalar");
  Node& r = nodes_[static_cast<std::size_t>(root.id())];
  if (!r.needs_grad) return;
  if (r.external_grad) {
    (*r.external_grad)(0, 0) += 1.0;
    return;
  }
  r.grad = Matrix::Ones(1, 1);
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.backward && n.grad.size() != 0) n.backward(*this, id);
  }
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require(a.cols() == b.rows(), "matmul shape mismatch");
  Matrix v;
  v.noalias() = a.value() * b.value();
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(v), t.needs_grad(ia) || t.needs_grad(ib), [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.needs_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
    if (tp.needs_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add shape mismatch");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() + b.value(), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib](Tape& tp, int self) {
                  tp.accumulate(ia, tp.grad(self));
                  tp.accumulate(ib, tp.grad(self));
                });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub shape mismatch");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() - b.value(), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib](Tape& tp, int self) {
                  tp.accumulate(ia, tp.grad(self));
                  tp.accumulate(ib, -tp.grad(self));
                });
}

Var cwise_mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "cwise_mul shape mismatch");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value().cwiseProduct(b.value()), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib](Tape& tp, int self) {
                  const Matrix& g = tp.grad(self);
                  if (tp.needs_grad(ia)) tp.accumulate(ia, g.cwiseProduct(tp.value(ib)));
                  if (tp.needs_grad(ib)) tp.accumulate(ib, g.cwiseProduct(tp.value(ia)));
                });
}

Var scale(Var a, double factor) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push(a.value() * factor, t.needs_grad(ia), [ia, factor](Tape& tp, int self) {
    tp.accumulate(ia, tp.grad(self) * factor);
  });
}

Var add_bias(Var a, Var bias) {
  Tape& t = tape_of(a, bias);
  require(bias.cols() == 1 && bias.rows() == a.rows(), "add_bias shape mismatch");
  Matrix v = a.value();
  v.colwise() += bias.value().col(0);
  const int ia = a.id(), ib = bias.id();
  return t.push(std::move(v), t.needs_grad(ia) || t.needs_grad(ib), [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    tp.accumulate(ia, g);
    if (tp.needs_grad(ib)) tp.accumulate(ib, g.rowwise().sum());
  });
}

Var mul_row_broadcast(Var a, Var r) {
  Tape& t = tape_of(a, r);
  require(r.rows() == 1 && r.cols() == a.cols(), "mul_row_broadcast shape mismatch");
  Matrix v = a.value().array().rowwise() * r.value().row(0).array();
  const int ia = a.id(), ir = r.id();
  return t.push(std::move(v), t.needs_grad(ia) || t.needs_grad(ir), [ia, ir](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.needs_grad(ia)) {
      tp.accumulate(ia, (g.array().rowwise() * tp.value(ir).row(0).array()).matrix());
    }
    if (tp.needs_grad(ir)) tp.accumulate(ir, g.cwiseProduct(tp.value(ia)).colwise().sum());
  });
}

Var tanh(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push(a.value().array().tanh().matrix(), t.needs_grad(ia), [ia](Tape& tp, int self) {
    const Matrix& y = tp.value(self);
    tp.accumulate(ia, (tp.grad(self).array() * (1.0 - y.array().square())).matrix());
  });
}

Var sigmoid(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  Matrix v = (1.0 + (-a.value().array()).exp()).inverse().matrix();
  return t.push(std::move(v), t.needs_grad(ia), [ia](Tape& tp, int self) {
    const Matrix& y = tp.value(self);
    tp.accumulate(ia, (tp.grad(self).array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push(a.value().transpose(), t.needs_grad(ia), [ia](Tape& tp, int self) {
    tp.accumulate(ia, tp.grad(self).transpose());
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows of nothing");
  Tape& t = tape_of(parts.front());
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  bool needs = false;
  for (const Var& p : parts) {
    require(p.tape() == &t && p.cols() == cols, "concat_rows shape mismatch");
    rows += p.rows();
    needs |= t.needs_grad(p.id());
  }
  Matrix v(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    v.middleRows(offset, p.rows()) = p.value();
    layout.emplace_back(p.id(), offset);
    offset += p.rows();
  }
  return t.push(std::move(v), needs, [layout = std::move(layout)](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    for (const auto& [id, off] : layout) {
      if (tp.needs_grad(id)) tp.accumulate(id, g.middleRows(off, tp.value(id).rows()));
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols of nothing");
  Tape& t = tape_of(parts.front());
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  bool needs = false;
  for (const Var& p : parts) {
    require(p.tape() == &t && p.rows() == rows, "concat_cols shape mismatch");
    cols += p.cols();
    needs |= t.needs_grad(p.id());
  }
  Matrix v(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    v.middleCols(offset, p.cols()) = p.value();
    layout.emplace_back(p.id(), offset);
    offset += p.cols();
  }
  return t.push(std::move(v), needs, [layout = std::move(layout)](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    for (const auto& [id, off] : layout) {
      if (tp.needs_grad(id)) tp.accumulate(id, g.middleCols(off, tp.value(id).cols()));
    }
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  Tape& t = tape_of(a);
  require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows out of range");
  const int ia = a.id();
  return t.push(a.value().middleRows(start, count), t.needs_grad(ia),
                [ia, start, count](Tape& tp, int self) {
                  Matrix full = Matrix::Zero(tp.value(ia).rows(), tp.value(ia).cols());
                  full.middleRows(start, count) = tp.grad(self);
                  tp.accumulate(ia, full);
                });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  Tape& t = tape_of(a);
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols out of range");
  const int ia = a.id();
  return t.push(a.value().middleCols(start, count), t.needs_grad(ia),
                [ia, start, count](Tape& tp, int self) {
                  Matrix full = Matrix::Zero(tp.value(ia).rows(), tp.value(ia).cols());
                  full.middleCols(start, count) = tp.grad(self);
                  tp.accumulate(ia, full);
                });
}

Var gather_cols(Var a, std::vector<int> indices) {
  Tape& t = tape_of(a);
  const Matrix& src = a.value();
  Matrix v(src.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    require(indices[j] >= 0 && indices[j] < src.cols(), "gather_cols index out of range");
    v.col(static_cast<Eigen::Index>(j)) = src.col(indices[j]);
  }
  const int ia = a.id();
  return t.push(std::move(v), t.needs_grad(ia), [ia, idx = std::move(indices)](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    Matrix full = Matrix::Zero(tp.value(ia).rows(), tp.value(ia).cols());
    for (std::size_t j = 0; j < idx.size(); ++j) full.col(idx[j]) += g.col(static_cast<Eigen::Index>(j));
    tp.accumulate(ia, full);
  });
}

Var softmax_cols(Var a) {
  Tape& t = tape_of(a);
  Matrix v = a.value();
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    auto col = v.col(c);
    col.array() = (col.array() - col.maxCoeff()).exp();
    col /= col.sum();
  }
  const int ia = a.id();
  return t.push(std::move(v), t.needs_grad(ia), [ia](Tape& tp, int self) {
    const Matrix& y = tp.value(self);
    const Matrix& g = tp.grad(self);
    const Eigen::RowVectorXd dots = y.cwiseProduct(g).colwise().sum();
    Matrix d = g;
    d.rowwise() -= dots;
    tp.accumulate(ia, y.cwiseProduct(d));
  });
}

Var softmax_rows(Var a) {
  Tape& t = tape_of(a);
  Matrix v = a.value();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    auto row = v.row(r);
    row.array() = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
  const int ia = a.id();
  return t.push(std::move(v), t.needs_grad(ia), [ia](Tape& tp, int self) {
    const Matrix& y = tp.value(self);
    const Matrix& g = tp.grad(self);
    const Eigen::VectorXd dots = y.cwiseProduct(g).rowwise().sum();
    Matrix d = g;
    d.colwise() -= dots;
    tp.accumulate(ia, y.cwiseProduct(d));
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push(Matrix::Constant(1, 1, a.value().sum()), t.needs_grad(ia),
                [ia](Tape& tp, int self) {
                  const Matrix& src = tp.value(ia);
                  tp.accumulate(ia, Matrix::Constant(src.rows(), src.cols(), tp.grad(self)(0, 0)));
                });
}

Var add_scalars(const std::vector<Var>& scalars) {
  require(!scalars.empty(), "add_scalars of nothing");
  Tape& t = tape_of(scalars.front());
  double total = 0.0;
  bool needs = false;
  std::vector<int> ids;
  for (const Var& s : scalars) {
    require(s.tape() == &t && s.rows() == 1 && s.cols() == 1, "add_scalars expects 1x1 values");
    total += s.scalar();
    needs |= t.needs_grad(s.id());
    ids.push_back(s.id());
  }
  return t.push(Matrix::Constant(1, 1, total), needs, [ids = std::move(ids)](Tape& tp, int self) {
    for (int id : ids) tp.accumulate(id, tp.grad(self));
  });
}

Var nll_of_probs(Var probs, std::vector<int> labels) {
  Tape& t = tape_of(probs);
  const Matrix& p = probs.value();
  require(static_cast<Eigen::Index>(labels.size()) == p.cols(), "nll_of_probs label count mismatch");
  double total = 0.0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    require(labels[n] >= 0 && labels[n] < p.rows(), "nll_of_probs label out of range");
    total -= std::log(p(labels[n], static_cast<Eigen::Index>(n)));
  }
  const int ip = probs.id();
  return t.push(Matrix::Constant(1, 1, total), t.needs_grad(ip),
                [ip, labels = std::move(labels)](Tape& tp, int self) {
                  const Matrix& pv = tp.value(ip);
                  Matrix d = Matrix::Zero(pv.rows(), pv.cols());
                  const double g = tp.grad(self)(0, 0);
                  for (std::size_t n = 0; n < labels.size(); ++n) {
                    const auto c = static_cast<Eigen::Index>(n);
                    d(labels[n], c) = -g / pv(labels[n], c);
                  }
                  tp.accumulate(ip, d);
                });
}

}  // namespace nlnde::ad
