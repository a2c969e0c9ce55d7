#include "piano/autodiff.hpp"

#include <cmath>
#include <utility>

namespace piano {

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::leaf(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.tracked = true;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.tracked = false;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

int Tape::push(Matrix value, std::vector<int> parents,
               std::function<void(Tape&, int)> pull) {
  Node n;
  n.value = std::move(value);
  for (int p : parents) n.tracked = n.tracked || nodes_[p].tracked;
  n.parents = std::move(parents);
  n.pull = std::move(pull);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::backward(const Var& loss) {
  if (loss.tape != this) throw ValueError("backward: loss from another tape");
  const Matrix& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1)
    throw ShapeError("backward: loss must be scalar (1x1)");
  for (auto& n : nodes_) n.adjoint = Matrix::Zero(n.value.rows(), n.value.cols());
  nodes_[loss.id].adjoint(0, 0) = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.tracked && n.pull) n.pull(*this, i);
  }
}

const Matrix& Tape::grad(const Var& v) const {
  return nodes_[v.id].adjoint;
}

void Tape::clear() { nodes_.clear(); }

namespace {

void check_same_tape(const Var& a, const Var& b, const char* op) {
  if (a.tape != b.tape)
    throw ValueError(std::string(op) + ": operands on different tapes");
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch (" +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
}

}  // namespace

Var add(const Var& a, const Var& b) {
  check_same_tape(a, b, "add");
  check_same_shape(a, b, "add");
  Tape& t = *a.tape;
  int ia = a.id, ib = b.id;
  int id = t.push(a.value() + b.value(), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    if (t.tracked(ia)) t.adjoint(ia) += g;
    if (t.tracked(ib)) t.adjoint(ib) += g;
  });
  return {&t, id};
}

Var sub(const Var& a, const Var& b) {
  check_same_tape(a, b, "sub");
  check_same_shape(a, b, "sub");
  Tape& t = *a.tape;
  int ia = a.id, ib = b.id;
  int id = t.push(a.value() - b.value(), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    if (t.tracked(ia)) t.adjoint(ia) += g;
    if (t.tracked(ib)) t.adjoint(ib) -= g;
  });
  return {&t, id};
}

Var cmul(const Var& a, const Var& b) {
  check_same_tape(a, b, "cmul");
  check_same_shape(a, b, "cmul");
  Tape& t = *a.tape;
  int ia = a.id, ib = b.id;
  int id = t.push(a.value().cwiseProduct(b.value()), {ia, ib},
                  [ia, ib](Tape& t, int self) {
                    const Matrix& g = t.adjoint(self);
                    if (t.tracked(ia))
                      t.adjoint(ia) += g.cwiseProduct(t.value(ib));
                    if (t.tracked(ib))
                      t.adjoint(ib) += g.cwiseProduct(t.value(ia));
                  });
  return {&t, id};
}

Var scale(const Var& a, double s) {
  Tape& t = *a.tape;
  int ia = a.id;
  int id = t.push(s * a.value(), {ia}, [ia, s](Tape& t, int self) {
    if (t.tracked(ia)) t.adjoint(ia) += s * t.adjoint(self);
  });
  return {&t, id};
}

Var square(const Var& a) {
  Tape& t = *a.tape;
  int ia = a.id;
  int id = t.push(a.value().array().square().matrix(), {ia},
                  [ia](Tape& t, int self) {
                    if (t.tracked(ia))
                      t.adjoint(ia) +=
                          2.0 * t.adjoint(self).cwiseProduct(t.value(ia));
                  });
  return {&t, id};
}

Var one_minus(const Var& a) {
  Tape& t = *a.tape;
  int ia = a.id;
  int id = t.push((1.0 - a.value().array()).matrix(), {ia},
                  [ia](Tape& t, int self) {
                    if (t.tracked(ia)) t.adjoint(ia) -= t.adjoint(self);
                  });
  return {&t, id};
}

Var matmul(const Var& a, const Var& b) {
  check_same_tape(a, b, "matmul");
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner extents differ (" +
                     std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()) + ")");
  Tape& t = *a.tape;
  int ia = a.id, ib = b.id;
  int id = t.push(a.value() * b.value(), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    if (t.tracked(ia)) t.adjoint(ia).noalias() += g * t.value(ib).transpose();
    if (t.tracked(ib)) t.adjoint(ib).noalias() += t.value(ia).transpose() * g;
  });
  return {&t, id};
}

Var add_rowvec(const Var& x, const Var& b) {
  check_same_tape(x, b, "add_rowvec");
  if (b.rows() != 1 || b.cols() != x.cols())
    throw ShapeError("add_rowvec: bias must be 1x" + std::to_string(x.cols()));
  Tape& t = *x.tape;
  int ix = x.id, ib = b.id;
  Matrix out = x.value();
  out.rowwise() += b.value().row(0);
  int id = t.push(std::move(out), {ix, ib}, [ix, ib](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    if (t.tracked(ix)) t.adjoint(ix) += g;
    if (t.tracked(ib)) t.adjoint(ib) += g.colwise().sum();
  });
  return {&t, id};
}

Var silu(const Var& x) {
  Tape& t = *x.tape;
  int ix = x.id;
  Matrix s = (1.0 / (1.0 + (-x.value().array()).exp())).matrix();
  Matrix out = x.value().cwiseProduct(s);
  auto sig = std::make_shared<Matrix>(std::move(s));
  int id = t.push(std::move(out), {ix}, [ix, sig](Tape& t, int self) {
    if (!t.tracked(ix)) return;
    const auto& x = t.value(ix).array();
    const auto& s = sig->array();
    t.adjoint(ix).array() +=
        t.adjoint(self).array() * s * (1.0 + x * (1.0 - s));
  });
  return {&t, id};
}

Var sigmoid(const Var& x) {
  Tape& t = *x.tape;
  int ix = x.id;
  Matrix s = (1.0 / (1.0 + (-x.value().array()).exp())).matrix();
  int id = t.push(s, {ix}, [ix](Tape& t, int self) {
    if (!t.tracked(ix)) return;
    const auto& s = t.value(self).array();
    t.adjoint(ix).array() += t.adjoint(self).array() * s * (1.0 - s);
  });
  return {&t, id};
}

Var tanh(const Var& x) {
  Tape& t = *x.tape;
  int ix = x.id;
  int id = t.push(x.value().array().tanh().matrix(), {ix},
                  [ix](Tape& t, int self) {
                    if (!t.tracked(ix)) return;
                    const auto& y = t.value(self).array();
                    t.adjoint(ix).array() +=
                        t.adjoint(self).array() * (1.0 - y * y);
                  });
  return {&t, id};
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  check_same_tape(x, gain, "layer_norm");
  check_same_tape(x, bias, "layer_norm");
  const Eigen::Index k = x.cols();
  if (k < 2) throw ShapeError("layer_norm: needs at least 2 features");
  if (gain.rows() != 1 || gain.cols() != k || bias.rows() != 1 ||
      bias.cols() != k)
    throw ShapeError("layer_norm: gain/bias must be 1x" + std::to_string(k));
  Tape& t = *x.tape;
  int ix = x.id, ig = gain.id, ib = bias.id;

  const Matrix& xv = x.value();
  Vector mu = xv.rowwise().mean();
  Matrix centered = xv.colwise() - mu;
  Vector var = centered.array().square().rowwise().mean();
  Vector inv_std = (var.array() + eps).rsqrt();
  Matrix y = centered.array().colwise() * inv_std.array();
  Matrix out = (y.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);

  auto y_s = std::make_shared<Matrix>(std::move(y));
  auto is_s = std::make_shared<Vector>(std::move(inv_std));
  int id = t.push(std::move(out), {ix, ig, ib},
                  [ix, ig, ib, y_s, is_s](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    const Matrix& y = *y_s;
    if (t.tracked(ig))
      t.adjoint(ig) += g.cwiseProduct(y).colwise().sum();
    if (t.tracked(ib)) t.adjoint(ib) += g.colwise().sum();
    if (t.tracked(ix)) {
      // d = g * gain; dx = (d - mean(d) - y * mean(d .* y)) * inv_std
      Matrix d = (g.array().rowwise() * t.value(ig).row(0).array()).matrix();
      Vector md = d.rowwise().mean();
      Vector mdy = d.cwiseProduct(y).rowwise().mean();
      Matrix dx = d;
      dx.colwise() -= md;
      dx -= (y.array().colwise() * mdy.array()).matrix();
      t.adjoint(ix) += (dx.array().colwise() * is_s->array()).matrix();
    }
  });
  return {&t, id};
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: empty input");
  Tape& t = *parts.front().tape;
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> widths;
  for (const auto& p : parts) {
    check_same_tape(parts.front(), p, "concat_cols");
    if (p.rows() != rows) throw ShapeError("concat_cols: row count mismatch");
    ids.push_back(p.id);
    widths.push_back(p.cols());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  int id = t.push(std::move(out), ids,
                  [ids, widths](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (t.tracked(ids[i]))
        t.adjoint(ids[i]) += g.middleCols(off, widths[i]);
      off += widths[i];
    }
  });
  return {&t, id};
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: empty input");
  Tape& t = *parts.front().tape;
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> heights;
  for (const auto& p : parts) {
    check_same_tape(parts.front(), p, "concat_rows");
    if (p.cols() != cols) throw ShapeError("concat_rows: col count mismatch");
    ids.push_back(p.id);
    heights.push_back(p.rows());
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    out.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  int id = t.push(std::move(out), ids,
                  [ids, heights](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (t.tracked(ids[i]))
        t.adjoint(ids[i]) += g.middleRows(off, heights[i]);
      off += heights[i];
    }
  });
  return {&t, id};
}

Var slice_cols(const Var& x, Eigen::Index j0, Eigen::Index n) {
  if (j0 < 0 || n < 0 || j0 + n > x.cols())
    throw ShapeError("slice_cols: out of range");
  Tape& t = *x.tape;
  int ix = x.id;
  int id = t.push(x.value().middleCols(j0, n), {ix},
                  [ix, j0, n](Tape& t, int self) {
                    if (t.tracked(ix))
                      t.adjoint(ix).middleCols(j0, n) += t.adjoint(self);
                  });
  return {&t, id};
}

Var slice_rows(const Var& x, Eigen::Index i0, Eigen::Index n) {
  if (i0 < 0 || n < 0 || i0 + n > x.rows())
    throw ShapeError("slice_rows: out of range");
  Tape& t = *x.tape;
  int ix = x.id;
  int id = t.push(x.value().middleRows(i0, n), {ix},
                  [ix, i0, n](Tape& t, int self) {
                    if (t.tracked(ix))
                      t.adjoint(ix).middleRows(i0, n) += t.adjoint(self);
                  });
  return {&t, id};
}

Var sum(const Var& x) {
  Tape& t = *x.tape;
  int ix = x.id;
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  int id = t.push(std::move(out), {ix}, [ix](Tape& t, int self) {
    if (t.tracked(ix)) t.adjoint(ix).array() += t.adjoint(self)(0, 0);
  });
  return {&t, id};
}

Var mean_all(const Var& x) {
  Tape& t = *x.tape;
  int ix = x.id;
  const double n = static_cast<double>(x.rows() * x.cols());
  Matrix out(1, 1);
  out(0, 0) = x.value().sum() / n;
  int id = t.push(std::move(out), {ix}, [ix, n](Tape& t, int self) {
    if (t.tracked(ix)) t.adjoint(ix).array() += t.adjoint(self)(0, 0) / n;
  });
  return {&t, id};
}

Var linear_left(std::shared_ptr<const SpMat> op, const Var& x) {
  if (op->cols() != x.rows())
    throw ShapeError("linear_left: operator expects " +
                     std::to_string(op->cols()) + " rows, got " +
                     std::to_string(x.rows()));
  Tape& t = *x.tape;
  int ix = x.id;
  int id = t.push((*op) * x.value(), {ix}, [ix, op](Tape& t, int self) {
    if (t.tracked(ix))
      t.adjoint(ix) += op->transpose() * t.adjoint(self);
  });
  return {&t, id};
}

Var linear_right(const Var& x, std::shared_ptr<const SpMat> op) {
  if (op->cols() != x.cols())
    throw ShapeError("linear_right: operator expects " +
                     std::to_string(op->cols()) + " cols, got " +
                     std::to_string(x.cols()));
  Tape& t = *x.tape;
  int ix = x.id;
  int id = t.push(x.value() * op->transpose(), {ix},
                  [ix, op](Tape& t, int self) {
                    if (t.tracked(ix)) t.adjoint(ix) += t.adjoint(self) * (*op);
                  });
  return {&t, id};
}

}  // namespace piano
