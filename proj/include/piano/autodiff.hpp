#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace piano {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid as long as the
/// owning tape is alive and not cleared.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ValueError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Reverse-mode tape. Nodes are recorded in topological order by
/// construction; backward() walks them in reverse, accumulating adjoints.
class Tape {
 public:
  /// Differentiable input (model parameter).
  Var leaf(Matrix value);
  /// Non-differentiable input (coordinates, initial condition, ...).
  Var constant(Matrix value);

  /// Populates adjoints of every tracked node reachable from `loss`.
  /// `loss` must be 1x1. Repeated calls reset all accumulators first.
  void backward(const Var& loss);

  const Matrix& grad(const Var& v) const;
  const Matrix& value(int id) const { return nodes_[id].value; }

  std::size_t size() const { return nodes_.size(); }
  void clear();

  // Op-implementation interface.
  int push(Matrix value, std::vector<int> parents,
           std::function<void(Tape&, int)> pull);
  Matrix& adjoint(int id) { return nodes_[id].adjoint; }
  bool tracked(int id) const { return nodes_[id].tracked; }

 private:
  struct Node {
    Matrix value;
    Matrix adjoint;
    bool tracked = false;
    std::vector<int> parents;
    std::function<void(Tape&, int)> pull;
  };
  std::vector<Node> nodes_;
};

// Elementwise and structural primitives. Each registers the exact adjoint
// rule on the tape of its inputs.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var cmul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var square(const Var& a);
Var one_minus(const Var& a);
Var matmul(const Var& a, const Var& b);
/// x + b broadcast over rows; b is 1 x k.
Var add_rowvec(const Var& x, const Var& b);
Var silu(const Var& x);
Var sigmoid(const Var& x);
Var tanh(const Var& x);
/// Row-wise layer normalization with population variance; gain/bias are 1 x k.
Var layer_norm(const Var& x, const Var& gain, const Var& bias,
               double eps = 1e-5);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(const Var& x, Eigen::Index j0, Eigen::Index n);
Var slice_rows(const Var& x, Eigen::Index i0, Eigen::Index n);
Var sum(const Var& x);
Var mean_all(const Var& x);
/// L * x for a fixed sparse linear map; adjoint is the transpose map.
Var linear_left(std::shared_ptr<const SpMat> op, const Var& x);
/// x * op^T (applies the map along rows); adjoint is the transpose map.
Var linear_right(const Var& x, std::shared_ptr<const SpMat> op);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, double s) { return scale(a, s); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

}  // namespace piano
