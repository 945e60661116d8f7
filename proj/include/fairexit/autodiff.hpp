#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fairexit/matrix.hpp"

namespace fairexit {

class Tape;

// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
};

// Gradients of a scalar loss with respect to every registered parameter.
// Disconnected parameters map to zero matrices of the parameter's shape.
struct Gradients {
  std::map<std::string, Matrix> by_name;
  const Matrix& at(const std::string& name) const;
};

// Reverse-mode tape over Matrix values. Nodes are appended in forward
// (topological) order and backward() replays them exactly once in reverse.
// A tape is confined to one logical thread per forward/backward pass;
// distinct tapes may run concurrently.
class Tape {
 public:
  using BackFn = std::function<void(Tape&, int self_id)>;

  Var constant(Matrix value);
  Var parameter(const std::string& name, const Matrix& value);

  const Matrix& value(Var v) const;
  int node_count() const { return static_cast<int>(nodes_.size()); }

  // Gradients of a 1x1 scalar node w.r.t. all registered parameters.
  // May be called once per tape.
  Gradients backward(Var scalar_root);

  // --- hooks for op implementations ---------------------------------------
  Var push(Matrix value, int arg0, int arg1, BackFn back);
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  const Matrix& value_at(int id) const { return nodes_[id].value; }
  // Gradient accumulator for a node, zero-allocated on first access.
  Matrix& grad_ref(int id);
  int arg0(int id) const { return nodes_[id].arg0; }
  int arg1(int id) const { return nodes_[id].arg1; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // empty until touched during backward
    int arg0 = -1;
    int arg1 = -1;
    bool needs_grad = false;
    BackFn back;
  };
  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, int>> params_;
  bool backward_done_ = false;
};

// ---- differentiable operations -------------------------------------------

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var add_rowvec(Var x, Var row);
Var relu(Var x);                  // subgradient at 0 is 0
Var scale(Var x, double c);
Var hadamard(Var a, Var b);
Var sum_all(Var x);               // -> 1x1
Var mean_all(Var x);              // -> 1x1
Var softmax_rows(Var logits);
Var cross_entropy(Var logits, const std::vector<int>& labels);  // -> 1x1
// Identity forward; backward multiplies the upstream gradient by -strength.
Var gradient_reversal(Var x, double strength);
Var gaussian_kernel(Var x, double bandwidth);
Var gaussian_cross_kernel(Var x, Var y, double bandwidth);
Var select_rows(Var x, std::vector<int> idx);
// x @ w + b with b broadcast over rows.
Var affine(Var x, Var w, Var b);

// ---- gradient checking -----------------------------------------------------

// Builds a scalar loss from parameter Vars pushed for `point` (named p0, p1,
// ...). Used both to obtain analytic gradients and to re-evaluate the loss
// at perturbed points for central differences.
using TapeFn = std::function<Var(Tape&, const std::vector<Var>&)>;

// Max relative error between analytic and central-difference gradients,
// componentwise, with denominator max(|analytic|, |numeric|, 1e-3). Inputs
// near relu kinks are the caller's responsibility to exclude.
double finite_diff_check(const TapeFn& f, const std::vector<Matrix>& point, double epsilon);

}  // namespace fairexit
