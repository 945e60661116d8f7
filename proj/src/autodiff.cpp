#include "fairexit/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace fairexit {

const Matrix& Gradients::at(const std::string& name) const {
  auto it = by_name.find(name);
  if (it == by_name.end())
    throw std::invalid_argument("Gradients: no parameter named '" + name + "'");
  return it->second;
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, -1, -1, false, nullptr});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::parameter(const std::string& name, const Matrix& value) {
  for (const auto& [n, id] : params_)
    if (n == name) throw std::invalid_argument("Tape: duplicate parameter '" + name + "'");
  nodes_.push_back(Node{value, {}, -1, -1, true, nullptr});
  const int id = static_cast<int>(nodes_.size()) - 1;
  params_.emplace_back(name, id);
  return Var{this, id};
}

const Matrix& Tape::value(Var v) const {
  if (v.tape != this || v.id < 0 || v.id >= node_count())
    throw std::invalid_argument("Tape::value: Var does not belong to this tape");
  return nodes_[v.id].value;
}

Var Tape::push(Matrix value, int arg0, int arg1, BackFn back) {
  Node n;
  n.value = std::move(value);
  n.arg0 = arg0;
  n.arg1 = arg1;
  n.needs_grad = (arg0 >= 0 && nodes_[arg0].needs_grad) || (arg1 >= 0 && nodes_[arg1].needs_grad);
  if (n.needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Matrix& Tape::grad_ref(int id) {
  Node& n = nodes_[id];
  if (n.grad.rows == 0 && n.grad.cols == 0 && n.value.size() > 0)
    n.grad = Matrix(n.value.rows, n.value.cols, 0.0);
  return n.grad;
}

Gradients Tape::backward(Var scalar_root) {
  if (scalar_root.tape != this || scalar_root.id < 0 || scalar_root.id >= node_count())
    throw std::invalid_argument("backward: root does not belong to this tape");
  const Matrix& rv = nodes_[scalar_root.id].value;
  if (rv.rows != 1 || rv.cols != 1)
    throw std::invalid_argument("backward: root must be a 1x1 scalar, got " + rv.shape_str());
  if (backward_done_) throw std::runtime_error("backward: already run on this tape");
  backward_done_ = true;

  // Mark nodes that are both ancestors of the root and reach a parameter.
  std::vector<char> active(nodes_.size(), 0);
  active[scalar_root.id] = nodes_[scalar_root.id].needs_grad;
  for (int id = scalar_root.id; id >= 0; --id) {
    if (!active[id]) continue;
    const Node& n = nodes_[id];
    if (n.arg0 >= 0 && nodes_[n.arg0].needs_grad) active[n.arg0] = 1;
    if (n.arg1 >= 0 && nodes_[n.arg1].needs_grad) active[n.arg1] = 1;
  }

  grad_ref(scalar_root.id)(0, 0) = 1.0;
  for (int id = scalar_root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (active[id] && n.back) n.back(*this, id);
  }

  Gradients g;
  for (const auto& [name, id] : params_) {
    const Node& n = nodes_[id];
    if (n.grad.size() > 0)
      g.by_name.emplace(name, n.grad);
    else
      g.by_name.emplace(name, Matrix(n.value.rows, n.value.cols, 0.0));
  }
  return g;
}

// ---------------------------------------------------------------------------
// op implementations
// ---------------------------------------------------------------------------

static Tape& same_tape(Var a, Var b, const char* op) {
  if (a.tape == nullptr || b.tape == nullptr || a.tape != b.tape)
    throw std::invalid_argument(std::string(op) + ": operands recorded on different tapes");
  return *a.tape;
}

static Tape& own_tape(Var a, const char* op) {
  if (a.tape == nullptr) throw std::invalid_argument(std::string(op) + ": null Var");
  return *a.tape;
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  Matrix c = matmul(t.value(a), t.value(b));
  const int ia = a.id, ib = b.id;
  return t.push(std::move(c), ia, ib, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad_ref(self);
    if (t.needs_grad(ia)) {
      Matrix ga = matmul(g, transpose(t.value_at(ib)));
      Matrix& acc = t.grad_ref(ia);
      for (long i = 0; i < acc.size(); ++i) acc.data[i] += ga.data[i];
    }
    if (t.needs_grad(ib)) {
      Matrix gb = matmul(transpose(t.value_at(ia)), g);
      Matrix& acc = t.grad_ref(ib);
      for (long i = 0; i < acc.size(); ++i) acc.data[i] += gb.data[i];
    }
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b, "add");
  Matrix c = add(t.value(a), t.value(b));
  const int ia = a.id, ib = b.id;
  return t.push(std::move(c), ia, ib, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad_ref(self);
    for (int arg : {ia, ib}) {
      if (!t.needs_grad(arg)) continue;
      Matrix& acc = t.grad_ref(arg);
      for (long i = 0; i < acc.size(); ++i) acc.data[i] += g.data[i];
    }
  });
}

Var add_rowvec(Var x, Var row) {
  Tape& t = same_tape(x, row, "add_rowvec");
  Matrix c = add_rowvec(t.value(x), t.value(row));
  const int ix = x.id, ir = row.id;
  return t.push(std::move(c), ix, ir, [ix, ir](Tape& t, int self) {
    const Matrix& g = t.grad_ref(self);
    if (t.needs_grad(ix)) {
      Matrix& acc = t.grad_ref(ix);
      for (long i = 0; i < acc.size(); ++i) acc.data[i] += g.data[i];
    }
    if (t.needs_grad(ir)) {
      Matrix& acc = t.grad_ref(ir);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) acc(0, j) += g(i, j);
    }
  });
}

Var relu(Var x) {
  Tape& t = own_tape(x, "relu");
  Matrix c = relu(t.value(x));
  const int ix = x.id;
  return t.push(std::move(c), ix, -1, [ix](Tape& t, int self) {
    if (!t.needs_grad(ix)) return;
    const Matrix& g = t.grad_ref(self);
    const Matrix& xv = t.value_at(ix);
    Matrix& acc = t.grad_ref(ix);
    for (long i = 0; i < acc.size(); ++i)
      if (xv.data[i] > 0.0) acc.data[i] += g.data[i];
  });
}

Var scale(Var x, double c) {
  Tape& t = own_tape(x, "scale");
  Matrix v = scale(t.value(x), c);
  const int ix = x.id;
  return t.push(std::move(v), ix, -1, [ix, c](Tape& t, int self) {
    if (!t.needs_grad(ix)) return;
    const Matrix& g = t.grad_ref(self);
    Matrix& acc = t.grad_ref(ix);
    for (long i = 0; i < acc.size(); ++i) acc.data[i] += c * g.data[i];
  });
}

Var hadamard(Var a, Var b) {
  Tape& t = same_tape(a, b, "hadamard");
  Matrix c = hadamard(t.value(a), t.value(b));
  const int ia = a.id, ib = b.id;
  return t.push(std::move(c), ia, ib, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad_ref(self);
    if (t.needs_grad(ia)) {
      const Matrix& bv = t.value_at(ib);
      Matrix& acc = t.grad_ref(ia);
      for (long i = 0; i < acc.size(); ++i) acc.data[i] += g.data[i] * bv.data[i];
    }
    if (t.needs_grad(ib)) {
      const Matrix& av = t.value_at(ia);
      Matrix& acc = t.grad_ref(ib);
      for (long i = 0; i < acc.size(); ++i) acc.data[i] += g.data[i] * av.data[i];
    }
  });
}

Var sum_all(Var x) {
  Tape& t = own_tape(x, "sum_all");
  Matrix s(1, 1, sum_all(t.value(x)));
  const int ix = x.id;
  return t.push(std::move(s), ix, -1, [ix](Tape& t, int self) {
    if (!t.needs_grad(ix)) return;
    const double g = t.grad_ref(self)(0, 0);
    Matrix& acc = t.grad_ref(ix);
    for (long i = 0; i < acc.size(); ++i) acc.data[i] += g;
  });
}

Var mean_all(Var x) {
  Tape& t = own_tape(x, "mean_all");
  const long n = t.value(x).size();
  return scale(sum_all(x), n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
}

Var softmax_rows(Var logits) {
  Tape& t = own_tape(logits, "softmax_rows");
  Matrix p = softmax_rows(t.value(logits));
  const int iz = logits.id;
  return t.push(std::move(p), iz, -1, [iz](Tape& t, int self) {
    if (!t.needs_grad(iz)) return;
    const Matrix& g = t.grad_ref(self);
    const Matrix& s = t.value_at(self);
    Matrix& acc = t.grad_ref(iz);
    for (int i = 0; i < s.rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < s.cols; ++j) dot += g(i, j) * s(i, j);
      for (int j = 0; j < s.cols; ++j) acc(i, j) += s(i, j) * (g(i, j) - dot);
    }
  });
}

Var cross_entropy(Var logits, const std::vector<int>& labels) {
  Tape& t = own_tape(logits, "cross_entropy");
  const Matrix& z = t.value(logits);
  Matrix loss(1, 1, cross_entropy(z, labels));  // validates label range
  const int iz = logits.id;
  return t.push(std::move(loss), iz, -1, [iz, labels](Tape& t, int self) {
    if (!t.needs_grad(iz)) return;
    const double g = t.grad_ref(self)(0, 0);
    const Matrix& z = t.value_at(iz);
    const Matrix p = softmax_rows(z);
    const double invn = 1.0 / z.rows;
    Matrix& acc = t.grad_ref(iz);
    for (int i = 0; i < z.rows; ++i) {
      for (int j = 0; j < z.cols; ++j) acc(i, j) += g * invn * p(i, j);
      acc(i, labels[i]) -= g * invn;
    }
  });
}

Var gradient_reversal(Var x, double strength) {
  Tape& t = own_tape(x, "gradient_reversal");
  if (strength < 0.0)
    throw std::invalid_argument("gradient_reversal: strength must be nonnegative");
  Matrix v = t.value(x);  // identity forward, bitwise
  const int ix = x.id;
  return t.push(std::move(v), ix, -1, [ix, strength](Tape& t, int self) {
    if (!t.needs_grad(ix)) return;
    const Matrix& g = t.grad_ref(self);
    Matrix& acc = t.grad_ref(ix);
    for (long i = 0; i < acc.size(); ++i) acc.data[i] += -strength * g.data[i];
  });
}

Var gaussian_kernel(Var x, double bandwidth) {
  Tape& t = own_tape(x, "gaussian_kernel");
  Matrix k = gaussian_kernel_matrix(t.value(x), bandwidth);
  const int ix = x.id;
  const double inv_sq = 1.0 / (bandwidth * bandwidth);
  return t.push(std::move(k), ix, -1, [ix, inv_sq](Tape& t, int self) {
    if (!t.needs_grad(ix)) return;
    const Matrix& g = t.grad_ref(self);
    const Matrix& k = t.value_at(self);
    const Matrix& xv = t.value_at(ix);
    Matrix& acc = t.grad_ref(ix);
    const int n = xv.rows, d = xv.cols;
    // dK_ij/dx_i = K_ij (x_j - x_i) / bw^2; K is symmetric.
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const double c = (g(i, j) + g(j, i)) * k(i, j) * inv_sq;
        if (c == 0.0) continue;
        for (int f = 0; f < d; ++f) acc(i, f) += c * (xv(j, f) - xv(i, f));
      }
    }
  });
}

Var gaussian_cross_kernel(Var x, Var y, double bandwidth) {
  Tape& t = same_tape(x, y, "gaussian_cross_kernel");
  Matrix k = gaussian_cross_kernel_matrix(t.value(x), t.value(y), bandwidth);
  const int ix = x.id, iy = y.id;
  const double inv_sq = 1.0 / (bandwidth * bandwidth);
  return t.push(std::move(k), ix, iy, [ix, iy, inv_sq](Tape& t, int self) {
    const Matrix& g = t.grad_ref(self);
    const Matrix& k = t.value_at(self);
    const Matrix& xv = t.value_at(ix);
    const Matrix& yv = t.value_at(iy);
    const int d = xv.cols;
    if (t.needs_grad(ix)) {
      Matrix& acc = t.grad_ref(ix);
      for (int i = 0; i < xv.rows; ++i)
        for (int j = 0; j < yv.rows; ++j) {
          const double c = g(i, j) * k(i, j) * inv_sq;
          if (c == 0.0) continue;
          for (int f = 0; f < d; ++f) acc(i, f) += c * (yv(j, f) - xv(i, f));
        }
    }
    if (t.needs_grad(iy)) {
      Matrix& acc = t.grad_ref(iy);
      for (int i = 0; i < xv.rows; ++i)
        for (int j = 0; j < yv.rows; ++j) {
          const double c = g(i, j) * k(i, j) * inv_sq;
          if (c == 0.0) continue;
          for (int f = 0; f < d; ++f) acc(j, f) += c * (xv(i, f) - yv(j, f));
        }
    }
  });
}

Var select_rows(Var x, std::vector<int> idx) {
  Tape& t = own_tape(x, "select_rows");
  const Matrix& xv = t.value(x);
  Matrix out(static_cast<int>(idx.size()), xv.cols);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const int i = idx[r];
    if (i < 0 || i >= xv.rows)
      throw std::invalid_argument("select_rows: index " + std::to_string(i) + " outside [0," +
                                  std::to_string(xv.rows) + ")");
    for (int j = 0; j < xv.cols; ++j) out(static_cast<int>(r), j) = xv(i, j);
  }
  const int ix = x.id;
  return t.push(std::move(out), ix, -1, [ix, idx = std::move(idx)](Tape& t, int self) {
    if (!t.needs_grad(ix)) return;
    const Matrix& g = t.grad_ref(self);
    Matrix& acc = t.grad_ref(ix);
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (int j = 0; j < g.cols; ++j) acc(idx[r], j) += g(static_cast<int>(r), j);
  });
}

Var affine(Var x, Var w, Var b) { return add_rowvec(matmul(x, w), b); }

// ---------------------------------------------------------------------------
// finite differences
// ---------------------------------------------------------------------------

static double eval_at(const TapeFn& f, const std::vector<Matrix>& point) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(point.size());
  for (std::size_t i = 0; i < point.size(); ++i)
    vars.push_back(tape.parameter("p" + std::to_string(i), point[i]));
  Var out = f(tape, vars);
  const Matrix& v = tape.value(out);
  if (v.rows != 1 || v.cols != 1)
    throw std::invalid_argument("finite_diff_check: f must return a 1x1 scalar");
  return v(0, 0);
}

double finite_diff_check(const TapeFn& f, const std::vector<Matrix>& point, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("finite_diff_check: epsilon must be positive");

  Tape tape;
  std::vector<Var> vars;
  for (std::size_t i = 0; i < point.size(); ++i)
    vars.push_back(tape.parameter("p" + std::to_string(i), point[i]));
  Var out = f(tape, vars);
  const Matrix& v = tape.value(out);
  if (v.rows != 1 || v.cols != 1)
    throw std::invalid_argument("finite_diff_check: f must return a 1x1 scalar");
  Gradients analytic = tape.backward(out);

  double max_rel = 0.0;
  std::vector<Matrix> p = point;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Matrix& ga = analytic.at("p" + std::to_string(i));
    for (long c = 0; c < p[i].size(); ++c) {
      const double saved = p[i].data[c];
      p[i].data[c] = saved + epsilon;
      const double up = eval_at(f, p);
      p[i].data[c] = saved - epsilon;
      const double dn = eval_at(f, p);
      p[i].data[c] = saved;
      const double numeric = (up - dn) / (2.0 * epsilon);
      const double a = ga.data[c];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-3});
      max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace fairexit
