#include "textile/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace textile {

namespace {

using MatMap = Eigen::Map<Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

NodePtr make_node(std::vector<int> shape, std::vector<NodePtr> parents = {}) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value.resize(shape_size(n->shape));
  n->parents = std::move(parents);
  for (const auto& p : n->parents) {
    if (p->requires_grad) n->requires_grad = true;
  }
  return n;
}

void require_2d(const Tensor& t, const char* op) {
  if (t.ndim() != 2)
    throw std::invalid_argument(std::string(op) + ": expected 2-D tensor, got shape " +
                                shape_str(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
}

} // namespace

int shape_size(const std::vector<int>& shape) {
  int n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor Tensor::zeros(std::vector<int> shape) {
  auto n = make_node(std::move(shape));
  return Tensor(n);
}

Tensor Tensor::full(std::vector<int> shape, Real v) {
  auto n = make_node(std::move(shape));
  std::fill(n->value.begin(), n->value.end(), v);
  return Tensor(n);
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<Real> values) {
  if (shape_size(shape) != static_cast<int>(values.size()))
    throw std::invalid_argument("from_values: " + std::to_string(values.size()) +
                                " values do not fill shape " + shape_str(shape));
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  return Tensor(n);
}

Real Tensor::scalar() const {
  if (size() != 1)
    throw std::invalid_argument("scalar(): tensor has shape " + shape_str(shape()));
  return node_->value[0];
}

void Tensor::backward() const {
  if (size() != 1)
    throw std::invalid_argument("backward(): root must be scalar, got " + shape_str(shape()));
  if (!node_->requires_grad) return;

  // Iterative post-order over the grad-requiring subgraph.
  std::vector<TensorNode*> topo;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    bool descended = false;
    while (i < n->parents.size()) {
      TensorNode* p = n->parents[i++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
        descended = true;
        break;
      }
    }
    if (!descended && (stack.back().second >= stack.back().first->parents.size())) {
      topo.push_back(stack.back().first);
      stack.pop_back();
    }
  }

  for (TensorNode* n : topo) n->grad.assign(n->value.size(), 0.0);
  node_->grad[0] = 1.0;

  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

// --- elementwise ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto n = make_node(a.shape(), {a.node(), b.node()});
  for (int i = 0; i < a.size(); ++i) n->value[i] = a.value()[i] + b.value()[i];
  n->backward_fn = [](TensorNode& self) {
    for (int s = 0; s < 2; ++s) {
      auto& p = self.parents[s];
      if (!p->requires_grad) continue;
      for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
  };
  return Tensor(n);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto n = make_node(a.shape(), {a.node(), b.node()});
  for (int i = 0; i < a.size(); ++i) n->value[i] = a.value()[i] - b.value()[i];
  n->backward_fn = [](TensorNode& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    for (size_t i = 0; i < self.grad.size(); ++i) {
      if (pa->requires_grad) pa->grad[i] += self.grad[i];
      if (pb->requires_grad) pb->grad[i] -= self.grad[i];
    }
  };
  return Tensor(n);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto n = make_node(a.shape(), {a.node(), b.node()});
  for (int i = 0; i < a.size(); ++i) n->value[i] = a.value()[i] * b.value()[i];
  n->backward_fn = [](TensorNode& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    for (size_t i = 0; i < self.grad.size(); ++i) {
      if (pa->requires_grad) pa->grad[i] += self.grad[i] * pb->value[i];
      if (pb->requires_grad) pb->grad[i] += self.grad[i] * pa->value[i];
    }
  };
  return Tensor(n);
}

Tensor scale(const Tensor& a, Real c) {
  auto n = make_node(a.shape(), {a.node()});
  for (int i = 0; i < a.size(); ++i) n->value[i] = a.value()[i] * c;
  n->backward_fn = [c](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i] * c;
  };
  return Tensor(n);
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  require_2d(m, "add_rowvec");
  if (v.size() != m.cols())
    throw std::invalid_argument("add_rowvec: vector length " + std::to_string(v.size()) +
                                " vs " + std::to_string(m.cols()) + " columns");
  const int r = m.rows(), c = m.cols();
  auto n = make_node(m.shape(), {m.node(), v.node()});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) n->value[i * c + j] = m.value()[i * c + j] + v.value()[j];
  n->backward_fn = [r, c](TensorNode& self) {
    auto& pm = self.parents[0];
    auto& pv = self.parents[1];
    if (pm->requires_grad)
      for (int i = 0; i < r * c; ++i) pm->grad[i] += self.grad[i];
    if (pv->requires_grad)
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) pv->grad[j] += self.grad[i * c + j];
  };
  return Tensor(n);
}

// --- matmul ------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  const int m = a.rows(), k = a.cols(), p = b.cols();
  auto n = make_node({m, p}, {a.node(), b.node()});
  ConstMatMap A(a.value().data(), m, k), B(b.value().data(), k, p);
  MatMap C(n->value.data(), m, p);
  C.noalias() = A * B;
  n->backward_fn = [m, k, p](TensorNode& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    ConstMatMap dC(self.grad.data(), m, p);
    ConstMatMap A(pa->value.data(), m, k), B(pb->value.data(), k, p);
    if (pa->requires_grad) {
      MatMap dA(pa->grad.data(), m, k);
      dA.noalias() += dC * B.transpose();
    }
    if (pb->requires_grad) {
      MatMap dB(pb->grad.data(), k, p);
      dB.noalias() += A.transpose() * dC;
    }
  };
  return Tensor(n);
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul_nt");
  require_2d(b, "matmul_nt");
  if (a.cols() != b.cols())
    throw std::invalid_argument("matmul_nt: inner dimensions disagree, " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()) + " transposed");
  const int m = a.rows(), k = a.cols(), p = b.rows();
  auto n = make_node({m, p}, {a.node(), b.node()});
  ConstMatMap A(a.value().data(), m, k), B(b.value().data(), p, k);
  MatMap C(n->value.data(), m, p);
  C.noalias() = A * B.transpose();
  n->backward_fn = [m, k, p](TensorNode& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    ConstMatMap dC(self.grad.data(), m, p);
    ConstMatMap A(pa->value.data(), m, k), B(pb->value.data(), p, k);
    if (pa->requires_grad) {
      MatMap dA(pa->grad.data(), m, k);
      dA.noalias() += dC * B;
    }
    if (pb->requires_grad) {
      MatMap dB(pb->grad.data(), p, k);
      dB.noalias() += dC.transpose() * A;
    }
  };
  return Tensor(n);
}

// --- shape surgery -------------------------------------------------------------

Tensor slice_cols(const Tensor& a, int start, int len) {
  require_2d(a, "slice_cols");
  if (start < 0 || len <= 0 || start + len > a.cols())
    throw std::invalid_argument("slice_cols: range [" + std::to_string(start) + ", " +
                                std::to_string(start + len) + ") outside " +
                                std::to_string(a.cols()) + " columns");
  const int r = a.rows(), c = a.cols();
  auto n = make_node({r, len}, {a.node()});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < len; ++j) n->value[i * len + j] = a.value()[i * c + start + j];
  n->backward_fn = [r, c, start, len](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < len; ++j) p->grad[i * c + start + j] += self.grad[i * len + j];
  };
  return Tensor(n);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  const int r = parts[0].rows();
  int total = 0;
  std::vector<NodePtr> parents;
  std::vector<int> widths;
  for (const auto& p : parts) {
    require_2d(p, "concat_cols");
    if (p.rows() != r) throw std::invalid_argument("concat_cols: row counts differ");
    widths.push_back(p.cols());
    total += p.cols();
    parents.push_back(p.node());
  }
  auto n = make_node({r, total}, std::move(parents));
  int off = 0;
  for (size_t s = 0; s < parts.size(); ++s) {
    const int w = widths[s];
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < w; ++j) n->value[i * total + off + j] = parts[s].value()[i * w + j];
    off += w;
  }
  n->backward_fn = [r, total, widths](TensorNode& self) {
    int off = 0;
    for (size_t s = 0; s < self.parents.size(); ++s) {
      const int w = widths[s];
      auto& p = self.parents[s];
      if (p->requires_grad)
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < w; ++j) p->grad[i * w + j] += self.grad[i * total + off + j];
      off += w;
    }
  };
  return Tensor(n);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  const int c = parts[0].cols();
  int total = 0;
  std::vector<NodePtr> parents;
  std::vector<int> heights;
  for (const auto& p : parts) {
    require_2d(p, "concat_rows");
    if (p.cols() != c) throw std::invalid_argument("concat_rows: column counts differ");
    heights.push_back(p.rows());
    total += p.rows();
    parents.push_back(p.node());
  }
  auto n = make_node({total, c}, std::move(parents));
  int off = 0;
  for (size_t s = 0; s < parts.size(); ++s) {
    const int h = heights[s];
    std::copy(parts[s].value().begin(), parts[s].value().end(), n->value.begin() + off * c);
    off += h;
  }
  n->backward_fn = [c, heights](TensorNode& self) {
    int off = 0;
    for (size_t s = 0; s < self.parents.size(); ++s) {
      const int h = heights[s];
      auto& p = self.parents[s];
      if (p->requires_grad)
        for (int i = 0; i < h * c; ++i) p->grad[i] += self.grad[off * c + i];
      off += h;
    }
  };
  return Tensor(n);
}

Tensor select_rows(const Tensor& a, const std::vector<int>& indices) {
  require_2d(a, "select_rows");
  const int r = a.rows(), c = a.cols();
  for (int idx : indices)
    if (idx < 0 || idx >= r)
      throw std::invalid_argument("select_rows: index " + std::to_string(idx) +
                                  " out of range for " + std::to_string(r) + " rows");
  auto n = make_node({static_cast<int>(indices.size()), c}, {a.node()});
  for (size_t i = 0; i < indices.size(); ++i)
    std::copy(a.value().begin() + indices[i] * c, a.value().begin() + (indices[i] + 1) * c,
              n->value.begin() + i * c);
  n->backward_fn = [c, indices](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    for (size_t i = 0; i < indices.size(); ++i)
      for (int j = 0; j < c; ++j) p->grad[indices[i] * c + j] += self.grad[i * c + j];
  };
  return Tensor(n);
}

// --- nonlinearities -------------------------------------------------------------

Tensor softmax(const Tensor& x, int axis) {
  if (axis < 0 || axis >= x.ndim())
    throw std::invalid_argument("softmax: axis " + std::to_string(axis) +
                                " invalid for shape " + shape_str(x.shape()));
  const auto& shape = x.shape();
  int outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= shape[i];
  for (int i = axis + 1; i < x.ndim(); ++i) inner *= shape[i];
  const int len = shape[axis];

  auto n = make_node(shape, {x.node()});
  for (int o = 0; o < outer; ++o)
    for (int i = 0; i < inner; ++i) {
      const int base = o * len * inner + i;
      Real mx = x.value()[base];
      for (int k = 1; k < len; ++k) mx = std::max(mx, x.value()[base + k * inner]);
      Real z = 0;
      for (int k = 0; k < len; ++k) {
        const Real e = std::exp(x.value()[base + k * inner] - mx);
        n->value[base + k * inner] = e;
        z += e;
      }
      for (int k = 0; k < len; ++k) n->value[base + k * inner] /= z;
    }
  n->backward_fn = [outer, inner, len](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    for (int o = 0; o < outer; ++o)
      for (int i = 0; i < inner; ++i) {
        const int base = o * len * inner + i;
        Real dot = 0;
        for (int k = 0; k < len; ++k)
          dot += self.grad[base + k * inner] * self.value[base + k * inner];
        for (int k = 0; k < len; ++k) {
          const int at = base + k * inner;
          p->grad[at] += self.value[at] * (self.grad[at] - dot);
        }
      }
  };
  return Tensor(n);
}

Tensor gelu(const Tensor& x) {
  auto n = make_node(x.shape(), {x.node()});
  for (int i = 0; i < x.size(); ++i) {
    const Real v = x.value()[i];
    n->value[i] = 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
  }
  n->backward_fn = [](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const Real v = p->value[i];
      const Real cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
      const Real pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * M_PI);
      p->grad[i] += self.grad[i] * (cdf + v * pdf);
    }
  };
  return Tensor(n);
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, Real eps) {
  require_2d(x, "layer_norm_rows");
  const int r = x.rows(), c = x.cols();
  if (gain.size() != c || bias.size() != c)
    throw std::invalid_argument("layer_norm_rows: gain/bias length must equal " +
                                std::to_string(c) + " columns");
  auto n = make_node(x.shape(), {x.node(), gain.node(), bias.node()});
  std::vector<Real> inv_sigma(r), mu(r);
  for (int i = 0; i < r; ++i) {
    Real m = 0;
    for (int j = 0; j < c; ++j) m += x.value()[i * c + j];
    m /= c;
    Real var = 0;
    for (int j = 0; j < c; ++j) {
      const Real d = x.value()[i * c + j] - m;
      var += d * d;
    }
    var /= c;
    mu[i] = m;
    inv_sigma[i] = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < c; ++j) {
      const Real xhat = (x.value()[i * c + j] - m) * inv_sigma[i];
      n->value[i * c + j] = xhat * gain.value()[j] + bias.value()[j];
    }
  }
  n->backward_fn = [r, c, mu, inv_sigma](TensorNode& self) {
    auto& px = self.parents[0];
    auto& pg = self.parents[1];
    auto& pb = self.parents[2];
    for (int i = 0; i < r; ++i) {
      const Real is = inv_sigma[i];
      // Recover xhat and reduce the two row sums the input gradient needs.
      Real sum_dxhat = 0, sum_dxhat_xhat = 0;
      for (int j = 0; j < c; ++j) {
        const Real xhat = (px->value[i * c + j] - mu[i]) * is;
        const Real dxhat = self.grad[i * c + j] * pg->value[j];
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * xhat;
        if (pg->requires_grad) pg->grad[j] += self.grad[i * c + j] * xhat;
        if (pb->requires_grad) pb->grad[j] += self.grad[i * c + j];
      }
      if (px->requires_grad)
        for (int j = 0; j < c; ++j) {
          const Real xhat = (px->value[i * c + j] - mu[i]) * is;
          const Real dxhat = self.grad[i * c + j] * pg->value[j];
          px->grad[i * c + j] +=
              is * (dxhat - sum_dxhat / c - xhat * sum_dxhat_xhat / c);
        }
    }
  };
  return Tensor(n);
}

// --- losses -----------------------------------------------------------------------

namespace {

// Shared core: mean cross-entropy over rows with cached probabilities.
Tensor cross_entropy_impl(const Tensor& logits, std::vector<int> targets) {
  const int r = logits.rows(), c = logits.cols();
  if (static_cast<int>(targets.size()) != r)
    throw std::invalid_argument("cross_entropy: " + std::to_string(targets.size()) +
                                " targets for " + std::to_string(r) + " rows");
  for (int t : targets)
    if (t < 0 || t >= c)
      throw std::invalid_argument("cross_entropy: target " + std::to_string(t) +
                                  " out of range for " + std::to_string(c) + " classes");
  auto probs = std::make_shared<std::vector<Real>>(static_cast<size_t>(r) * c);
  auto n = make_node({1}, {logits.node()});
  Real total = 0;
  for (int i = 0; i < r; ++i) {
    Real mx = logits.value()[i * c];
    for (int j = 1; j < c; ++j) mx = std::max(mx, logits.value()[i * c + j]);
    Real z = 0;
    for (int j = 0; j < c; ++j) {
      const Real e = std::exp(logits.value()[i * c + j] - mx);
      (*probs)[i * c + j] = e;
      z += e;
    }
    for (int j = 0; j < c; ++j) (*probs)[i * c + j] /= z;
    total += (mx + std::log(z)) - logits.value()[i * c + targets[i]];
  }
  n->value[0] = total / r;
  n->backward_fn = [r, c, targets, probs](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    const Real g = self.grad[0] / r;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        p->grad[i * c + j] += g * ((*probs)[i * c + j] - (j == targets[i] ? 1.0 : 0.0));
  };
  return Tensor(n);
}

} // namespace

Tensor cross_entropy(const Tensor& logits, int target) {
  if (logits.ndim() != 1)
    throw std::invalid_argument("cross_entropy: expected 1-D logits, got " +
                                shape_str(logits.shape()));
  Tensor as_row(make_node({1, logits.size()}, {logits.node()}));
  as_row.node()->value = logits.value();
  as_row.node()->backward_fn = [](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
  };
  return cross_entropy_impl(as_row, {target});
}

Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& targets) {
  require_2d(logits, "cross_entropy_rows");
  return cross_entropy_impl(logits, targets);
}

Tensor kl_divergence(const Tensor& target, const Tensor& predicted, Real floor, Real sum_tol) {
  require_same_shape(target, predicted, "kl_divergence");
  int r = 1, c = target.size();
  if (target.ndim() == 2) {
    r = target.rows();
    c = target.cols();
  } else if (target.ndim() != 1) {
    throw std::invalid_argument("kl_divergence: expected 1-D or 2-D input, got " +
                                shape_str(target.shape()));
  }
  auto check_simplex = [&](const Tensor& t, const char* which) {
    for (int i = 0; i < r; ++i) {
      Real s = 0;
      for (int j = 0; j < c; ++j) {
        const Real v = t.value()[i * c + j];
        if (v < 0)
          throw std::invalid_argument(std::string("kl_divergence: negative entry in ") + which);
        s += v;
      }
      if (std::abs(s - 1.0) > sum_tol)
        throw std::invalid_argument(std::string("kl_divergence: ") + which +
                                    " row does not sum to 1 (got " + std::to_string(s) + ")");
    }
  };
  check_simplex(target, "target");
  check_simplex(predicted, "predicted");

  auto n = make_node({1}, {target.node(), predicted.node()});
  Real total = 0;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) {
      const Real p = target.value()[i * c + j];
      if (p == 0.0) continue; // zero-probability terms contribute nothing
      const Real q = std::max(predicted.value()[i * c + j], floor);
      total += p * (std::log(p) - std::log(q));
    }
  n->value[0] = total / r;
  n->backward_fn = [r, c, floor](TensorNode& self) {
    auto& pt = self.parents[0];
    auto& pq = self.parents[1];
    const Real g = self.grad[0] / r;
    for (int i = 0; i < r * c; ++i) {
      const Real p = pt->value[i];
      if (p == 0.0) continue;
      const Real q = std::max(pq->value[i], floor);
      if (pq->requires_grad && pq->value[i] > floor) pq->grad[i] -= g * p / q;
      if (pt->requires_grad) pt->grad[i] += g * (std::log(p) - std::log(q) + 1.0);
    }
  };
  return Tensor(n);
}

Tensor bce_with_logits(const Tensor& logit, Real label) {
  if (logit.size() != 1)
    throw std::invalid_argument("bce_with_logits: expected scalar logit, got " +
                                shape_str(logit.shape()));
  const Real z = logit.value()[0];
  auto n = make_node({1}, {logit.node()});
  n->value[0] = std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::abs(z)));
  n->backward_fn = [label](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->grad[0] += self.grad[0] * (sigmoid(p->value[0]) - label);
  };
  return Tensor(n);
}

Tensor mean(const Tensor& x) {
  auto n = make_node({1}, {x.node()});
  Real s = 0;
  for (Real v : x.value()) s += v;
  const int sz = x.size();
  n->value[0] = s / sz;
  n->backward_fn = [sz](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    const Real g = self.grad[0] / sz;
    for (auto& d : p->grad) d += g;
  };
  return Tensor(n);
}

Tensor sum(const Tensor& x) {
  auto n = make_node({1}, {x.node()});
  Real s = 0;
  for (Real v : x.value()) s += v;
  n->value[0] = s;
  n->backward_fn = [](TensorNode& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    for (auto& d : p->grad) d += self.grad[0];
  };
  return Tensor(n);
}

Real sigmoid(Real x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const Real e = std::exp(x);
  return e / (1.0 + e);
}

// --- gradient checking ----------------------------------------------------------

GradCheckReport grad_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                           Real eps) {
  Tensor loss = f();
  loss.backward();
  std::vector<std::vector<Real>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) {
    if (p.grad().empty())
      analytic.emplace_back(p.size(), 0.0);
    else
      analytic.push_back(p.grad());
  }

  GradCheckReport report;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor param = params[pi]; // aliases the shared node
    auto& vals = param.value();
    for (int i = 0; i < params[pi].size(); ++i) {
      const Real saved = vals[i];
      vals[i] = saved + eps;
      const Real up = f().scalar();
      vals[i] = saved - eps;
      const Real down = f().scalar();
      vals[i] = saved;
      const Real numeric = (up - down) / (2 * eps);
      const Real a = analytic[pi][i];
      const Real rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1.0});
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = params[pi].name().empty()
                                 ? ("param" + std::to_string(pi))
                                 : params[pi].name();
        report.worst_index = i;
      }
    }
  }
  return report;
}

} // namespace textile
