#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace textile {

// Reference numeric type. Double keeps finite-difference checks meaningful;
// checkpoints store 32-bit floats (see checkpoint.hpp).
using Real = double;

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

struct TensorNode {
  std::vector<int> shape;
  std::vector<Real> value;
  std::vector<Real> grad; // same length as value once backward() has run
  std::vector<NodePtr> parents;
  // Pulls this node's grad into its parents' grads.
  std::function<void(TensorNode&)> backward_fn;
  bool requires_grad = false;
  std::string name; // set on parameters, for checkpoints and diagnostics
};

// Value-semantics handle onto a shared graph node. Copying a Tensor aliases
// the node; ops build new nodes that reference their inputs, forming the
// reverse-mode tape.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, Real v);
  static Tensor from_values(std::vector<int> shape, std::vector<Real> values);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[i]; }
  int size() const { return static_cast<int>(node_->value.size()); }
  int rows() const { return node_->shape[0]; }
  int cols() const { return node_->shape[1]; }

  std::vector<Real>& value() { return node_->value; }
  const std::vector<Real>& value() const { return node_->value; }
  std::vector<Real>& grad() { return node_->grad; }
  const std::vector<Real>& grad() const { return node_->grad; }

  Real scalar() const;

  Tensor& set_requires_grad(bool b) {
    node_->requires_grad = b;
    return *this;
  }
  bool requires_grad() const { return node_->requires_grad; }

  Tensor& set_name(std::string n) {
    node_->name = std::move(n);
    return *this;
  }
  const std::string& name() const { return node_->name; }

  NodePtr node() const { return node_; }

  // Reverse-mode sweep from a scalar root. Grads of every reachable node are
  // recomputed from scratch (previous contents are discarded).
  void backward() const;

private:
  NodePtr node_;
};

int shape_size(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

// --- elementwise and linear algebra ---------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, Real c);
// Adds a length-c vector to every row of an r x c matrix.
Tensor add_rowvec(const Tensor& m, const Tensor& v);

Tensor matmul(const Tensor& a, const Tensor& b);
// a (m x k) times b^T where b is (n x k); saves an explicit transpose in
// attention score computation.
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// --- shape surgery ---------------------------------------------------------

Tensor slice_cols(const Tensor& a, int start, int len);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
// Gathers rows by index; gradient scatter-adds, so repeated indices
// accumulate. Also serves as the embedding lookup.
Tensor select_rows(const Tensor& a, const std::vector<int>& indices);
inline Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  return select_rows(table, ids);
}

// --- nonlinearities and losses ---------------------------------------------

// Softmax along `axis` of a 1-D or 2-D tensor, stabilized by max subtraction.
Tensor softmax(const Tensor& x, int axis);
Tensor gelu(const Tensor& x);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias,
                       Real eps = 1e-5);

// Negative log softmax probability of `target` under 1-D logits.
Tensor cross_entropy(const Tensor& logits, int target);
// Mean cross-entropy over rows of 2-D logits against per-row targets.
Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& targets);

// Mean KL(target || predicted) over rows (or a single vector). Both inputs
// must lie on the probability simplex within `sum_tol`; predicted entries are
// clamped below by `floor` before the log.
Tensor kl_divergence(const Tensor& target, const Tensor& predicted,
                     Real floor = 1e-12, Real sum_tol = 1e-6);

// Numerically stable binary cross-entropy on a scalar logit.
Tensor bce_with_logits(const Tensor& logit, Real label);

Tensor mean(const Tensor& x);
Tensor sum(const Tensor& x);

Real sigmoid(Real x);

// --- gradient checking -------------------------------------------------------

struct GradCheckReport {
  Real max_rel_err = 0.0;
  std::string worst_param;
  int worst_index = -1;
};

// Central-difference check of analytic gradients. `f` must deterministically
// rebuild a scalar loss over the given parameter leaves. Relative error is
// |analytic - numeric| / max(|analytic|, |numeric|, 1).
GradCheckReport grad_check(const std::function<Tensor()>& f,
                           const std::vector<Tensor>& params, Real eps);

} // namespace textile
