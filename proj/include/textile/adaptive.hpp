#pragma once

#include <vector>

#include "textile/tensor.hpp"

namespace textile {

// Per-batch loss-weight solver. Each task contributes a scalar signal in
// [0, 1); the solver returns simplex weights that grow with the signal, so
// the task with the largest normalized loss gets the most attention.

// Closed form: w_i proportional to 1 / (L - g_i^2), normalized to sum 1.
// Requires every signal in [0, 1); outside that range the closed form can
// go negative, so it is rejected.
std::vector<Real> solve_weights(const std::vector<Real>& signals);

struct QpOracleOptions {
  Real step = 1e-2;
  int max_iters = 50000;
  Real tol = 1e-12; // stop when successive iterates differ by less than this
};

// Independent verification path: minimizes sum_i (L - g_i^2) * w_i^2 over the
// probability simplex by projected gradient descent. This diagonal quadratic
// has the same unique minimizer as the closed form whenever all coefficients
// are positive, which the signal domain guarantees.
std::vector<Real> qp_oracle(const std::vector<Real>& signals, const QpOracleOptions& opts = {});

// Euclidean projection onto the probability simplex (sort-based).
std::vector<Real> project_to_simplex(const std::vector<Real>& v);

// Maps a raw nonnegative loss value into the solver's [0, 1) domain via
// x / (1 + x); strictly increasing, so larger losses keep larger weights.
Real normalize_signal(Real raw_loss);

// Weighted sum of task losses. Weights are plain constants: no gradient flows
// through them, the weight computation happens before the parameter update.
Tensor aggregate_loss(const std::vector<Tensor>& losses, const std::vector<Real>& weights);

// Plain-value overload for reporting.
Real aggregate_loss_value(const std::vector<Real>& losses, const std::vector<Real>& weights);

} // namespace textile
