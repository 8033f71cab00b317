#include "textile/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace textile {

namespace {

void validate_signals(const std::vector<Real>& signals) {
  if (signals.size() < 2)
    throw std::invalid_argument("solve_weights: need at least 2 task signals, got " +
                                std::to_string(signals.size()));
  for (Real g : signals)
    if (!(g >= 0.0 && g < 1.0))
      throw std::invalid_argument("solve_weights: signal " + std::to_string(g) +
                                  " outside [0, 1)");
}

} // namespace

std::vector<Real> solve_weights(const std::vector<Real>& signals) {
  validate_signals(signals);
  const Real L = static_cast<Real>(signals.size());
  std::vector<Real> w(signals.size());
  Real z = 0;
  for (size_t i = 0; i < signals.size(); ++i) {
    w[i] = 1.0 / (L - signals[i] * signals[i]);
    z += w[i];
  }
  for (auto& wi : w) wi /= z;
  return w;
}

std::vector<Real> project_to_simplex(const std::vector<Real>& v) {
  // Sort descending, find the largest k with u_k + (1 - sum u_1..k)/k > 0,
  // then shift by that threshold and clip at zero.
  std::vector<Real> u(v);
  std::sort(u.begin(), u.end(), std::greater<Real>());
  Real cum = 0, theta = 0;
  int k = 0;
  for (size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const Real t = (cum - 1.0) / static_cast<Real>(i + 1);
    if (u[i] - t > 0) {
      theta = t;
      k = static_cast<int>(i + 1);
    }
  }
  (void)k;
  std::vector<Real> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

std::vector<Real> qp_oracle(const std::vector<Real>& signals, const QpOracleOptions& opts) {
  validate_signals(signals);
  const size_t L = signals.size();
  const Real Lf = static_cast<Real>(L);

  std::vector<Real> coeff(L);
  for (size_t i = 0; i < L; ++i) coeff[i] = Lf - signals[i] * signals[i];

  std::vector<Real> w(L, 1.0 / Lf), next(L);
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    for (size_t i = 0; i < L; ++i) next[i] = w[i] - opts.step * 2.0 * coeff[i] * w[i];
    next = project_to_simplex(next);
    Real delta = 0;
    for (size_t i = 0; i < L; ++i) delta = std::max(delta, std::abs(next[i] - w[i]));
    w.swap(next);
    if (delta < opts.tol) return w;
  }

  std::ostringstream msg;
  msg << "qp_oracle: no convergence after " << opts.max_iters << " iterations; last iterate";
  for (Real wi : w) msg << " " << wi;
  throw std::runtime_error(msg.str());
}

Real normalize_signal(Real raw_loss) {
  if (!std::isfinite(raw_loss) || raw_loss < 0)
    throw std::invalid_argument("normalize_signal: loss must be finite and nonnegative, got " +
                                std::to_string(raw_loss));
  return raw_loss / (1.0 + raw_loss);
}

Tensor aggregate_loss(const std::vector<Tensor>& losses, const std::vector<Real>& weights) {
  if (losses.size() != weights.size() || losses.empty())
    throw std::invalid_argument("aggregate_loss: " + std::to_string(losses.size()) +
                                " losses vs " + std::to_string(weights.size()) + " weights");
  Tensor total = scale(losses[0], weights[0]);
  for (size_t i = 1; i < losses.size(); ++i)
    total = add(total, scale(losses[i], weights[i]));
  return total;
}

Real aggregate_loss_value(const std::vector<Real>& losses, const std::vector<Real>& weights) {
  if (losses.size() != weights.size() || losses.empty())
    throw std::invalid_argument("aggregate_loss: " + std::to_string(losses.size()) +
                                " losses vs " + std::to_string(weights.size()) + " weights");
  return std::inner_product(losses.begin(), losses.end(), weights.begin(), 0.0);
}

} // namespace textile
