#include "textile/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace textile {

Adam::Adam(AdamConfig config, const std::vector<Tensor>& params) : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Tensor& p : params) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::step(std::vector<Tensor>& params, Real lr) {
  if (params.size() != m_.size())
    throw std::invalid_argument("Adam: parameter list changed size");
  ++t_;
  const Real bc1 = 1.0 - std::pow(config_.beta1, t_);
  const Real bc2 = 1.0 - std::pow(config_.beta2, t_);

  for (size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i].value();
    const auto& grad = params[i].grad();
    auto& m = m_[i];
    auto& v = v_[i];
    if (!grad.empty() && grad.size() != value.size())
      throw std::invalid_argument("Adam: gradient size mismatch on " + params[i].name());
    for (size_t j = 0; j < value.size(); ++j) {
      const Real g = grad.empty() ? 0.0 : grad[j];
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g;
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g * g;
      const Real mhat = m[j] / bc1;
      const Real vhat = v[j] / bc2;
      value[j] -= lr * (mhat / (std::sqrt(vhat) + config_.eps) + config_.weight_decay * value[j]);
    }
  }
}

Real lr_schedule(int step, Real base, int warmup, int total) {
  if (step < 0) throw std::invalid_argument("lr_schedule: negative step");
  if (step >= total) return 0.0;
  if (warmup > 0 && step < warmup) return base * static_cast<Real>(step) / warmup;
  if (total <= warmup) return base;
  return base * static_cast<Real>(total - step) / (total - warmup);
}

} // namespace textile
