#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "textile/adaptive.hpp"
#include "textile/rng.hpp"

using namespace textile;

namespace {

Real linf(const std::vector<Real>& a, const std::vector<Real>& b) {
  Real m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<Real> random_signals(int n, Rng& rng) {
  std::vector<Real> g(n);
  for (auto& v : g) v = rng.uniform() * 0.999;
  return g;
}

} // namespace

TEST_CASE("equal signals give uniform weights") {
  for (Real c : {0.0, 0.3, 0.95}) {
    auto w = solve_weights({c, c, c});
    for (Real wi : w) CHECK(wi == doctest::Approx(1.0 / 3).epsilon(1e-14));
  }
  auto w5 = solve_weights(std::vector<Real>(5, 0.42));
  for (Real wi : w5) CHECK(wi == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("known solutions") {
  auto w = solve_weights({0.9, 0.5, 0.1});
  CHECK(w[0] == doctest::Approx(0.3954437).epsilon(1e-5));
  CHECK(w[1] == doctest::Approx(0.3149170).epsilon(1e-5));
  CHECK(w[2] == doctest::Approx(0.2896394).epsilon(1e-5));

  auto w2 = solve_weights({0.0, 0.99});
  CHECK(w2[0] == doctest::Approx(0.3377265).epsilon(1e-5));
  CHECK(w2[1] == doctest::Approx(0.6622735).epsilon(1e-5));
}

TEST_CASE("domain violations rejected") {
  CHECK_THROWS_AS(solve_weights({0.5}), std::invalid_argument);
  CHECK_THROWS_AS(solve_weights({0.5, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(solve_weights({0.5, -0.1}), std::invalid_argument);
  CHECK_THROWS_AS(solve_weights({0.5, 1.5, 0.2}), std::invalid_argument);
}

TEST_CASE("simplex and monotonicity properties") {
  Rng rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(5));
    auto g = random_signals(n, rng);
    auto w = solve_weights(g);
    Real s = std::accumulate(w.begin(), w.end(), Real(0));
    CHECK(std::abs(s - 1.0) <= 1e-12);
    for (Real wi : w) CHECK(wi >= 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (g[i] > g[j] + 1e-9) CHECK(w[i] > w[j]);
  }
}

TEST_CASE("permutation equivariance") {
  Rng rng(7);
  auto g = random_signals(4, rng);
  auto w = solve_weights(g);
  std::vector<int> perm{2, 0, 3, 1};
  std::vector<Real> gp(4);
  for (int i = 0; i < 4; ++i) gp[i] = g[perm[i]];
  auto wp = solve_weights(gp);
  for (int i = 0; i < 4; ++i) CHECK(wp[i] == doctest::Approx(w[perm[i]]).epsilon(1e-14));
}

TEST_CASE("stationarity system holds with a common multiplier") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(5));
    auto g = random_signals(n, rng);
    auto w = solve_weights(g);
    const Real total = std::accumulate(w.begin(), w.end(), Real(0));
    // -g_i^2 w_i + n w_i - sum_j w_j - alpha = 0 for one alpha shared by all i
    std::vector<Real> alpha(n);
    for (int i = 0; i < n; ++i) alpha[i] = (n - g[i] * g[i]) * w[i] - total;
    const Real mean_alpha = std::accumulate(alpha.begin(), alpha.end(), Real(0)) / n;
    for (int i = 0; i < n; ++i) {
      const Real residual = -g[i] * g[i] * w[i] + n * w[i] - total - mean_alpha;
      CHECK(std::abs(residual) <= 1e-10);
    }
  }
}

TEST_CASE("simplex projection known cases") {
  auto p1 = project_to_simplex({2.0, 0.0, 0.0});
  CHECK(p1[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p1[1] == doctest::Approx(0.0).epsilon(1e-14));

  auto p2 = project_to_simplex({0.5, 0.5, 0.5});
  for (Real v : p2) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-14));

  auto p3 = project_to_simplex({0.2, 0.8});
  CHECK(p3[0] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(p3[1] == doctest::Approx(0.8).epsilon(1e-14));

  auto p4 = project_to_simplex({-1.0, 1.0});
  CHECK(p4[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(p4[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("projection is idempotent and feasible on random input") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(6));
    std::vector<Real> v(n);
    for (auto& x : v) x = rng.normal() * 3;
    auto p = project_to_simplex(v);
    Real s = std::accumulate(p.begin(), p.end(), Real(0));
    CHECK(std::abs(s - 1.0) <= 1e-12);
    for (Real x : p) CHECK(x >= 0.0);
    auto pp = project_to_simplex(p);
    CHECK(linf(p, pp) <= 1e-12);
  }
}

TEST_CASE("oracle agrees with the closed form") {
  auto w = qp_oracle({0.9, 0.5, 0.1});
  auto c = solve_weights({0.9, 0.5, 0.1});
  CHECK(linf(w, c) <= 1e-6);

  auto u = qp_oracle({0.4, 0.4, 0.4, 0.4});
  for (Real wi : u) CHECK(wi == doctest::Approx(0.25).epsilon(1e-9));

  Rng rng(555);
  Real worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(5));
    auto g = random_signals(n, rng);
    worst = std::max(worst, linf(qp_oracle(g), solve_weights(g)));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("signal normalization") {
  CHECK(normalize_signal(0.0) == 0.0);
  CHECK(normalize_signal(1.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(normalize_signal(1e6) < 1.0);
  Rng rng(8);
  Real prev_l = 0, prev_g = normalize_signal(0.0);
  for (int i = 0; i < 100; ++i) {
    Real l = prev_l + rng.uniform() + 1e-6;
    Real g = normalize_signal(l);
    CHECK(g > prev_g);
    CHECK(g < 1.0);
    prev_l = l;
    prev_g = g;
  }
  CHECK_THROWS_AS(normalize_signal(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(normalize_signal(std::nan("")), std::invalid_argument);
}

TEST_CASE("aggregate loss value and gradient") {
  std::vector<Tensor> losses = {Tensor::from_values({1}, {1.0}), Tensor::from_values({1}, {2.0}),
                                Tensor::from_values({1}, {3.0})};
  CHECK(aggregate_loss(losses, {0.5, 0.3, 0.2}).scalar() == doctest::Approx(1.7).epsilon(1e-14));
  CHECK(aggregate_loss_value({1.0, 2.0, 3.0}, {0.5, 0.3, 0.2}) ==
        doctest::Approx(1.7).epsilon(1e-14));

  // uniform weights -> mean; one-hot -> that loss
  CHECK(aggregate_loss_value({3.0, 6.0, 9.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}) ==
        doctest::Approx(6.0).epsilon(1e-12));
  CHECK(aggregate_loss_value({3.0, 6.0, 9.0}, {0.0, 1.0, 0.0}) ==
        doctest::Approx(6.0).epsilon(1e-14));

  CHECK_THROWS_AS(aggregate_loss(losses, {0.5, 0.5}), std::invalid_argument);

  // gradient of the aggregate w.r.t. each task loss equals its weight
  Tensor a = Tensor::from_values({1}, {1.0});
  Tensor b = Tensor::from_values({1}, {2.0});
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  Tensor total = aggregate_loss({a, b}, {0.25, 0.75});
  total.backward();
  CHECK(a.grad()[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(b.grad()[0] == doctest::Approx(0.75).epsilon(1e-14));
}
