#pragma once

// Seeded generators for property tests.

#include <cstdint>
#include <random>
#include <vector>

#include "kqm/exact.hpp"
#include "kqm/graph.hpp"
#include "kqm/wcompops.hpp"

namespace kqm::testing {

using Rng = std::mt19937_64;

inline long long uniform(Rng& rng, long long lo, long long hi) {
  return std::uniform_int_distribution<long long>(lo, hi)(rng);
}

/// Positive rational p/q with p in [1, num_max], q in [1, den_max].
inline Rational positive_rational(Rng& rng, long long num_max = 9, long long den_max = 4) {
  return Rational(uniform(rng, 1, num_max), uniform(rng, 1, den_max));
}

inline Rational signed_rational(Rng& rng, long long num_max = 9, long long den_max = 4) {
  return Rational(uniform(rng, -num_max, num_max), uniform(rng, 1, den_max));
}

inline Poly random_poly(Rng& rng, int degree) {
  std::vector<Rational> c;
  for (int i = 0; i <= degree; ++i) c.push_back(signed_rational(rng));
  if (c.back() == 0) c.back() = 1;
  return Poly(std::move(c));
}

/// A polynomial of degree <= degree that is positive at every integer >= from.
inline Poly positive_poly(Rng& rng, int degree, long long from) {
  for (;;) {
    std::vector<Node> nodes;
    for (int n = 0; n <= degree; ++n) nodes.emplace_back(from + n, positive_rational(rng));
    Poly p = interpolate(nodes);
    if (positive_from(p, from)) return p;
  }
}

inline std::vector<int> random_etas(Rng& rng, int kappa, int max_eta = 2) {
  for (;;) {
    std::vector<int> etas;
    for (int r = 0; r < kappa; ++r) etas.push_back(static_cast<int>(uniform(rng, 0, max_eta)));
    for (int e : etas)
      if (e > 0) return etas;
  }
}

/// Branch rule whose masses are polynomial of degree <= degree from depth poly_from on.
inline graph::BranchRule random_branch(Rng& rng, int degree, long long poly_from) {
  graph::BranchRule b;
  const long long prefix = uniform(rng, 0, poly_from - 1);
  for (long long j = 1; j <= prefix; ++j) b.prefix.push_back(positive_rational(rng));
  const int d = static_cast<int>(uniform(rng, 0, std::max(degree, 0)));
  b.tail = positive_poly(rng, d, prefix + 1);
  return b;
}

/// Masses on a random graph; every branch is polynomial of degree <= degree
/// from depth k+1 on. Circuit masses are random unless `with_circuit` is false.
inline graph::MeasureModel random_model(Rng& rng, int kappa, int degree, int k, bool with_circuit = true,
                                        int max_eta = 2) {
  graph::MeasureModel mu;
  mu.g = graph::CircuitGraph{kappa, random_etas(rng, kappa, max_eta)};
  mu.branches.resize(static_cast<std::size_t>(kappa));
  for (int r = 1; r <= kappa; ++r)
    for (int i = 1; i <= mu.g.eta(r); ++i) mu.branches[static_cast<std::size_t>(r - 1)].push_back(random_branch(rng, degree, k + 1));
  if (with_circuit)
    for (int r = 1; r <= kappa; ++r) mu.circuit_masses.push_back(positive_rational(rng));
  return mu;
}

/// Positive weight with random prefixes; branch tails are `tail` unless randomized.
inline wcompops::WeightFunction random_weight(Rng& rng, const graph::CircuitGraph& g, bool random_tails = false) {
  auto pi = wcompops::WeightFunction::unit(g);
  for (auto& v : pi.circuit_values) v = positive_rational(rng, 5, 3);
  for (auto& per_r : pi.branches)
    for (auto& b : per_r) {
      const long long len = uniform(rng, 0, 3);
      for (long long n = 0; n < len; ++n) b.prefix.push_back(positive_rational(rng, 5, 3));
      if (random_tails) b.tail = positive_rational(rng, 5, 3);
    }
  return pi;
}

struct AffineBranch {
  Rational level1, c, d;
};

inline graph::BranchRule affine_rule(const AffineBranch& b) {
  // mu(x_{i,j}) = c + d (j - 2) for j >= 2
  return graph::BranchRule{{b.level1}, Poly({b.c - 2 * b.d, b.d})};
}

/// Random affine branch data satisfying the kappa = 2 or 4 level-one constraint.
inline graph::MeasureModel affine_model(Rng& rng, int kappa) {
  for (;;) {
    const auto etas = random_etas(rng, kappa);
    std::vector<std::vector<AffineBranch>> data(static_cast<std::size_t>(kappa));
    for (int r = 1; r <= kappa; ++r)
      for (int i = 1; i <= etas[static_cast<std::size_t>(r - 1)]; ++i)
        data[static_cast<std::size_t>(r - 1)].push_back(
            {positive_rational(rng), positive_rational(rng),
             uniform(rng, 0, 2) == 0 ? Rational(0) : positive_rational(rng)});
    auto sum = [&](int r, auto field) {
      Rational acc = 0;
      for (const auto& b : data[static_cast<std::size_t>(r - 1)]) acc += b.*field;
      return acc;
    };
    const auto A = [&](int r) { return sum(r, &AffineBranch::level1); };
    const auto c = [&](int r) { return sum(r, &AffineBranch::c); };
    const auto d = [&](int r) { return sum(r, &AffineBranch::d); };
    if (kappa == 2 || kappa == 4) {
      // repair one level-one mass so the linear constraint holds
      std::vector<Rational> coef;
      Rational rhs;
      if (kappa == 2) {
        coef = {1, 1};
        rhs = c(1) + c(2);
      } else {
        coef = {-3, 3, -1, 1};
        rhs = -2 * c(1) + d(1) + c(2) + c(4) - d(4);
      }
      int fix = 0;
      for (int r = 1; r <= kappa && !fix; ++r)
        if (!data[static_cast<std::size_t>(r - 1)].empty()) fix = r;
      Rational lhs = 0;
      for (int r = 1; r <= kappa; ++r) lhs += coef[static_cast<std::size_t>(r - 1)] * A(r);
      auto& target = data[static_cast<std::size_t>(fix - 1)].front().level1;
      target += (rhs - lhs) / coef[static_cast<std::size_t>(fix - 1)];
      if (target <= 0) continue;
    }
    graph::MeasureModel mu;
    mu.g = graph::CircuitGraph{kappa, etas};
    mu.branches.resize(static_cast<std::size_t>(kappa));
    for (int r = 1; r <= kappa; ++r)
      for (const auto& b : data[static_cast<std::size_t>(r - 1)]) mu.branches[static_cast<std::size_t>(r - 1)].push_back(affine_rule(b));
    return mu;
  }
}

}  // namespace kqm::testing
