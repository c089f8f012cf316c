#pragma once

// Weighted composition operators W f = pi * (f o phi) on the one-circuit graph.

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kqm/compops.hpp"
#include "kqm/exact.hpp"
#include "kqm/graph.hpp"

namespace kqm::wcompops {

using compops::BranchCheck;
using compops::Infeasible;
using compops::MassSolutionFamily;
using compops::SolveResult;
using graph::CircuitGraph;
using graph::MeasureModel;
using graph::Vertex;

/// pi along one branch: explicit values at depths 1..P, then a constant.
struct BranchWeight {
  std::vector<Rational> prefix;
  Rational tail = 1;

  Rational at(long long j) const {
    if (j < 1) throw RangeError("branch depth starts at 1");
    if (j <= static_cast<long long>(prefix.size())) return prefix[static_cast<std::size_t>(j - 1)];
    return tail;
  }
  long long settled_from() const { return static_cast<long long>(prefix.size()) + 1; }
};

/// Positive rational weight pi with a finite description.
struct WeightFunction {
  std::vector<Rational> circuit_values;          ///< pi(x_1) .. pi(x_kappa)
  std::vector<std::vector<BranchWeight>> branches;  ///< [r-1][i-1]

  static WeightFunction unit(const CircuitGraph& g) {
    WeightFunction w;
    w.circuit_values.assign(static_cast<std::size_t>(g.kappa), Rational(1));
    for (int r = 1; r <= g.kappa; ++r) w.branches.emplace_back(static_cast<std::size_t>(g.eta(r)));
    return w;
  }

  const BranchWeight& branch(int r, int i) const {
    return branches.at(static_cast<std::size_t>(r - 1)).at(static_cast<std::size_t>(i - 1));
  }

  Rational value(const Vertex& v) const {
    if (v.is_circuit()) return circuit_values.at(static_cast<std::size_t>(v.r - 1));
    return branch(v.r, v.i).at(v.j);
  }

  /// prod_{s=1}^{j} pi(x^r_{i,s})^2
  Rational branch_product_sq(int r, int i, long long j) const {
    Rational acc = 1;
    const BranchWeight& b = branch(r, i);
    for (long long s = 1; s <= j; ++s) {
      const Rational v = b.at(s);
      acc *= v * v;
    }
    return acc;
  }

  /// prod_{t=0}^{len-1} pi(x_{Phi2(u-t)})^2, the circuit leg of an orbit starting at x_{Phi2(u)}.
  Rational circuit_product_sq(long long u, long long len, int kappa) const {
    Rational acc = 1;
    for (long long t = 0; t < len; ++t) {
      const Rational& v = circuit_values[static_cast<std::size_t>(graph::circuit_index(u - t, kappa) - 1)];
      acc *= v * v;
    }
    return acc;
  }

  void validate(const CircuitGraph& g) const {
    if (circuit_values.size() != static_cast<std::size_t>(g.kappa))
      throw DomainError("weight needs " + std::to_string(g.kappa) + " circuit values");
    for (const auto& v : circuit_values)
      if (v <= 0) throw DomainError("weight values must be positive");
    if (branches.size() != static_cast<std::size_t>(g.kappa)) throw DomainError("weight branches must be grouped by circuit vertex");
    for (int r = 1; r <= g.kappa; ++r) {
      if (branches[static_cast<std::size_t>(r - 1)].size() != static_cast<std::size_t>(g.eta(r)))
        throw DomainError("weight for circuit vertex " + std::to_string(r) + " has the wrong number of branches");
      for (const auto& b : branches[static_cast<std::size_t>(r - 1)]) {
        if (b.tail <= 0) throw DomainError("weight values must be positive");
        for (const auto& v : b.prefix)
          if (v <= 0) throw DomainError("weight values must be positive");
      }
    }
  }

  bool is_unit() const {
    for (const auto& v : circuit_values)
      if (v != 1) return false;
    for (const auto& per_r : branches)
      for (const auto& b : per_r) {
        if (b.tail != 1) return false;
        for (const auto& v : b.prefix)
          if (v != 1) return false;
      }
    return true;
  }
};

/// pi_p(v) = prod_{q=0}^{p-1} pi(phi^q(v)), unsquared.
inline Rational pi_p(const Vertex& v, long long p, const WeightFunction& pi, const CircuitGraph& g) {
  if (p < 0) throw DomainError("order must be non-negative");
  Rational acc = 1;
  Vertex u = v;
  for (long long q = 0; q < p; ++q) {
    acc *= pi.value(u);
    u = graph::phi(u, g);
  }
  return acc;
}

// --- conditional expectations ------------------------------------------------

/// F_p on every vertex of depth <= depth, where E_p(|pi_p|^2) = F_p o phi^p.
struct CondExpTable {
  long long p = 0;
  std::map<Vertex, Rational> values;
};

/// sum over phi^{-q}({x_r}) of |pi_q|^2 mu, from the display: the circuit
/// preimage x_{Phi2(q+r)} plus the branch vertices x^s_{i,j} with
/// Phi2(s+j) = Phi2(q+r), j <= q.
inline Rational weighted_preimage_mass(int r, long long q, const MeasureModel& mu, const WeightFunction& pi) {
  const int kappa = mu.g.kappa;
  const int target = graph::circuit_index(q + r, kappa);
  Rational acc = pi.circuit_product_sq(q + r, q, kappa) * mu.mass(Vertex::circuit(target));
  for (long long j = 1; j <= q; ++j)
    for (int s = 1; s <= kappa; ++s) {
      if (graph::circuit_index(s + j, kappa) != target) continue;
      const Rational leg = pi.circuit_product_sq(s, q - j, kappa);
      for (int i = 1; i <= mu.g.eta(s); ++i)
        acc += pi.branch_product_sq(s, i, j) * leg * mu.mass(Vertex::branch(s, i, j));
    }
  return acc;
}

/// Closed form: K^r_{i,j+p} on branch vertices, K^r_p on circuit vertices.
/// The circuit display assumes p >= kappa.
inline CondExpTable cond_exp(long long p, const MeasureModel& mu, const WeightFunction& pi, long long depth) {
  if (p < mu.g.kappa) throw PreconditionError("closed-form conditional expectation needs p >= kappa");
  CondExpTable table;
  table.p = p;
  for (const auto& v : mu.g.vertices(depth)) {
    if (v.is_circuit()) {
      table.values[v] = weighted_preimage_mass(v.r, p, mu, pi) / graph::circuit_preimage_mass(v.r, p, mu);
    } else {
      // |pi_p|^2(x^r_{i,j+p}) = prod_{t=j+1}^{j+p} pi(x^r_{i,t})^2
      table.values[v] = pi.branch_product_sq(v.r, v.i, v.j + p) / pi.branch_product_sq(v.r, v.i, v.j);
    }
  }
  return table;
}

/// Same table from the atoms phi^{-p}({v}): (1/mu(A)) sum_{y in A} pi_p(y)^2 mu(y).
inline CondExpTable atom_oracle(long long p, const MeasureModel& mu, const WeightFunction& pi, long long depth) {
  CondExpTable table;
  table.p = p;
  const long long cap = depth + p;
  for (const auto& v : mu.g.vertices(depth)) {
    Rational weighted = 0, mass = 0;
    for (const auto& y : graph::preimage(v, p, mu.g, cap)) {
      const Rational w = pi_p(y, p, pi, mu.g);
      weighted += w * w * mu.mass(y);
      mass += mu.mass(y);
    }
    table.values[v] = weighted / mass;
  }
  return table;
}

/// (h_q F_q)(x_r); closed form for q >= kappa, atom enumeration below.
inline Rational hF(int r, long long q, const MeasureModel& mu, const WeightFunction& pi) {
  if (q == 0) return 1;
  const Vertex v = Vertex::circuit(r);
  if (q >= mu.g.kappa) return weighted_preimage_mass(r, q, mu, pi) / mu.mass(v);
  Rational acc = 0;
  for (const auto& y : graph::preimage(v, q, mu.g, q)) {
    const Rational w = pi_p(y, q, pi, mu.g);
    acc += w * w * mu.mass(y);
  }
  return acc / mu.mass(v);
}

// --- criterion -------------------------------------------------------------------

namespace detail {

/// Squared weights pi(x^r_{i,j+1})^2 indexed by j, as used by branch_ratio_sup.
inline std::vector<Rational> shifted_squares(const BranchWeight& b) {
  std::vector<Rational> out;
  for (std::size_t n = 1; n < b.prefix.size(); ++n) out.push_back(b.prefix[n] * b.prefix[n]);
  return out;
}

}  // namespace detail

/// ||W||^2 = sup_v (h_1 F_1)(v), exactly.
inline Rational weighted_bound(const MeasureModel& mu, const WeightFunction& pi) {
  Rational best = 0;
  for (int r = 1; r <= mu.g.kappa; ++r) {
    const int next = graph::circuit_index(r + 1, mu.g.kappa);
    const Rational pn = pi.circuit_values[static_cast<std::size_t>(next - 1)];
    Rational acc = pn * pn * mu.mass(Vertex::circuit(next));
    for (int i = 1; i <= mu.g.eta(r); ++i) {
      const Rational p1 = pi.branch(r, i).at(1);
      acc += p1 * p1 * mu.mass(Vertex::branch(r, i, 1));
    }
    best = std::max(best, acc / mu.mass(Vertex::circuit(r)));
    for (int i = 1; i <= mu.g.eta(r); ++i) {
      const BranchWeight& b = pi.branch(r, i);
      best = std::max(best, graph::branch_ratio_sup(mu.rule(r, i), detail::shifted_squares(b), b.tail * b.tail));
    }
  }
  return best;
}

/// Branch condition on vertices x^r_{i,j}: n -> rho(n) mu(x^r_{i,n}) is a
/// polynomial of degree <= max_degree for n >= k+1, with
/// rho(n) = prod_{s=1}^{n} pi(x^r_{i,s})^2. A tail weight other than 1 makes
/// the sequence exponential, so the check fails with a witness.
inline BranchCheck check_branch_weighted(const MeasureModel& mu, const WeightFunction& pi, int r, int i, int k,
                                         int max_degree) {
  const graph::BranchRule& rule = mu.rule(r, i);
  const BranchWeight& b = pi.branch(r, i);
  const long long settle = std::max(rule.from_j(), b.settled_from());
  std::optional<Poly> tail;
  if (b.tail == 1) tail = pi.branch_product_sq(r, i, settle) * rule.tail;
  auto value = [&](long long n) { return pi.branch_product_sq(r, i, n) * rule.at(n); };
  auto out = compops::detail::check_polynomial_sequence(value, k + 1, max_degree, settle, tail);
  out.r = r;
  out.i = i;
  return out;
}

/// The branch sequence exactly as printed in the weighted criterion,
/// n -> pi_k(x^r_{i,n})^2 mu(x^r_{i,n}) for n >= k+1. Reported for comparison only.
inline BranchCheck check_branch_literal(const MeasureModel& mu, const WeightFunction& pi, int r, int i, int k,
                                        int max_degree) {
  const graph::BranchRule& rule = mu.rule(r, i);
  const BranchWeight& b = pi.branch(r, i);
  const long long settle = std::max(rule.from_j(), b.settled_from() + k);
  Rational factor = 1;
  for (int s = 0; s < k; ++s) factor *= b.tail * b.tail;
  auto value = [&](long long n) {
    return pi.branch_product_sq(r, i, n) / pi.branch_product_sq(r, i, n - k) * rule.at(n);
  };
  auto out = compops::detail::check_polynomial_sequence(value, k + 1, max_degree, settle, factor * rule.tail);
  out.r = r;
  out.i = i;
  return out;
}

struct WeightedKqmReport {
  std::vector<BranchCheck> branches;          ///< decides the verdict
  std::vector<BranchCheck> literal_branches;  ///< printed form of the branch sequence
  std::vector<Rational> circuit_defects;
  Rational bound = 0;

  bool branches_ok() const {
    return std::all_of(branches.begin(), branches.end(), [](const BranchCheck& b) { return b.ok; });
  }
  bool circuit_ok() const {
    return std::all_of(circuit_defects.begin(), circuit_defects.end(), [](const Rational& d) { return d == 0; });
  }
  bool is_kqm() const { return branches_ok() && circuit_ok(); }
};

inline Rational weighted_circuit_defect(const MeasureModel& mu, const WeightFunction& pi, int r, int m, int k) {
  Rational acc = 0;
  for (int p = 0; p <= m; ++p) acc += alt_binomial(m, p) * hF(r, p + k, mu, pi);
  return acc;
}

inline WeightedKqmReport is_kqm_weighted(const MeasureModel& mu, const WeightFunction& pi, int m, int k,
                                         std::optional<Rational> bound = std::nullopt) {
  if (m < 1 || k < 1) throw DomainError("is_kqm_weighted needs m, k >= 1");
  mu.validate();
  pi.validate(mu.g);
  if (!mu.has_circuit_masses()) throw PreconditionError("is_kqm_weighted needs circuit masses");
  WeightedKqmReport report;
  report.bound = weighted_bound(mu, pi);
  if (bound && report.bound > *bound)
    throw BoundednessError("weighted bound " + to_string(report.bound) + " exceeds " + to_string(*bound));
  for (int r = 1; r <= mu.g.kappa; ++r)
    for (int i = 1; i <= mu.g.eta(r); ++i) {
      report.branches.push_back(check_branch_weighted(mu, pi, r, i, k, m - 1));
      report.literal_branches.push_back(check_branch_literal(mu, pi, r, i, k, m - 1));
    }
  for (int r = 1; r <= mu.g.kappa; ++r) report.circuit_defects.push_back(weighted_circuit_defect(mu, pi, r, m, k));
  return report;
}

// --- circuit solver ----------------------------------------------------------------

/// Linear system for the circuit masses under pi, with the same column order
/// as the unweighted system (column c holds mu(x_{Phi2(k+c)})).
inline compops::CirculantSystem assemble_weighted_system(const MeasureModel& branches, const WeightFunction& pi, int m,
                                                         int k) {
  const int kappa = branches.g.kappa;
  compops::CirculantSystem sys;
  sys.kappa = kappa;
  sys.m = m;
  sys.k = k;
  sys.a.assign(static_cast<std::size_t>(kappa), Vector(static_cast<std::size_t>(kappa), Rational(0)));
  sys.b.assign(static_cast<std::size_t>(kappa), Rational(0));
  // Branch part of weighted_preimage_mass without the circuit term.
  auto branch_part = [&](int r, long long q) {
    const int target = graph::circuit_index(q + r, kappa);
    Rational acc = 0;
    for (long long j = 1; j <= q; ++j)
      for (int s = 1; s <= kappa; ++s) {
        if (graph::circuit_index(s + j, kappa) != target) continue;
        const Rational leg = pi.circuit_product_sq(s, q - j, kappa);
        for (int i = 1; i <= branches.g.eta(s); ++i)
          acc += pi.branch_product_sq(s, i, j) * leg * branches.mass(Vertex::branch(s, i, j));
      }
    return acc;
  };
  for (int r = 1; r <= kappa; ++r) {
    Rational rhs = 0;
    for (int p = 0; p <= m; ++p) {
      const long long q = p + k;
      const int col = graph::circuit_index(r + p, kappa);
      sys.a[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(col - 1)] +=
          alt_binomial(m, p) * pi.circuit_product_sq(q + r, q, kappa);
      rhs -= alt_binomial(m, p) * branch_part(r, q);
    }
    sys.b[static_cast<std::size_t>(r - 1)] = rhs;
  }
  for (int c = 1; c <= kappa; ++c) sys.unknown_labels.push_back(graph::circuit_index(k + c, kappa));
  return sys;
}

/// Circuit masses making W k-quasi-m-isometric, for kappa > m >= 2 and branch
/// data satisfying the weighted branch condition. The kernel direction is
/// whatever elimination finds; it is the all-ones vector only for special pi.
inline SolveResult solve_weighted_circuit(const MeasureModel& branches, const WeightFunction& pi, int m, int k) {
  const int kappa = branches.g.kappa;
  if (!(kappa > m && m >= 2)) throw PreconditionError("solve_weighted_circuit needs kappa > m >= 2");
  if (k < 1) throw PreconditionError("solve_weighted_circuit needs k >= 1");
  MeasureModel probe = branches;
  probe.circuit_masses.clear();
  probe.validate();
  pi.validate(probe.g);
  for (int r = 1; r <= kappa; ++r)
    for (int i = 1; i <= probe.g.eta(r); ++i)
      if (!check_branch_weighted(probe, pi, r, i, k, m - 1).ok)
        throw PreconditionError("branch (" + std::to_string(r) + "," + std::to_string(i) +
                                ") fails the weighted branch condition of degree <= m-1");
  const auto sys = assemble_weighted_system(probe, pi, m, k);
  return compops::detail::family_from_system(sys.a, sys.b, [&](const Vector& x) { return sys.to_masses(x); });
}

// --- single-branch completion ------------------------------------------------------

struct WeightedBranchCompletion {
  MeasureModel model;
  WeightFunction pi;
  Poly nu;        ///< rho(n) mu(x^1_{1,n}) = nu(n) for n >= k+1
  int order = 0;  ///< W is a k-quasi-order-isometry
  int k = 0;
};

namespace detail {

/// The polynomial solution of P(q) - c P(q-1) = rhs(q), for c != 1.
inline Poly solve_difference(const Poly& rhs, const Rational& c) {
  Poly rest = rhs, out;
  while (!rest.is_zero()) {
    const int n = rest.degree();
    std::vector<Rational> mono(static_cast<std::size_t>(n) + 1, Rational(0));
    mono.back() = rest.leading() / (1 - c);
    const Poly term(std::move(mono));
    out = out + term;
    rest = rest - (term - c * term.shifted(Rational(-1)));
  }
  return out;
}

}  // namespace detail

/// kappa = 1, eta = 1: keeps mu(x^1_{1,n}) = b_n for n <= m and extends the
/// branch so that W is a k-quasi-(m+1)-isometry. With c = pi(x_1)^2:
///   c = 1  nu has degree <= m-1 and mu(x_1) is free;
///   c < 1  nu has degree <= m and mu(x_1) is forced by the circuit condition;
///   c > 1  no completion exists.
/// The branch weight must be 1 from some depth on.
inline WeightedBranchCompletion complete_single_branch_weighted(const std::vector<Rational>& b, const WeightFunction& pi,
                                                                int k, std::optional<Rational> circuit_mass = std::nullopt) {
  const int m = static_cast<int>(b.size());
  if (m < 1) throw DomainError("at least one initial mass is required");
  if (k < 1) throw DomainError("k must be >= 1");
  for (const auto& v : b)
    if (v <= 0) throw DomainError("initial masses must be positive");
  const CircuitGraph g{1, {1}};
  pi.validate(g);
  const BranchWeight& bw = pi.branch(1, 1);
  if (bw.tail != 1)
    throw InfeasibleError("branch weight tends to " + to_string(bw.tail) +
                          " != 1, so rho(n) mu(x_n) cannot be polynomial");
  const Rational c = pi.circuit_values[0] * pi.circuit_values[0];
  if (c > 1) throw InfeasibleError("pi(x_1)^2 = " + to_string(c) + " > 1 forces a negative circuit mass");

  auto rho = [&](long long n) { return pi.branch_product_sq(1, 1, n); };
  std::vector<Rational> prefix;
  for (int j = 1; j <= k; ++j) prefix.push_back(j <= m ? b[static_cast<std::size_t>(j - 1)] : Rational(1));

  // nu at depths k+1 .. k+d: known masses where given, the last given mass
  // otherwise; one more free value lifts the degree to d.
  const int d = c == 1 ? m - 1 : m;
  std::vector<Rational> data;
  for (int n = 1; n <= std::max(d, 1); ++n) {
    const long long depth = k + n;
    const Rational mass = depth <= m ? b[static_cast<std::size_t>(depth - 1)] : b.back();
    data.push_back(rho(depth) * mass);
  }
  Poly nu = d == 0 ? Poly::constant(data[0]) : lemma_extension(data).w;
  nu = nu.shifted(Rational(-(k + 1)));

  Rational mu1 = circuit_mass.value_or(1);
  if (c < 1) {
    // Nodes that must stay fixed: depths k+1 .. m.
    Poly r = Poly::constant(1);
    for (long long n = k + 1; n <= m; ++n) r = r * Poly::linear_root(Rational(n));
    if ((m - k) > 0 && (m - k) % 2 == 1) r = r * Poly::linear_root(Rational(2 * k + 1, 2));
    Rational past = 0;  // sum_{j<=k} c^{k-j} nu_j
    for (int j = 1; j <= k; ++j) past = past * c + rho(j) * prefix[static_cast<std::size_t>(j - 1)];
    const Rational pp0 = detail::solve_difference(nu, c)(k);
    const Rational ppr = detail::solve_difference(r, c)(k);
    Rational s = 0;
    if (pp0 - past <= 0) s = (past - pp0) / ppr + 1;
    nu = nu + s * r;
    Rational ck = 1;
    for (int j = 0; j < k; ++j) ck *= c;
    mu1 = (detail::solve_difference(nu, c)(k) - past) / ck;
    if (circuit_mass && *circuit_mass != mu1)
      throw InfeasibleError("the circuit mass is forced to " + to_string(mu1) + " when pi(x_1)^2 < 1");
  }
  if (mu1 <= 0) throw DomainError("circuit mass must be positive");
  if (const auto pos = positive_from(nu, k + 1); !pos)
    throw PositivityError("tail polynomial is not positive", pos.witness);

  // mu(x_n) = nu(n) / rho(n); rho is constant from settle on.
  const long long settle = std::max<long long>(k + 1, bw.settled_from());
  graph::BranchRule rule;
  rule.prefix = prefix;
  for (long long n = k + 1; n < settle; ++n) rule.prefix.push_back(nu(n) / rho(n));
  rule.tail = nu / rho(settle);

  WeightedBranchCompletion out;
  out.model.g = g;
  out.model.circuit_masses = {mu1};
  out.model.branches = {{rule}};
  out.model.validate();
  out.pi = pi;
  out.nu = nu;
  out.order = m + 1;
  out.k = k;
  return out;
}

}  // namespace kqm::wcompops
