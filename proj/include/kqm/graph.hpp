#pragma once

// Directed graph with one circuit x_1..x_kappa and eta_r branches hanging off
// each circuit vertex x_r. The parent map phi sends x^r_{i,j+1} to x^r_{i,j},
// x^r_{i,1} to x_r and x_{r+1} to x_r (indices mod kappa, in 1..kappa).

#include <algorithm>
#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kqm/exact.hpp"

namespace kqm::graph {

/// Circuit vertex x_r (j == 0) or branch vertex x^r_{i,j} (j >= 1).
struct Vertex {
  int r = 1;
  int i = 0;
  long long j = 0;

  static Vertex circuit(int r) { return {r, 0, 0}; }
  static Vertex branch(int r, int i, long long j) { return {r, i, j}; }
  bool is_circuit() const { return j == 0; }
  long long depth() const { return j; }

  friend auto operator<=>(const Vertex&, const Vertex&) = default;
};

inline std::string to_string(const Vertex& v) {
  if (v.is_circuit()) return "x" + std::to_string(v.r);
  return "x^" + std::to_string(v.r) + "_{" + std::to_string(v.i) + "," + std::to_string(v.j) + "}";
}

struct CircuitGraph {
  int kappa = 1;
  std::vector<int> etas;  ///< eta_1 .. eta_kappa

  int eta(int r) const { return etas.at(static_cast<std::size_t>(r - 1)); }

  void validate() const {
    if (kappa < 1) throw DomainError("kappa must be >= 1");
    if (etas.size() != static_cast<std::size_t>(kappa))
      throw DomainError("expected " + std::to_string(kappa) + " branch counts, got " + std::to_string(etas.size()));
    if (std::any_of(etas.begin(), etas.end(), [](int e) { return e < 0; }))
      throw DomainError("branch counts must be non-negative");
    if (std::all_of(etas.begin(), etas.end(), [](int e) { return e == 0; }))
      throw DomainError("at least one circuit vertex must carry a branch");
  }

  bool contains(const Vertex& v) const {
    if (v.r < 1 || v.r > kappa) return false;
    if (v.is_circuit()) return v.i == 0;
    return v.j >= 1 && v.i >= 1 && v.i <= eta(v.r);
  }

  /// All vertices of branch depth <= depth, circuit first, then by (r, i, j).
  std::vector<Vertex> vertices(long long depth) const {
    std::vector<Vertex> out;
    for (int r = 1; r <= kappa; ++r) out.push_back(Vertex::circuit(r));
    for (int r = 1; r <= kappa; ++r)
      for (int i = 1; i <= eta(r); ++i)
        for (long long j = 1; j <= depth; ++j) out.push_back(Vertex::branch(r, i, j));
    return out;
  }
};

/// The decomposition p = Phi1(p) * kappa + Phi2(p) with Phi2(p) in [1, kappa].
struct PhiSplit {
  long long quotient;
  int residue;
  friend bool operator==(const PhiSplit&, const PhiSplit&) = default;
};

inline PhiSplit phi2(long long p, int kappa) {
  if (kappa < 1) throw DomainError("kappa must be >= 1");
  long long rem = p % kappa;
  if (rem <= 0) rem += kappa;  // residue in [1, kappa]
  return {(p - rem) / kappa, static_cast<int>(rem)};
}

/// Index of the circuit vertex x_{Phi2(p)}.
inline int circuit_index(long long p, int kappa) { return phi2(p, kappa).residue; }

/// Parent map.
inline Vertex phi(const Vertex& v, const CircuitGraph& g) {
  if (v.is_circuit()) return Vertex::circuit(circuit_index(v.r - 1, g.kappa));
  if (v.j == 1) return Vertex::circuit(v.r);
  return Vertex::branch(v.r, v.i, v.j - 1);
}

/// phi applied n times.
inline Vertex phi_iter(Vertex v, long long n, const CircuitGraph& g) {
  for (long long s = 0; s < n; ++s) v = phi(v, g);
  return v;
}

/// One-step preimage, obtained by inverting the three parent rules.
inline std::vector<Vertex> children(const Vertex& v, const CircuitGraph& g) {
  if (!v.is_circuit()) return {Vertex::branch(v.r, v.i, v.j + 1)};
  std::vector<Vertex> out{Vertex::circuit(circuit_index(v.r + 1, g.kappa))};
  for (int i = 1; i <= g.eta(v.r); ++i) out.push_back(Vertex::branch(v.r, i, 1));
  return out;
}

/// phi^{-p}({v}), enumerated level by level. Throws CapError if the set holds a
/// branch vertex deeper than depth_cap.
inline std::set<Vertex> preimage(const Vertex& v, long long p, const CircuitGraph& g, long long depth_cap) {
  if (p < 0) throw DomainError("preimage order must be non-negative");
  std::set<Vertex> level{v};
  for (long long step = 0; step < p; ++step) {
    std::set<Vertex> next;
    for (const auto& u : level)
      for (const auto& c : children(u, g)) next.insert(c);
    level = std::move(next);
  }
  for (const auto& u : level)
    if (u.depth() > depth_cap)
      throw CapError("preimage of " + to_string(v) + " at order " + std::to_string(p) + " reaches depth " +
                     std::to_string(u.depth()) + " > cap " + std::to_string(depth_cap));
  return level;
}

/// Masses along one branch: an explicit prefix mu(x_{i,1}) .. mu(x_{i,P})
/// followed by mu(x_{i,j}) = tail(j) for every j >= from_j = P + 1.
struct BranchRule {
  std::vector<Rational> prefix;
  Poly tail;

  long long from_j() const { return static_cast<long long>(prefix.size()) + 1; }

  Rational at(long long j) const {
    if (j < 1) throw RangeError("branch depth starts at 1");
    if (j <= static_cast<long long>(prefix.size())) return prefix[static_cast<std::size_t>(j - 1)];
    return tail(j);
  }

  void validate(const std::string& where) const {
    for (std::size_t n = 0; n < prefix.size(); ++n)
      if (prefix[n] <= 0) throw DomainError(where + ": mass at depth " + std::to_string(n + 1) + " is not positive");
    if (const auto pos = positive_from(tail, from_j()); !pos)
      throw DomainError(where + ": tail polynomial is not positive at depth " + std::to_string(pos.witness));
  }
};

/// Atomic measure on the graph. Circuit masses may be left empty when a solver
/// is to determine them.
struct MeasureModel {
  CircuitGraph g;
  std::vector<Rational> circuit_masses;          ///< mu(x_1) .. mu(x_kappa), or empty
  std::vector<std::vector<BranchRule>> branches;  ///< [r-1][i-1]

  bool has_circuit_masses() const { return !circuit_masses.empty(); }

  const BranchRule& rule(int r, int i) const {
    return branches.at(static_cast<std::size_t>(r - 1)).at(static_cast<std::size_t>(i - 1));
  }

  Rational mass(const Vertex& v) const {
    if (v.is_circuit()) {
      if (!has_circuit_masses()) throw PreconditionError("circuit masses are not specified");
      return circuit_masses.at(static_cast<std::size_t>(v.r - 1));
    }
    return rule(v.r, v.i).at(v.j);
  }

  /// sum_i mu(x^s_{i,j})
  Rational level_mass(int s, long long j) const {
    Rational acc = 0;
    for (int i = 1; i <= g.eta(s); ++i) acc += rule(s, i).at(j);
    return acc;
  }

  /// Deepest explicitly stored branch mass.
  long long max_prefix_depth() const {
    long long d = 0;
    for (const auto& per_r : branches)
      for (const auto& b : per_r) d = std::max<long long>(d, static_cast<long long>(b.prefix.size()));
    return d;
  }

  void validate() const {
    g.validate();
    if (branches.size() != static_cast<std::size_t>(g.kappa))
      throw DomainError("branch rules must be grouped by circuit vertex");
    for (int r = 1; r <= g.kappa; ++r) {
      if (branches[static_cast<std::size_t>(r - 1)].size() != static_cast<std::size_t>(g.eta(r)))
        throw DomainError("circuit vertex " + std::to_string(r) + " declares " + std::to_string(g.eta(r)) +
                          " branches but " + std::to_string(branches[static_cast<std::size_t>(r - 1)].size()) +
                          " rules were given");
      for (int i = 1; i <= g.eta(r); ++i)
        rule(r, i).validate("branch (" + std::to_string(r) + "," + std::to_string(i) + ")");
    }
    if (has_circuit_masses()) {
      if (circuit_masses.size() != static_cast<std::size_t>(g.kappa))
        throw DomainError("expected " + std::to_string(g.kappa) + " circuit masses");
      for (std::size_t r = 0; r < circuit_masses.size(); ++r)
        if (circuit_masses[r] <= 0) throw DomainError("circuit mass of x" + std::to_string(r + 1) + " is not positive");
    }
  }

  MeasureModel with_circuit_masses(std::vector<Rational> masses) const {
    MeasureModel out = *this;
    out.circuit_masses = std::move(masses);
    return out;
  }

  MeasureModel scaled(const Rational& factor) const {
    MeasureModel out = *this;
    for (auto& v : out.circuit_masses) v *= factor;
    for (auto& per_r : out.branches)
      for (auto& b : per_r) {
        for (auto& v : b.prefix) v *= factor;
        b.tail = factor * b.tail;
      }
    return out;
  }
};

/// mu(x_{Phi2(p+r)}) + sum_{j=1}^{p} sum_{s : Phi2(s+j) = Phi2(p+r)} sum_i mu(x^s_{i,j}),
/// i.e. mu(phi^{-p}({x_r})) written out index by index.
inline Rational circuit_preimage_mass(int r, long long p, const MeasureModel& mu) {
  const int kappa = mu.g.kappa;
  const int target = circuit_index(p + r, kappa);
  Rational acc = mu.mass(Vertex::circuit(target));
  for (long long j = 1; j <= p; ++j)
    for (int s = 1; s <= kappa; ++s)
      if (circuit_index(s + j, kappa) == target) acc += mu.level_mass(s, j);
  return acc;
}

/// Radon-Nikodym derivative of mu o phi^{-p} from its closed form.
inline Rational h_p_closed(const Vertex& v, long long p, const MeasureModel& mu) {
  if (p < 0) throw DomainError("order must be non-negative");
  if (p == 0) return 1;
  if (!v.is_circuit()) return mu.mass(Vertex::branch(v.r, v.i, v.j + p)) / mu.mass(v);
  return circuit_preimage_mass(v.r, p, mu) / mu.mass(v);
}

/// Same derivative computed as mu(phi^{-p}({v})) / mu({v}) by enumeration.
inline Rational h_p_oracle(const Vertex& v, long long p, const MeasureModel& mu, long long depth_cap) {
  Rational total = 0;
  for (const auto& y : preimage(v, p, mu.g, depth_cap)) total += mu.mass(y);
  return total / mu.mass(v);
}

/// Exact sup_{j >= 1} factor(j) * a_{j+1} / a_j along a branch, where
/// factor(j) is constant for j > factor_prefix.size(). The polynomial tail
/// makes the ratio tend to 1, so a finite window plus a positivity
/// certificate on factor * a(x) * M - factor * a(x+1) pins the supremum.
inline Rational branch_ratio_sup(const BranchRule& b, const std::vector<Rational>& factor_prefix = {},
                                 const Rational& factor_tail = 1) {
  auto factor = [&](long long j) {
    return j <= static_cast<long long>(factor_prefix.size()) ? factor_prefix[static_cast<std::size_t>(j - 1)]
                                                             : factor_tail;
  };
  const long long settled = std::max<long long>(b.from_j(), static_cast<long long>(factor_prefix.size()) + 1);
  Rational best = 0;
  for (long long j = 1; j < settled; ++j) best = std::max(best, factor(j) * b.at(j + 1) / b.at(j));
  if (b.tail.degree() <= 0) return std::max(best, factor_tail);
  // For j >= settled the ratio is factor_tail * tail(j+1)/tail(j).
  long long window = 16;
  for (;;) {
    Rational window_best = best;
    for (long long j = settled; j < settled + window; ++j)
      window_best = std::max(window_best, factor_tail * b.tail(j + 1) / b.tail(j));
    // tail(j+1) * factor_tail <= window_best * tail(j) for all j >= settled + window ?
    const Poly gap = window_best * b.tail - factor_tail * b.tail.shifted(1);
    if (gap.is_zero() || positive_from(gap, settled + window)) return window_best;
    window *= 2;
  }
}

/// The bound max_r { sum_i mu(x^r_{i,1}), sup ratios } controlling ||h||_oo.
inline Rational measure_bound(const MeasureModel& mu) {
  Rational best = 0;
  for (int r = 1; r <= mu.g.kappa; ++r) {
    best = std::max(best, mu.level_mass(r, 1));
    for (int i = 1; i <= mu.g.eta(r); ++i) best = std::max(best, branch_ratio_sup(mu.rule(r, i)));
  }
  return best;
}

/// Graphviz description of the depth-capped graph, one edge x -> phi(x) per vertex.
inline std::string to_dot(const CircuitGraph& g, long long depth) {
  std::ostringstream out;
  out << "digraph circuit {\n  rankdir=LR;\n";
  for (const auto& v : g.vertices(depth)) {
    out << "  \"" << to_string(v) << "\"" << (v.is_circuit() ? " [shape=doublecircle]" : "") << ";\n";
  }
  for (const auto& v : g.vertices(depth))
    out << "  \"" << to_string(v) << "\" -> \"" << to_string(phi(v, g)) << "\";\n";
  out << "}\n";
  return out.str();
}

}  // namespace kqm::graph
