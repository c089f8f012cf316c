#pragma once

// Composition operators C_phi f = f o phi on the one-circuit graph.

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kqm/exact.hpp"
#include "kqm/graph.hpp"

namespace kqm::compops {

using graph::BranchRule;
using graph::CircuitGraph;
using graph::MeasureModel;
using graph::Vertex;

/// Whether one branch sequence n -> value(n), n >= start, is a polynomial of
/// degree <= max_degree. `interpolant` is in the shifted variable j = n - start.
struct BranchCheck {
  int r = 0;
  int i = 0;
  bool ok = false;
  Poly interpolant;
  std::optional<long long> residual_at;  ///< first depth n where the sequence leaves the interpolant
  Rational residual = 0;                 ///< value(n) - interpolant(n - start) there
};

namespace detail {

/// The sequence equals `tail(n)` for every n >= settle (when a tail is given);
/// below that it is read through `value`. Without a tail the sequence is known
/// not to be polynomial and only a witness is searched for.
inline BranchCheck check_polynomial_sequence(const std::function<Rational(long long)>& value, long long start,
                                             int max_degree, long long settle, const std::optional<Poly>& tail) {
  BranchCheck out;
  if (max_degree < 0) {
    // Only the zero sequence qualifies; masses are positive.
    out.ok = false;
    out.residual_at = start;
    out.residual = value(start);
    return out;
  }
  std::vector<Node> nodes;
  for (long long n = start; n <= start + max_degree; ++n) nodes.emplace_back(n - start, value(n));
  out.interpolant = interpolate(nodes);
  auto mismatch = [&](long long n) -> bool {
    const Rational diff = value(n) - out.interpolant(n - start);
    if (diff == 0) return false;
    out.residual_at = n;
    out.residual = diff;
    return true;
  };
  const long long first_unchecked = start + max_degree + 1;
  for (long long n = first_unchecked; n < settle; ++n)
    if (mismatch(n)) return out;
  if (tail && *tail == out.interpolant.shifted(Rational(-start))) {
    out.ok = true;
    return out;
  }
  // Two distinct polynomials agree on at most max(deg) points; without a
  // polynomial tail the search window is a generous finite one.
  const long long from = std::max(settle, first_unchecked);
  const long long span = tail ? std::max<long long>(tail->degree(), max_degree) + 2 : 256;
  for (long long n = from; n < from + span; ++n)
    if (mismatch(n)) return out;
  return out;
}

}  // namespace detail

/// Branch hypothesis: n -> mu(x^r_{i,n}) is a polynomial of degree <= max_degree for n >= k+1.
inline BranchCheck check_branch(const MeasureModel& mu, int r, int i, int k, int max_degree) {
  const BranchRule& rule = mu.rule(r, i);
  auto out = detail::check_polynomial_sequence([&](long long n) { return rule.at(n); }, k + 1, max_degree,
                                               rule.from_j(), rule.tail);
  out.r = r;
  out.i = i;
  return out;
}

struct KqmReport {
  std::vector<BranchCheck> branches;
  std::vector<Rational> circuit_defects;  ///< indexed by r - 1
  Rational bound = 0;                     ///< the boundedness constant M that was certified

  bool branches_ok() const {
    return std::all_of(branches.begin(), branches.end(), [](const BranchCheck& b) { return b.ok; });
  }
  bool circuit_ok() const {
    return std::all_of(circuit_defects.begin(), circuit_defects.end(), [](const Rational& d) { return d == 0; });
  }
  bool is_kqm() const { return branches_ok() && circuit_ok(); }
};

/// sum_{p=0}^{m} (-1)^p C(m,p) h_{p+k}(x_r), from the closed form of h.
inline Rational circuit_defect(const MeasureModel& mu, int r, int m, int k) {
  Rational acc = 0;
  for (int p = 0; p <= m; ++p) acc += alt_binomial(m, p) * graph::h_p_closed(Vertex::circuit(r), p + k, mu);
  return acc;
}

/// k-quasi-m-isometry criterion: every branch is polynomial of degree <= m-2
/// from depth k+1 on, and every circuit defect vanishes.
inline KqmReport is_kqm(const MeasureModel& mu, int m, int k, std::optional<Rational> bound = std::nullopt) {
  if (m < 1 || k < 1) throw DomainError("is_kqm needs m, k >= 1");
  mu.validate();
  if (!mu.has_circuit_masses()) throw PreconditionError("is_kqm needs circuit masses");
  KqmReport report;
  report.bound = graph::measure_bound(mu);
  if (bound && report.bound > *bound)
    throw BoundednessError("measure bound " + to_string(report.bound) + " exceeds " + to_string(*bound));
  for (int r = 1; r <= mu.g.kappa; ++r)
    for (int i = 1; i <= mu.g.eta(r); ++i) report.branches.push_back(check_branch(mu, r, i, k, m - 2));
  for (int r = 1; r <= mu.g.kappa; ++r) report.circuit_defects.push_back(circuit_defect(mu, r, m, k));
  return report;
}

/// The linear system for the circuit masses. Column c holds the unknown
/// mu(x_{Phi2(k+c)}); row r is the circuit condition at x_r with every branch
/// term moved to the right-hand side.
struct CirculantSystem {
  int kappa = 0;
  int m = 0;
  int k = 0;
  Matrix a;
  Vector b;
  std::vector<int> unknown_labels;  ///< unknown_labels[c-1] = Phi2(k+c)

  /// Circuit masses mu(x_1..x_kappa) -> X.
  Vector to_unknowns(const Vector& masses) const {
    Vector x(static_cast<std::size_t>(kappa));
    for (int c = 1; c <= kappa; ++c)
      x[static_cast<std::size_t>(c - 1)] = masses[static_cast<std::size_t>(unknown_labels[static_cast<std::size_t>(c - 1)] - 1)];
    return x;
  }
  /// X -> circuit masses mu(x_1..x_kappa).
  Vector to_masses(const Vector& x) const {
    Vector masses(static_cast<std::size_t>(kappa));
    for (int c = 1; c <= kappa; ++c)
      masses[static_cast<std::size_t>(unknown_labels[static_cast<std::size_t>(c - 1)] - 1)] = x[static_cast<std::size_t>(c - 1)];
    return masses;
  }
};

/// Branch part of mu(phi^{-q}({x_r})): sum over j <= q and s with Phi2(s+j) = Phi2(q+r).
inline Rational branch_preimage_mass(const MeasureModel& mu, int r, long long q) {
  const int kappa = mu.g.kappa;
  const int target = graph::circuit_index(q + r, kappa);
  Rational acc = 0;
  for (long long j = 1; j <= q; ++j)
    for (int s = 1; s <= kappa; ++s)
      if (graph::circuit_index(s + j, kappa) == target) acc += mu.level_mass(s, j);
  return acc;
}

/// Coefficients a_p = (-1)^p C(m,p) for p <= m, 0 up to kappa-1. When
/// m >= kappa the coefficients wrap around the circuit and are summed.
inline Vector circulant_row(int kappa, int m) {
  Vector row(static_cast<std::size_t>(kappa), Rational(0));
  for (int p = 0; p <= m; ++p) row[static_cast<std::size_t>(p % kappa)] += alt_binomial(m, p);
  return row;
}

inline CirculantSystem assemble_circuit_system(const MeasureModel& mu, int m, int k) {
  const int kappa = mu.g.kappa;
  CirculantSystem sys;
  sys.kappa = kappa;
  sys.m = m;
  sys.k = k;
  const Vector first = circulant_row(kappa, m);
  sys.a.assign(static_cast<std::size_t>(kappa), Vector(static_cast<std::size_t>(kappa), Rational(0)));
  sys.b.assign(static_cast<std::size_t>(kappa), Rational(0));
  for (int r = 1; r <= kappa; ++r) {
    for (int c = 1; c <= kappa; ++c)
      sys.a[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(c - 1)] =
          first[static_cast<std::size_t>(((c - r) % kappa + kappa) % kappa)];
    Rational rhs = 0;
    for (int p = 0; p <= m; ++p) rhs -= alt_binomial(m, p) * branch_preimage_mass(mu, r, p + k);
    sys.b[static_cast<std::size_t>(r - 1)] = rhs;
  }
  for (int c = 1; c <= kappa; ++c) sys.unknown_labels.push_back(graph::circuit_index(k + c, kappa));
  return sys;
}

/// Affine family base + t * direction of circuit masses; every member with t
/// strictly inside (t_lower, t_upper) is entrywise positive. A zero direction
/// means the solution is unique.
struct MassSolutionFamily {
  Vector base;       ///< mu(x_1) .. mu(x_kappa)
  Vector direction;  ///< same indexing
  std::optional<Rational> t_lower;
  std::optional<Rational> t_upper;
  std::size_t kernel_dimension = 0;

  Vector member(const Rational& t) const {
    Vector out(base);
    for (std::size_t r = 0; r < out.size(); ++r) out[r] += t * direction[r];
    return out;
  }
  bool admits(const Rational& t) const {
    return (!t_lower || t > *t_lower) && (!t_upper || t < *t_upper);
  }
  Rational sample_t() const {
    if (t_lower && t_upper) return (*t_lower + *t_upper) / 2;
    if (t_lower) return *t_lower + 1;
    if (t_upper) return *t_upper - 1;
    return 0;
  }
  bool direction_is_all_ones() const {
    return std::all_of(direction.begin(), direction.end(), [](const Rational& v) { return v == 1; });
  }
};

struct Infeasible {
  std::string reason;
  Rational residual = 0;
};

using SolveResult = std::variant<MassSolutionFamily, Infeasible>;

namespace detail {

/// Positivity window for base + t * direction, or nullopt when empty.
inline std::optional<MassSolutionFamily> positive_family(Vector base, Vector direction, std::size_t kernel_dim) {
  MassSolutionFamily fam;
  fam.kernel_dimension = kernel_dim;
  for (std::size_t r = 0; r < base.size(); ++r) {
    if (direction[r] == 0) {
      if (base[r] <= 0) return std::nullopt;
      continue;
    }
    const Rational bound = -base[r] / direction[r];
    if (direction[r] > 0) {
      if (!fam.t_lower || bound > *fam.t_lower) fam.t_lower = bound;
    } else if (!fam.t_upper || bound < *fam.t_upper) {
      fam.t_upper = bound;
    }
  }
  if (fam.t_lower && fam.t_upper && *fam.t_lower >= *fam.t_upper) return std::nullopt;
  fam.base = std::move(base);
  fam.direction = std::move(direction);
  return fam;
}

/// Scales a kernel vector so its first non-zero entry is 1.
inline Vector normalized(Vector v) {
  for (const auto& x : v) {
    if (x != 0) {
      const Rational s = x;
      for (auto& y : v) y /= s;
      break;
    }
  }
  return v;
}

inline SolveResult family_from_system(const Matrix& a, const Vector& b,
                                      const std::function<Vector(const Vector&)>& to_masses) {
  const LinearSolution sol = solve_exact(a, b);
  if (!sol.consistent)
    return Infeasible{"circuit system is inconsistent (reduced row " + std::to_string(sol.bad_row + 1) + ")", sol.residual};
  Vector direction(b.size(), Rational(0));
  if (!sol.kernel.empty()) direction = to_masses(normalized(sol.kernel.front()));
  auto fam = positive_family(to_masses(sol.particular), direction, sol.kernel.size());
  if (!fam) return Infeasible{"no solution of the circuit system has all masses positive", 0};
  return *fam;
}

}  // namespace detail

/// Circuit masses making C_phi k-quasi-m-isometric, for kappa > m >= 2 and
/// branch masses that are polynomial of degree <= m-2 from depth k+1 on.
inline SolveResult solve_circuit(const MeasureModel& branches, int m, int k) {
  const int kappa = branches.g.kappa;
  if (!(kappa > m && m >= 2)) throw PreconditionError("solve_circuit needs kappa > m >= 2");
  if (k < 1) throw PreconditionError("solve_circuit needs k >= 1");
  MeasureModel probe = branches;
  probe.circuit_masses.clear();
  probe.validate();
  for (int r = 1; r <= kappa; ++r)
    for (int i = 1; i <= probe.g.eta(r); ++i)
      if (!check_branch(probe, r, i, k, m - 2).ok)
        throw PreconditionError("branch (" + std::to_string(r) + "," + std::to_string(i) +
                                ") is not polynomial of degree <= m-2 from depth k+1");
  const CirculantSystem sys = assemble_circuit_system(probe, m, k);
  return detail::family_from_system(sys.a, sys.b, [&](const Vector& x) { return sys.to_masses(x); });
}

// --- closed-form 1-quasi-3-isometry characterizations -------------------------

/// Per-circuit-vertex aggregates of affine branch data
/// mu(x^r_{i,1}) = level1, mu(x^r_{i,j+1}) = c + d (j - 1) for j >= 1.
struct AffineSums {
  Vector level1;  ///< sum_i mu(x^r_{i,1})
  Vector c;       ///< c^(r)
  Vector d;       ///< d^(r)
};

/// Reads the aggregates from a model whose branches store exactly one prefix
/// mass and an affine tail from depth 2.
inline AffineSums affine_sums(const MeasureModel& mu) {
  AffineSums out;
  for (int r = 1; r <= mu.g.kappa; ++r) {
    Rational a1 = 0, c = 0, d = 0;
    for (int i = 1; i <= mu.g.eta(r); ++i) {
      const BranchRule& b = mu.rule(r, i);
      const std::string where = "branch (" + std::to_string(r) + "," + std::to_string(i) + ")";
      if (b.prefix.size() != 1 || b.tail.degree() > 1)
        throw PreconditionError(where + " is not affine from depth 2 (one prefix mass, tail of degree <= 1)");
      const Rational ci = b.tail(2);
      const Rational di = b.tail(3) - b.tail(2);
      if (ci <= 0 || di < 0) throw PreconditionError(where + " needs c > 0 and d >= 0");
      a1 += b.prefix[0];
      c += ci;
      d += di;
    }
    out.level1.push_back(a1);
    out.c.push_back(c);
    out.d.push_back(d);
  }
  return out;
}

struct Constraint {
  std::string name;
  Rational lhs;
  Rational rhs;
  bool satisfied() const { return lhs == rhs; }
};

/// Circuit masses mu(x_r) = W(r) + t, W(x) = a x^2 + b x, for a 1-quasi-3-isometry.
struct Characterization {
  int kappa = 0;
  std::vector<Constraint> constraints;
  std::optional<Rational> a;         ///< determined for kappa = 3, 4
  std::optional<Rational> b;
  std::optional<Rational> three_a_plus_b;  ///< the only combination fixed when kappa = 2
  Poly w;                            ///< canonical W with t = 0 (a = 0 when kappa = 2)
  Rational t_lower;                  ///< masses are positive iff t > t_lower
  /// Values of the same quantities under the formulas exactly as published,
  /// kept for comparison; see README for which ones differ.
  std::optional<Rational> displayed_a;
  std::optional<Rational> displayed_b;
  std::optional<Rational> displayed_three_a_plus_b;

  Vector masses(const Rational& t) const {
    Vector out;
    for (int r = 1; r <= kappa; ++r) out.push_back(w(r) + t);
    return out;
  }
};

using CharacterizeResult = std::variant<Characterization, Infeasible>;

inline CharacterizeResult characterize_1q3(const MeasureModel& mu) {
  const int kappa = mu.g.kappa;
  if (kappa < 2 || kappa > 4) throw PreconditionError("closed forms exist for kappa = 2, 3, 4 only");
  {
    MeasureModel probe = mu;
    probe.circuit_masses.clear();
    probe.validate();
  }
  const AffineSums s = affine_sums(mu);
  auto A = [&](int r) { return s.level1[static_cast<std::size_t>(r - 1)]; };
  auto c = [&](int r) { return s.c[static_cast<std::size_t>(r - 1)]; };
  auto d = [&](int r) { return s.d[static_cast<std::size_t>(r - 1)]; };
  const Rational two_kappa = 2 * kappa;

  Characterization out;
  out.kappa = kappa;
  if (kappa == 2) {
    out.constraints.push_back({"level-one sum equals c1 + c2", A(1) + A(2), c(1) + c(2)});
    out.three_a_plus_b = (-4 * A(1) + 4 * A(2) + 2 * c(1) - 2 * c(2) - d(1) + d(2)) / two_kappa;
    out.displayed_three_a_plus_b = (7 * A(1) - 5 * c(1) + d(1) - 2 * c(2) - d(2)) / two_kappa;
    out.w = Poly(std::vector<Rational>{0, *out.three_a_plus_b});
  } else if (kappa == 3) {
    out.a = (6 * A(1) - 3 * A(2) - 3 * A(3) - 3 * c(1) + d(1) + d(2) + 3 * c(3) - 2 * d(3)) / two_kappa;
    out.b = (-24 * A(1) + 9 * A(2) + 15 * A(3) + 11 * c(1) - 3 * d(1) + 2 * c(2) - 5 * d(2) - 13 * c(3) + 8 * d(3)) /
            two_kappa;
    out.displayed_a = out.a;
    out.displayed_b = out.b;
  } else {
    out.constraints.push_back({"kappa = 4 level-one balance", -3 * A(1) + 3 * A(2) - A(3) + A(4),
                               -2 * c(1) + d(1) + c(2) + c(4) - d(4)});
    out.a = (-A(1) + 5 * A(2) - 3 * A(3) - A(4) + 2 * c(1) - 2 * d(1) - 3 * c(2) + d(2) + d(3) + c(4)) / two_kappa;
    const Rational b_numerator =
        2 * A(1) - 12 * A(2) + 6 * A(3) + 4 * A(4) - 5 * c(1) + 5 * d(1) + 7 * c(2) - 2 * d(2) + c(3) - 3 * d(3) - 3 * c(4);
    out.b = b_numerator / kappa;
    out.displayed_a = out.a;
    out.displayed_b = b_numerator / two_kappa;
  }
  for (const auto& con : out.constraints)
    if (!con.satisfied())
      return Infeasible{"constraint violated: " + con.name + " (" + to_string(con.lhs) + " != " + to_string(con.rhs) + ")",
                        con.lhs - con.rhs};
  if (out.a) out.w = Poly(std::vector<Rational>{0, *out.b, *out.a});
  out.t_lower = -out.w(1);
  for (int r = 2; r <= kappa; ++r) out.t_lower = std::max(out.t_lower, -out.w(r));
  return out;
}

// --- single-branch completion --------------------------------------------------

struct SingleBranchCompletion {
  MeasureModel model;
  Poly w;         ///< mu(x^1_{1,k+j}) = w(j) for j >= 1
  int order = 0;  ///< the m' for which the operator is k-quasi-m'-isometric
  int k = 0;
};

/// kappa = 1, eta = 1: keeps mu(x^1_{1,n}) = b_n for n <= m and continues the
/// branch with a positive polynomial of degree m, which makes C_phi a
/// k-quasi-(m+2)-isometry (a constant tail and order 2 when m = 1).
inline SingleBranchCompletion complete_single_branch(const std::vector<Rational>& b, int k,
                                                     const Rational& circuit_mass = 1,
                                                     std::optional<Rational> t = std::nullopt) {
  const int m = static_cast<int>(b.size());
  if (m < 1) throw DomainError("at least one initial mass is required");
  if (k < 1) throw DomainError("k must be >= 1");
  if (circuit_mass <= 0) throw DomainError("circuit mass must be positive");
  for (const auto& v : b)
    if (v <= 0) throw DomainError("initial masses must be positive");

  SingleBranchCompletion out;
  out.k = k;
  if (m == 1) {
    out.w = Poly::constant(b[0]);
    out.order = 2;
  } else {
    // Data for w(1..m): the given b_{k+n} where they exist, then the last given mass.
    std::vector<Rational> data;
    for (int n = 1; n <= m; ++n) data.push_back(k + n <= m ? b[static_cast<std::size_t>(k + n - 1)] : b.back());
    auto ext = lemma_extension(data, t);
    out.w = ext.w.shifted(Rational(-1));
    out.order = m + 2;
  }
  BranchRule rule;
  for (int j = 1; j <= k; ++j) rule.prefix.push_back(j <= m ? b[static_cast<std::size_t>(j - 1)] : Rational(1));
  rule.tail = out.w.shifted(Rational(-k));
  out.model.g = CircuitGraph{1, {1}};
  out.model.circuit_masses = {circuit_mass};
  out.model.branches = {{rule}};
  out.model.validate();
  return out;
}

}  // namespace kqm::compops
