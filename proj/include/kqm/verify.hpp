#pragma once

// Brute-force moment oracle. Moments are sums over preimage sets built by
// graph::preimage, with weights multiplied along forward orbits; none of the
// closed forms of the other modules are used.

#include <optional>
#include <string>
#include <vector>

#include "kqm/exact.hpp"
#include "kqm/graph.hpp"
#include "kqm/shift.hpp"
#include "kqm/wcompops.hpp"

namespace kqm::verify {

using graph::MeasureModel;
using graph::Vertex;
using wcompops::WeightFunction;

/// pi == 1.
struct UnitWeight {
  Rational value(const Vertex&) const { return 1; }
};

/// ||W^n e_v||^2 = sum_{y in phi^{-n}(v)} pi_n(y)^2 mu(y) / mu(v), with e_v the
/// normalized indicator of the atom {v}.
template <class Weight>
Rational moment(const Vertex& v, long long n, const MeasureModel& mu, const Weight& pi, long long depth_cap) {
  Rational total = 0;
  for (const auto& y : graph::preimage(v, n, mu.g, depth_cap)) {
    Rational w = 1;
    Vertex u = y;
    for (long long q = 0; q < n; ++q) {
      w *= pi.value(u);
      u = graph::phi(u, mu.g);
    }
    total += w * w * mu.mass(y);
  }
  return total / mu.mass(v);
}

struct MomentRow {
  Vertex vertex;
  std::vector<Rational> moments;  ///< orders 0 .. k+m
  Rational defect;                ///< sum_p (-1)^p C(m,p) moment(v, p+k)
};

struct MomentReport {
  int m = 0;
  int k = 0;
  long long depth = 0;
  std::vector<MomentRow> rows;
  Rational max_abs_defect = 0;
  std::optional<Vertex> first_failure;

  bool all_zero() const { return !first_failure.has_value(); }
};

inline long long default_depth(int m, int k) { return k + m + 8; }

/// Diagonal defects T*^k B_m(T) T^k on every atom of depth <= depth. W*^n W^n
/// is a multiplication operator, so the diagonal decides the identity.
template <class Weight>
  requires requires(const Weight& w, const Vertex& v) { w.value(v); }
MomentReport defect_suite(const MeasureModel& mu, const Weight& pi, int m, int k, std::optional<long long> depth = {}) {
  if (m < 1 || k < 1) throw DomainError("defect_suite needs m, k >= 1");
  const long long d = depth.value_or(default_depth(m, k));
  if (d < k + m + 1) throw PreconditionError("defect_suite needs depth >= k+m+1");
  if (!mu.has_circuit_masses()) throw PreconditionError("defect_suite needs circuit masses");
  MomentReport report;
  report.m = m;
  report.k = k;
  report.depth = d;
  const long long cap = d + k + m;
  for (const auto& v : mu.g.vertices(d)) {
    MomentRow row;
    row.vertex = v;
    for (long long n = 0; n <= k + m; ++n) row.moments.push_back(moment(v, n, mu, pi, cap));
    row.defect = 0;
    for (int p = 0; p <= m; ++p) row.defect += alt_binomial(m, p) * row.moments[static_cast<std::size_t>(p + k)];
    const Rational a = abs(row.defect);
    if (a > report.max_abs_defect) report.max_abs_defect = a;
    if (row.defect != 0 && !report.first_failure) report.first_failure = v;
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline MomentReport defect_suite(const MeasureModel& mu, int m, int k, std::optional<long long> depth = {}) {
  return defect_suite(mu, UnitWeight{}, m, k, depth);
}

// --- weighted shifts -------------------------------------------------------------

/// ||S^n e_v||^2 = prod_{i=1}^{n} lambda_{v+i}^2 for S e_j = lambda_{j+1} e_{j+1}.
template <class Rule>
Rational shift_moment(const Rule& squared_weight, long long v, long long n) {
  Rational acc = 1;
  for (long long i = 1; i <= n; ++i) acc *= squared_weight(static_cast<std::size_t>(v + i));
  return acc;
}

struct ShiftMomentReport {
  int m = 0;
  int k = 0;
  std::vector<Rational> defects;  ///< indexed by basis vector e_0 .. e_depth
  std::optional<long long> first_failure;

  bool all_zero() const { return !first_failure.has_value(); }
};

template <class Rule>
ShiftMomentReport shift_defect_suite(const Rule& squared_weight, int m, int k, long long depth) {
  if (m < 1 || k < 1 || depth < 0) throw DomainError("shift_defect_suite needs m, k >= 1 and depth >= 0");
  ShiftMomentReport report;
  report.m = m;
  report.k = k;
  for (long long v = 0; v <= depth; ++v) {
    Rational d = 0;
    for (int p = 0; p <= m; ++p) d += alt_binomial(m, p) * shift_moment(squared_weight, v, p + k);
    if (d != 0 && !report.first_failure) report.first_failure = v;
    report.defects.push_back(d);
  }
  return report;
}

}  // namespace kqm::verify
