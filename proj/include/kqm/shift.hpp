#pragma once

// k-quasi-m-isometric completion of unilateral weighted shifts.
//
// Weights are handled through their squares: the completed weights are
// irrational in general, but lambda_n^2 is always rational.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kqm/exact.hpp"

namespace kqm::shift {

/// Every filler weight equals `value`.
struct ConstantFiller {
  Rational value = 1;
};
using FillerPolicy = std::variant<ConstantFiller, std::vector<Rational>>;

struct ShiftProblem {
  int m = 1;
  int k = 1;
  std::vector<Rational> weights;  ///< lambda_1 .. lambda_l
  FillerPolicy filler = ConstantFiller{};
  std::optional<Rational> t;  ///< explicit extension value; nullopt = search

  std::size_t l() const { return weights.size(); }
  /// Number of weights the completion fixes before the polynomial tail takes
  /// over. For m = 1 the weight lambda_k is still free and is filled too.
  std::size_t prefix_length() const {
    return static_cast<std::size_t>(std::max(k + m - 2, k));
  }

  void validate() const {
    if (m < 1) throw DomainError("m must be >= 1");
    if (k < 1) throw DomainError("k must be >= 1");
    if (weights.empty()) throw DomainError("at least one initial weight is required");
    for (std::size_t i = 0; i < weights.size(); ++i)
      if (weights[i] <= 0) throw DomainError("weight lambda_" + std::to_string(i + 1) + " is not positive");
    if (const auto* seq = std::get_if<std::vector<Rational>>(&filler)) {
      const std::size_t need = l() < prefix_length() ? prefix_length() - l() : 0;
      if (l() <= prefix_length() && seq->size() != need)
        throw DomainError("filler needs exactly " + std::to_string(need) + " entries, got " + std::to_string(seq->size()));
      for (const auto& v : *seq)
        if (v <= 0) throw DomainError("filler weights must be positive");
    } else if (std::get<ConstantFiller>(filler).value <= 0) {
      throw DomainError("filler weights must be positive");
    }
  }
};

/// (beta lambda)_s = prod_{i=1}^{s} lambda_i^2, and 1 for s = 0.
inline Rational beta(std::span<const Rational> weights, std::size_t s) {
  if (s > weights.size())
    throw RangeError("beta needs " + std::to_string(s) + " weights, have " + std::to_string(weights.size()));
  Rational acc = 1;
  for (std::size_t i = 0; i < s; ++i) acc *= weights[i] * weights[i];
  return acc;
}

/// lambda_n^2 for every n >= 1: stored squares up to the prefix, then
/// lambda_{k+s}^2 = w(s) / w(s-1).
struct SquaredWeightRule {
  int k = 1;
  std::vector<Rational> prefix;  ///< lambda_1^2 .. lambda_P^2
  Poly w;

  Rational operator()(std::size_t n) const {
    if (n == 0) throw RangeError("weights are indexed from 1");
    if (n <= prefix.size()) return prefix[n - 1];
    const long long s = static_cast<long long>(n) - k;
    return w(s) / w(s - 1);
  }
};

struct ShiftCompletion {
  Poly w;  ///< certifying polynomial in the normalized frame, w(0) = 1
  SquaredWeightRule rule;
  bool strict = false;
  std::optional<Rational> t_used;
  int m = 1;
};

struct AltDiffNonzero {
  long long n = 0;
  Rational value;
};
struct InterpolantMismatch {
  long long node = 0;
  Rational expected;
  Rational got;
};
struct PositivityFail {
  long long witness = 0;
};
using NonexistenceCertificate = std::variant<AltDiffNonzero, InterpolantMismatch, PositivityFail>;

using ShiftResult = std::variant<ShiftCompletion, NonexistenceCertificate>;

namespace detail {

/// (beta alpha)_s = prod_{i=1}^{s} lambda_{k+i}^2 for s = 0..count-1.
inline std::vector<Rational> alpha_frame(std::span<const Rational> lambda, int k, std::size_t count) {
  std::vector<Rational> out;
  out.reserve(count);
  Rational acc = 1;
  for (std::size_t s = 0; s < count; ++s) {
    if (s > 0) {
      const Rational& a = lambda[static_cast<std::size_t>(k) + s - 1];
      acc *= a * a;
    }
    out.push_back(acc);
  }
  return out;
}

inline std::vector<Rational> squares(std::span<const Rational> lambda) {
  std::vector<Rational> out;
  out.reserve(lambda.size());
  for (const auto& v : lambda) out.push_back(v * v);
  return out;
}

}  // namespace detail

/// Solves the completion problem. Short data (l <= k+m-2) always admits a
/// strict completion; longer data either yields the unique completion or a
/// certificate naming the first condition that fails.
inline ShiftResult complete_shift(const ShiftProblem& problem) {
  problem.validate();
  const int m = problem.m;
  const int k = problem.k;
  const std::size_t l = problem.l();

  if (l <= problem.prefix_length()) {
    std::vector<Rational> lambda = problem.weights;
    while (lambda.size() < problem.prefix_length()) {
      if (const auto* seq = std::get_if<std::vector<Rational>>(&problem.filler))
        lambda.push_back((*seq)[lambda.size() - l]);
      else
        lambda.push_back(std::get<ConstantFiller>(problem.filler).value);
    }
    ShiftCompletion out;
    out.m = m;
    if (m == 1) {
      // The only 1-isometric tail is the constant one.
      out.w = Poly::constant(1);
    } else {
      const auto b = detail::alpha_frame(lambda, k, static_cast<std::size_t>(m - 1));
      auto ext = lemma_extension(b, problem.t);
      out.w = std::move(ext.w);
      out.t_used = ext.c;
    }
    out.strict = out.w.degree() == m - 1;
    out.rule = SquaredWeightRule{k, detail::squares(lambda), out.w};
    return out;
  }

  // l > k+m-2: the data already pin down the completion.
  const std::size_t known = l - static_cast<std::size_t>(k) + 1;  // (beta alpha)_0 .. _{l-k}
  const auto gamma = detail::alpha_frame(problem.weights, k, known);
  const long long last = static_cast<long long>(l) - (k + m);
  for (long long n = 0; n <= last; ++n) {
    const Rational d = alt_diff(gamma, m, static_cast<std::size_t>(n));
    if (d != 0) return NonexistenceCertificate{AltDiffNonzero{n, d}};
  }
  std::vector<Node> nodes;
  for (long long n = 0; n < m; ++n) nodes.emplace_back(n, gamma[static_cast<std::size_t>(n)]);
  Poly w = interpolate(nodes);
  for (std::size_t n = static_cast<std::size_t>(m); n < known; ++n) {
    const Rational got = w(static_cast<long long>(n));
    if (got != gamma[n]) return NonexistenceCertificate{InterpolantMismatch{static_cast<long long>(n), gamma[n], got}};
  }
  if (const auto pos = positive_from(w, m); !pos) return NonexistenceCertificate{PositivityFail{pos.witness}};

  ShiftCompletion out;
  out.m = m;
  out.strict = w.degree() == m - 1;
  out.rule = SquaredWeightRule{k, detail::squares(problem.weights), w};
  out.w = std::move(w);
  return out;
}

struct ShiftCheck {
  bool ok = true;
  std::optional<long long> first_failure;
  Rational value = 0;  ///< the non-zero difference at the first failure
};

/// Checks sum_j (-1)^j C(m,j) gamma_{n+j} = 0 for n in [0, horizon], where
/// gamma_s = prod_{i=1}^{s} lambda_{k+i}^2 = ||S^s e_k||^2.
template <class Rule>
ShiftCheck check_shift(const Rule& squared_weight, int m, int k, long long horizon) {
  if (m < 1 || k < 1 || horizon < 0) throw DomainError("check_shift needs m, k >= 1 and horizon >= 0");
  const std::size_t count = static_cast<std::size_t>(horizon + m + 1);
  std::vector<Rational> gamma;
  gamma.reserve(count);
  Rational acc = 1;
  for (std::size_t s = 0; s < count; ++s) {
    if (s > 0) acc *= squared_weight(static_cast<std::size_t>(k) + s);
    gamma.push_back(acc);
  }
  for (long long n = 0; n <= horizon; ++n) {
    const Rational d = alt_diff(gamma, m, static_cast<std::size_t>(n));
    if (d != 0) return {false, n, d};
  }
  return {};
}

inline std::string certificate_name(const NonexistenceCertificate& cert) {
  return std::visit(
      [](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AltDiffNonzero>) return "alt_diff";
        else if constexpr (std::is_same_v<T, InterpolantMismatch>) return "interpolant_mismatch";
        else return "positivity";
      },
      cert);
}

}  // namespace kqm::shift
