#pragma once

// Exact scalars, polynomials and the small pieces of exact linear algebra the
// solvers need. Nothing in this header ever rounds.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "kqm/errors.hpp"

namespace kqm {

using Integer = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>, boost::multiprecision::et_off>;
using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend, boost::multiprecision::et_off>;

inline Integer numerator(const Rational& q) { return boost::multiprecision::numerator(q); }
inline Integer denominator(const Rational& q) { return boost::multiprecision::denominator(q); }

/// Canonical text form: "p/q", or "p" when q = 1.
inline std::string to_string(const Rational& q) {
  const Integer den = denominator(q);
  if (den == 1) return numerator(q).str();
  return numerator(q).str() + "/" + den.str();
}

/// Parses "p", "p/q" or "-p/q". Throws DomainError on anything else.
inline Rational parse_rational(std::string_view text) {
  auto parse_int = [&](std::string_view s) -> Integer {
    std::size_t pos = 0;
    bool negative = false;
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
      negative = s[0] == '-';
      pos = 1;
    }
    if (pos == s.size()) throw DomainError("malformed rational '" + std::string(text) + "'");
    Integer value = 0;
    for (; pos < s.size(); ++pos) {
      if (s[pos] < '0' || s[pos] > '9')
        throw DomainError("malformed rational '" + std::string(text) + "'");
      value = value * 10 + (s[pos] - '0');
    }
    return negative ? Integer(-value) : value;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return Rational(parse_int(text));
  const Integer num = parse_int(text.substr(0, slash));
  const Integer den = parse_int(text.substr(slash + 1));
  if (den == 0) throw DomainError("zero denominator in '" + std::string(text) + "'");
  return Rational(num, den);
}

/// Smallest integer >= q.
inline Integer ceil(const Rational& q) {
  const Integer num = numerator(q);
  const Integer den = denominator(q);
  Integer quot = num / den;  // truncates toward zero
  if (quot * den < num) ++quot;
  return quot;
}

inline Rational abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

inline Integer binomial(long long n, long long j) {
  if (j < 0 || j > n) return 0;
  Integer result = 1;
  for (long long i = 1; i <= j; ++i) result = result * (n - j + i) / i;
  return result;
}

/// Signed binomial weight (-1)^j C(m, j) used by every m-th difference.
inline Rational alt_binomial(int m, int j) {
  Rational c(binomial(m, j));
  return (j % 2 == 0) ? c : Rational(-c);
}

/// Univariate polynomial with Rational coefficients, lowest degree first.
/// Trailing zero coefficients are always trimmed, so the zero polynomial has
/// no coefficients and degree -1.
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<Rational> coeffs) : c_(std::move(coeffs)) { trim(); }
  static Poly constant(const Rational& c) { return Poly(std::vector<Rational>{c}); }
  static Poly x() { return Poly(std::vector<Rational>{0, 1}); }
  /// (x - a)
  static Poly linear_root(const Rational& a) { return Poly(std::vector<Rational>{-a, 1}); }

  const std::vector<Rational>& coeffs() const { return c_; }
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }
  Rational leading() const { return c_.empty() ? Rational(0) : c_.back(); }
  Rational coeff(std::size_t i) const { return i < c_.size() ? c_[i] : Rational(0); }

  Rational operator()(const Rational& x) const {
    Rational acc = 0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }
  Rational operator()(long long x) const { return (*this)(Rational(x)); }

  /// p(x + a)
  Poly shifted(const Rational& a) const {
    // Horner in the ring: result = (...(c_d (x+a) + c_{d-1})(x+a) + ...)
    Poly result;
    const Poly xa(std::vector<Rational>{a, 1});
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) result = result * xa + constant(*it);
    return result;
  }

  friend Poly operator+(const Poly& a, const Poly& b) {
    std::vector<Rational> c(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.coeff(i) + b.coeff(i);
    return Poly(std::move(c));
  }
  friend Poly operator-(const Poly& a, const Poly& b) {
    std::vector<Rational> c(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.coeff(i) - b.coeff(i);
    return Poly(std::move(c));
  }
  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<Rational> c(a.c_.size() + b.c_.size() - 1);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    return Poly(std::move(c));
  }
  friend Poly operator*(const Rational& s, const Poly& p) {
    std::vector<Rational> c(p.c_);
    for (auto& v : c) v *= s;
    return Poly(std::move(c));
  }
  friend Poly operator/(const Poly& p, const Rational& s) { return (Rational(1) / s) * p; }
  friend bool operator==(const Poly& a, const Poly& b) { return a.c_ == b.c_; }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == 0) c_.pop_back();
  }
  std::vector<Rational> c_;
};

/// Human-readable rendering, highest degree first, e.g. "35/6*x^3 - 43/2*x^2 + 71/3*x + 1".
inline std::string to_string(const Poly& p) {
  if (p.is_zero()) return "0";
  std::string out;
  for (int i = p.degree(); i >= 0; --i) {
    const Rational& c = p.coeffs()[static_cast<std::size_t>(i)];
    if (c == 0) continue;
    const Rational mag = abs(c);
    if (out.empty()) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    const bool unit = mag == 1 && i > 0;
    if (!unit) out += to_string(mag);
    if (i > 0) {
      if (!unit) out += "*";
      out += "x";
      if (i > 1) out += "^" + std::to_string(i);
    }
  }
  return out;
}

using Node = std::pair<long long, Rational>;

/// The unique polynomial of degree <= points.size() - 1 through every node.
/// Newton divided differences, expanded to the monomial basis.
inline Poly interpolate(std::span<const Node> points) {
  const std::size_t n = points.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (points[i].first == points[j].first) throw DuplicateNode(points[i].first);
  if (n == 0) return {};
  std::vector<Rational> dd(n);
  for (std::size_t i = 0; i < n; ++i) dd[i] = points[i].second;
  for (std::size_t level = 1; level < n; ++level)
    for (std::size_t i = n - 1; i >= level; --i)
      dd[i] = (dd[i] - dd[i - 1]) / Rational(points[i].first - points[i - level].first);
  Poly result = Poly::constant(dd[n - 1]);
  for (std::size_t i = n - 1; i-- > 0;)
    result = result * Poly::linear_root(Rational(points[i].first)) + Poly::constant(dd[i]);
  return result;
}

inline Poly interpolate(std::initializer_list<Node> points) {
  return interpolate(std::span<const Node>(points.begin(), points.size()));
}

/// Outcome of a tail-positivity decision. `witness` is the smallest failing
/// integer when `positive` is false.
struct PositivityResult {
  bool positive = true;
  long long witness = 0;
  explicit operator bool() const { return positive; }
};

namespace detail {
inline bool all_coeffs_nonnegative(const Poly& p) {
  return std::all_of(p.coeffs().begin(), p.coeffs().end(), [](const Rational& c) { return c >= 0; });
}
inline constexpr long long kMaxPositivityScan = 10'000'000;
}  // namespace detail

/// Decides exactly whether w(n) > 0 for every integer n >= from.
///
/// Every real root lies below the Cauchy bound R = 1 + max|a_i|/|a_d|, so the
/// integers in [from, ceil(R)] are scanned and the sign beyond R is the sign of
/// the leading coefficient. The scan stops early once the Taylor shift
/// w(x + n) has only non-negative coefficients, which certifies w > 0 on [n, oo).
inline PositivityResult positive_from(const Poly& w, long long from) {
  if (w.is_zero()) return {false, from};
  const Rational lead = w.leading();
  if (w.degree() == 0) return lead > 0 ? PositivityResult{} : PositivityResult{false, from};

  Rational ratio = 0;
  for (int i = 0; i < w.degree(); ++i) ratio = std::max(ratio, abs(w.coeffs()[static_cast<std::size_t>(i)]) / abs(lead));
  const Integer upper_big = ceil(Rational(1) + ratio);
  if (upper_big >= from && upper_big - from > detail::kMaxPositivityScan)
    throw RangeError("positivity scan range exceeds " + std::to_string(detail::kMaxPositivityScan));
  const long long upper = upper_big < from ? from - 1 : static_cast<long long>(upper_big);

  long long next_checkpoint = from;
  for (long long n = from; n <= upper; ++n) {
    if (w(n) <= 0) return {false, n};
    if (n == next_checkpoint) {
      if (lead > 0 && detail::all_coeffs_nonnegative(w.shifted(Rational(n)))) return {};
      next_checkpoint = from + std::max<long long>(1, 2 * (n - from));
    }
  }
  if (lead > 0) return {};
  return {false, std::max(from, upper + 1)};
}

/// sum_{j=0}^{m} (-1)^j C(m, j) seq[n + j]
inline Rational alt_diff(std::span<const Rational> seq, int m, std::size_t n) {
  if (m < 0) throw DomainError("difference order must be non-negative");
  if (n + static_cast<std::size_t>(m) >= seq.size())
    throw RangeError("alt_diff needs entries " + std::to_string(n) + ".." + std::to_string(n + m) +
                     " but the sequence has " + std::to_string(seq.size()));
  Rational acc = 0;
  for (int j = 0; j <= m; ++j) acc += alt_binomial(m, j) * seq[n + static_cast<std::size_t>(j)];
  return acc;
}

/// Result of the polynomial-extension construction.
struct Extension {
  Rational c;  ///< the value w_t(l + 1) = t that was used
  Poly w;
};

/// Extends positive data b_0..b_l to a polynomial w_t with w_t(n) = b_n on
/// [0, l], w_t(l + 1) = t and w_t(n) > 0 for every n >= l + 2.
///
/// w_t = p + (t - p(l+1)) q / q(l+1), with p the interpolant of the data and
/// q = prod_{n=0}^{l} (x - n). Since q > 0 on [l+2, oo), positivity there is
/// monotone in t; with no explicit t the search doubles from
/// max(1, p(l+1) + 1). The returned c is the first success, not the minimum.
inline Extension lemma_extension(std::span<const Rational> b, std::optional<Rational> t = std::nullopt) {
  if (b.empty()) throw DomainError("lemma_extension needs at least one data point");
  for (std::size_t n = 0; n < b.size(); ++n)
    if (b[n] <= 0) throw DomainError("data point b_" + std::to_string(n) + " = " + to_string(b[n]) + " is not positive");

  const long long l = static_cast<long long>(b.size()) - 1;
  std::vector<Node> nodes;
  nodes.reserve(b.size());
  for (long long n = 0; n <= l; ++n) nodes.emplace_back(n, b[static_cast<std::size_t>(n)]);
  const Poly p = interpolate(nodes);
  Poly q = Poly::constant(1);
  for (long long n = 0; n <= l; ++n) q = q * Poly::linear_root(Rational(n));
  const Rational p_next = p(l + 1);
  const Rational q_next = q(l + 1);
  auto build = [&](const Rational& value) { return p + ((value - p_next) / q_next) * q; };

  if (t) {
    if (*t <= 0) throw PositivityError("requested t = " + to_string(*t) + " is not positive", l + 1);
    Poly w = build(*t);
    const auto check = positive_from(w, l + 2);
    if (!check) throw PositivityError("requested t = " + to_string(*t) + " leaves the tail non-positive", check.witness);
    return {*t, std::move(w)};
  }
  Rational value = std::max(Rational(1), p_next + 1);
  for (;;) {
    Poly w = build(value);
    if (positive_from(w, l + 2)) return {value, std::move(w)};
    value *= 2;
  }
}

// --- exact linear algebra ---------------------------------------------------

using Vector = std::vector<Rational>;
using Matrix = std::vector<Vector>;

/// Solution set of A x = b: a particular solution plus a kernel basis, or the
/// index and value of an inconsistent reduced row.
struct LinearSolution {
  bool consistent = true;
  Vector particular;            ///< free variables set to zero
  std::vector<Vector> kernel;   ///< basis of ker A
  std::size_t rank = 0;
  std::size_t bad_row = 0;      ///< meaningful when !consistent
  Rational residual = 0;        ///< reduced right-hand side of the bad row
};

/// Gauss-Jordan elimination over the rationals.
inline LinearSolution solve_exact(Matrix a, Vector b) {
  const std::size_t rows = a.size();
  const std::size_t cols = rows == 0 ? 0 : a[0].size();
  if (b.size() != rows) throw DomainError("right-hand side length does not match the matrix");
  std::vector<std::size_t> pivot_cols;
  std::size_t row = 0;
  for (std::size_t col = 0; col < cols && row < rows; ++col) {
    std::size_t pivot = row;
    while (pivot < rows && a[pivot][col] == 0) ++pivot;
    if (pivot == rows) continue;
    std::swap(a[pivot], a[row]);
    std::swap(b[pivot], b[row]);
    const Rational inv = Rational(1) / a[row][col];
    for (auto& v : a[row]) v *= inv;
    b[row] *= inv;
    for (std::size_t r = 0; r < rows; ++r) {
      if (r == row || a[r][col] == 0) continue;
      const Rational f = a[r][col];
      for (std::size_t c = col; c < cols; ++c) a[r][c] -= f * a[row][c];
      b[r] -= f * b[row];
    }
    pivot_cols.push_back(col);
    ++row;
  }
  LinearSolution out;
  out.rank = row;
  for (std::size_t r = row; r < rows; ++r) {
    if (b[r] != 0) {
      out.consistent = false;
      out.bad_row = r;
      out.residual = b[r];
      return out;
    }
  }
  std::vector<bool> is_pivot(cols, false);
  for (auto c : pivot_cols) is_pivot[c] = true;
  out.particular.assign(cols, Rational(0));
  for (std::size_t r = 0; r < pivot_cols.size(); ++r) out.particular[pivot_cols[r]] = b[r];
  for (std::size_t free = 0; free < cols; ++free) {
    if (is_pivot[free]) continue;
    Vector v(cols, Rational(0));
    v[free] = 1;
    for (std::size_t r = 0; r < pivot_cols.size(); ++r) v[pivot_cols[r]] = -a[r][free];
    out.kernel.push_back(std::move(v));
  }
  return out;
}

inline Vector multiply(const Matrix& a, const Vector& x) {
  Vector out(a.size(), Rational(0));
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t c = 0; c < x.size(); ++c) out[r] += a[r][c] * x[c];
  return out;
}

}  // namespace kqm
