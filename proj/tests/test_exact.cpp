#include <gtest/gtest.h>

#include "kqm/exact.hpp"
#include "support.hpp"

namespace {

using kqm::Node;
using kqm::Poly;
using kqm::Rational;
using kqm::testing::Rng;

Poly P(std::vector<Rational> c) { return Poly(std::move(c)); }

const Poly kCubic = P({1, Rational(71, 3), Rational(-43, 2), Rational(35, 6)});

TEST(Rational, CanonicalText) {
  EXPECT_EQ(kqm::to_string(Rational(26, 8)), "13/4");
  EXPECT_EQ(kqm::to_string(Rational(-6, 3)), "-2");
  EXPECT_EQ(kqm::parse_rational("28/13"), Rational(28, 13));
  EXPECT_EQ(kqm::parse_rational("-4/6"), Rational(-2, 3));
  EXPECT_EQ(kqm::parse_rational("+7"), Rational(7));
  EXPECT_THROW(kqm::parse_rational("1/0"), kqm::DomainError);
  EXPECT_THROW(kqm::parse_rational("1.5"), kqm::DomainError);
  EXPECT_THROW(kqm::parse_rational(""), kqm::DomainError);
}

TEST(Rational, LowestTermsPositiveDenominator) {
  const Rational q = Rational(10) / Rational(-4);
  EXPECT_EQ(kqm::numerator(q), -5);
  EXPECT_EQ(kqm::denominator(q), 2);
}

TEST(Poly, TrimsAndEvaluates) {
  const Poly p = P({1, 0, 3, 0, 0});
  EXPECT_EQ(p.degree(), 2);
  EXPECT_EQ(p(2), 13);
  EXPECT_TRUE(P({0, 0}).is_zero());
  EXPECT_EQ(P({}).degree(), -1);
  EXPECT_EQ(kqm::to_string(kCubic), "35/6*x^3 - 43/2*x^2 + 71/3*x + 1");
  EXPECT_EQ(kqm::to_string(P({-1, 0, 1})), "x^2 - 1");
}

TEST(Poly, ShiftedMatchesComposition) {
  Rng rng(11);
  for (int it = 0; it < 50; ++it) {
    const Poly p = kqm::testing::random_poly(rng, static_cast<int>(kqm::testing::uniform(rng, 0, 5)));
    const Rational a = kqm::testing::signed_rational(rng);
    const Poly q = p.shifted(a);
    for (long long x = -3; x <= 3; ++x) EXPECT_EQ(q(x), p(Rational(x) + a));
  }
}

TEST(Interpolate, CubicPolynomial) {
  EXPECT_EQ(kqm::interpolate({{0, 1}, {1, 9}, {2, 9}, {3, 36}}), kCubic);
}

TEST(Interpolate, ConstantData) { EXPECT_EQ(kqm::interpolate({{0, 1}, {1, 1}}), Poly::constant(1)); }

TEST(Interpolate, QuadraticPolynomial) { EXPECT_EQ(kqm::interpolate({{0, 1}, {1, 4}, {2, 13}}), P({1, 0, 3})); }

TEST(Interpolate, DuplicateNodeRejected) {
  try {
    kqm::interpolate({{0, 1}, {2, 3}, {2, 4}});
    FAIL();
  } catch (const kqm::DuplicateNode& e) {
    EXPECT_EQ(e.node(), 2);
  }
}

TEST(Interpolate, RecoversSampledPolynomial) {
  Rng rng(12);
  for (int it = 0; it < 100; ++it) {
    const int d = static_cast<int>(kqm::testing::uniform(rng, 0, 6));
    const Poly p = kqm::testing::random_poly(rng, d);
    std::vector<Node> nodes;
    long long x = kqm::testing::uniform(rng, -10, 10);
    for (int n = 0; n <= d; ++n) {
      x += kqm::testing::uniform(rng, 1, 3);
      nodes.emplace_back(x, p(x));
    }
    EXPECT_EQ(kqm::interpolate(nodes), p);
  }
}

TEST(PositiveFrom, Examples) {
  EXPECT_TRUE(kqm::positive_from(P({1, 0, 3}), 0));
  const auto r = kqm::positive_from(P({-5, 1}), 2);
  EXPECT_FALSE(r);
  EXPECT_EQ(r.witness, 2);
  EXPECT_TRUE(kqm::positive_from(kCubic, 4));
  EXPECT_EQ(kCubic(4), 125);
}

TEST(PositiveFrom, ZeroAndConstants) {
  const auto z = kqm::positive_from(Poly{}, 7);
  EXPECT_FALSE(z);
  EXPECT_EQ(z.witness, 7);
  EXPECT_TRUE(kqm::positive_from(Poly::constant(Rational(1, 9)), -100));
  EXPECT_FALSE(kqm::positive_from(Poly::constant(-1), 0));
}

TEST(PositiveFrom, NegativeLeadingCoefficientFailsEventually) {
  const Poly p = P({100, 0, -1});  // positive on |x| < 10
  const auto r = kqm::positive_from(p, 0);
  EXPECT_FALSE(r);
  EXPECT_EQ(r.witness, 10);
}

TEST(PositiveFrom, AgreesWithExhaustiveScan) {
  Rng rng(13);
  for (int it = 0; it < 300; ++it) {
    const Poly p = kqm::testing::random_poly(rng, static_cast<int>(kqm::testing::uniform(rng, 1, 4)));
    const long long from = kqm::testing::uniform(rng, -5, 5);
    Rational ratio = 0;
    for (int i = 0; i < p.degree(); ++i) ratio = std::max(ratio, kqm::abs(p.coeff(static_cast<std::size_t>(i))) / kqm::abs(p.leading()));
    const long long bound = static_cast<long long>(kqm::ceil(1 + ratio));
    std::optional<long long> first;
    for (long long n = from; n <= from + 10 * std::max<long long>(bound, 1) + 10; ++n)
      if (p(n) <= 0) {
        first = n;
        break;
      }
    const auto r = kqm::positive_from(p, from);
    EXPECT_EQ(r.positive, !first.has_value()) << kqm::to_string(p) << " from " << from;
    if (first) {
      EXPECT_EQ(r.witness, *first);
    }
  }
}

TEST(AltDiff, Example) {
  const std::vector<Rational> seq{1, 9, 9, 36};
  EXPECT_EQ(kqm::alt_diff(seq, 3, 0), -35);
  EXPECT_THROW(kqm::alt_diff(seq, 3, 1), kqm::RangeError);
}

TEST(AltDiff, ConstantAndPolynomialSequencesVanish) {
  Rng rng(14);
  const std::vector<Rational> constant(20, Rational(7, 3));
  for (int m = 1; m <= 6; ++m) EXPECT_EQ(kqm::alt_diff(constant, m, 3), 0);
  for (int it = 0; it < 100; ++it) {
    const int m = static_cast<int>(kqm::testing::uniform(rng, 1, 7));
    const Poly p = kqm::testing::random_poly(rng, static_cast<int>(kqm::testing::uniform(rng, 0, m - 1)));
    std::vector<Rational> seq;
    for (long long n = 0; n < 30; ++n) seq.push_back(p(n));
    const auto n = static_cast<std::size_t>(kqm::testing::uniform(rng, 0, 29 - m));
    EXPECT_EQ(kqm::alt_diff(seq, m, n), 0);
  }
}

TEST(LemmaExtension, QuadraticData) {
  const std::vector<Rational> b{1, 4};
  const auto ext = kqm::lemma_extension(b, Rational(13));
  EXPECT_EQ(ext.w, P({1, 0, 3}));
  EXPECT_EQ(ext.c, 13);
}

TEST(LemmaExtension, IdentityCase) {
  const std::vector<Rational> b{1};
  EXPECT_EQ(kqm::lemma_extension(b, Rational(1)).w, Poly::constant(1));
}

TEST(LemmaExtension, CubicData) {
  const std::vector<Rational> b{1, 9, 9};
  EXPECT_EQ(kqm::lemma_extension(b, Rational(36)).w, kCubic);
}

TEST(LemmaExtension, Errors) {
  const std::vector<Rational> bad{1, 0};
  EXPECT_THROW(kqm::lemma_extension(bad), kqm::DomainError);
  const std::vector<Rational> b{1, 9, 9};
  EXPECT_THROW(kqm::lemma_extension(b, Rational(-1)), kqm::PositivityError);
  // t below the interpolant's next value gives a negative leading coefficient
  try {
    kqm::lemma_extension(b, Rational(1, 2));
    FAIL();
  } catch (const kqm::PositivityError& e) {
    EXPECT_GE(e.witness(), 4);
  }
}

TEST(LemmaExtension, ClausesHoldForRandomData) {
  Rng rng(15);
  for (int it = 0; it < 100; ++it) {
    const auto l = kqm::testing::uniform(rng, 0, 6);
    std::vector<Rational> b;
    for (long long n = 0; n <= l; ++n) b.push_back(kqm::testing::positive_rational(rng));
    const auto ext = kqm::lemma_extension(b);
    for (long long n = 0; n <= l; ++n) EXPECT_EQ(ext.w(n), b[static_cast<std::size_t>(n)]);
    EXPECT_EQ(ext.w(l + 1), ext.c);
    EXPECT_LE(ext.w.degree(), l + 1);
    EXPECT_TRUE(kqm::positive_from(ext.w, l + 2));
    for (long long n = l + 2; n < l + 40; ++n) EXPECT_GT(ext.w(n), 0);
  }
}

TEST(LemmaExtension, MonotoneInT) {
  Rng rng(16);
  for (int it = 0; it < 40; ++it) {
    const auto l = kqm::testing::uniform(rng, 1, 5);
    std::vector<Rational> b;
    for (long long n = 0; n <= l; ++n) b.push_back(kqm::testing::positive_rational(rng));
    const auto ext = kqm::lemma_extension(b);
    for (int step = 1; step <= 4; ++step) {
      const Rational t = ext.c + Rational(step * step, 3);
      const auto w = kqm::lemma_extension(b, t).w;
      for (long long n = l + 2; n < l + 30; ++n) EXPECT_GT(w(n), 0);
    }
  }
}

TEST(SolveExact, KernelAndInconsistency) {
  kqm::Matrix a{{1, -2, 1}, {1, 1, -2}, {-2, 1, 1}};
  auto sol = kqm::solve_exact(a, {0, 0, 0});
  ASSERT_TRUE(sol.consistent);
  EXPECT_EQ(sol.rank, 2u);
  ASSERT_EQ(sol.kernel.size(), 1u);
  EXPECT_EQ(sol.kernel[0], (kqm::Vector{1, 1, 1}));
  auto bad = kqm::solve_exact(a, {1, 0, 0});
  EXPECT_FALSE(bad.consistent);
  EXPECT_NE(bad.residual, 0);
}

TEST(SolveExact, RandomSystemsRoundTrip) {
  Rng rng(17);
  for (int it = 0; it < 50; ++it) {
    const auto n = static_cast<std::size_t>(kqm::testing::uniform(rng, 1, 5));
    kqm::Matrix a(n, kqm::Vector(n));
    for (auto& row : a)
      for (auto& v : row) v = kqm::testing::signed_rational(rng, 3, 2);
    kqm::Vector x(n);
    for (auto& v : x) v = kqm::testing::signed_rational(rng);
    const auto b = kqm::multiply(a, x);
    const auto sol = kqm::solve_exact(a, b);
    ASSERT_TRUE(sol.consistent);
    EXPECT_EQ(kqm::multiply(a, sol.particular), b);
    for (const auto& k : sol.kernel) EXPECT_EQ(kqm::multiply(a, k), kqm::Vector(n, Rational(0)));
    EXPECT_EQ(sol.rank + sol.kernel.size(), n);
  }
}

TEST(Binomial, AltBinomialRow) {
  EXPECT_EQ(kqm::binomial(6, 3), 20);
  EXPECT_EQ(kqm::binomial(3, 4), 0);
  Rational sum = 0;
  for (int j = 0; j <= 5; ++j) sum += kqm::alt_binomial(5, j);
  EXPECT_EQ(sum, 0);
}

}  // namespace
