// One PASS/FAIL line per acceptance criterion; exit status 1 when any fails.

#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "kqm/cli.hpp"
#include "kqm/compops.hpp"
#include "kqm/verify.hpp"
#include "kqm/wcompops.hpp"
#include "support.hpp"

namespace {

using kqm::Poly;
using kqm::Rational;
using kqm::Vector;
using kqm::compops::MassSolutionFamily;
using kqm::graph::CircuitGraph;
using kqm::graph::MeasureModel;
using kqm::testing::Rng;
using kqm::testing::uniform;
using kqm::wcompops::WeightFunction;

/// Outcome of one criterion: ok plus a short detail line.
struct Verdict {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

int failures = 0;

void criterion(const std::string& id, const std::string& title, double limit_seconds, const std::function<Verdict()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v.ok = false;
    v.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (v.ok && secs >= limit_seconds) {
    v.ok = false;
    v.detail = "over the time limit";
  }
  std::ostringstream line;
  line.setf(std::ios::fixed);
  line.precision(3);
  line << id << " " << (v.ok ? "PASS" : "FAIL") << "  " << title << "  (" << secs << " s)";
  if (!v.detail.empty()) line << "  " << v.detail;
  std::cout << line.str() << std::endl;
  if (!v.ok) ++failures;
}

kqm::shift::ShiftProblem shift_problem(int m, int k, std::vector<Rational> w, std::optional<Rational> t = {}) {
  kqm::shift::ShiftProblem p;
  p.m = m;
  p.k = k;
  p.weights = std::move(w);
  p.t = t;
  return p;
}

int run_cli(const std::string& command, const kqm::cli::json& doc, std::optional<int> kappa = {}) {
  kqm::cli::Args args;
  args.command = command;
  args.kappa = kappa;
  std::istringstream in(doc.dump());
  std::ostringstream out, err;
  return kqm::cli::run(args, in, out, err);
}

Verdict ac1() {
  Verdict v;
  const auto res = kqm::shift::complete_shift(shift_problem(3, 2, {1, 3, 2}, Rational(13)));
  const auto* c = std::get_if<kqm::shift::ShiftCompletion>(&res);
  v.require(c != nullptr, "no completion");
  if (!c) return v;
  v.require(c->rule(4) == Rational(13, 4), "lambda_4^2 != 13/4");
  v.require(c->rule(5) == Rational(28, 13), "lambda_5^2 != 28/13");
  v.require(c->w == Poly(std::vector<Rational>{1, 0, 3}), "w != 3x^2+1");
  v.detail = v.ok ? "w = " + kqm::to_string(c->w) + ", 13/4, 28/13" : v.detail;
  return v;
}

Verdict ac2() {
  Verdict v;
  const auto res = kqm::shift::complete_shift(shift_problem(4, 2, {2, 5, 3, 1, 2}));
  const auto* c = std::get_if<kqm::shift::ShiftCompletion>(&res);
  v.require(c != nullptr, "no completion");
  if (!c) return v;
  v.require(c->w == Poly(std::vector<Rational>{1, Rational(71, 3), Rational(-43, 2), Rational(35, 6)}), "coefficients differ");
  v.require(c->strict, "not strict");
  v.detail = v.ok ? "w = " + kqm::to_string(c->w) : v.detail;
  return v;
}

Verdict ac3() {
  Verdict v;
  const auto res = kqm::shift::complete_shift(shift_problem(3, 2, {2, 5, 3, 1, 2}));
  const auto* cert = std::get_if<kqm::shift::NonexistenceCertificate>(&res);
  v.require(cert != nullptr, "a completion was returned");
  if (!cert) return v;
  const auto* alt = std::get_if<kqm::shift::AltDiffNonzero>(cert);
  v.require(alt != nullptr && alt->n == 0 && alt->value == -35, "certificate is not alt_diff(n=0) = -35");
  const kqm::cli::json doc{{"kind", "shift"}, {"payload", {{"m", 3}, {"k", 2}, {"weights", {"2", "5", "3", "1", "2"}}}}};
  v.require(run_cli("complete-shift", doc) == 2, "cli exit code is not 2");
  if (v.ok) v.detail = "alt_diff n=0 value -35, exit 2";
  return v;
}

Verdict ac4() {
  Verdict v;
  int systems = 0;
  for (int kappa = 3; kappa <= 8; ++kappa)
    for (int m = 2; m < kappa; ++m) {
      MeasureModel mu;
      mu.g = CircuitGraph{kappa, std::vector<int>(static_cast<std::size_t>(kappa), 1)};
      mu.branches.assign(static_cast<std::size_t>(kappa), {kqm::graph::BranchRule{{}, Poly::constant(1)}});
      const auto sys = kqm::compops::assemble_circuit_system(mu, m, 1);
      const Vector ones(static_cast<std::size_t>(kappa), Rational(1));
      const Vector zero(static_cast<std::size_t>(kappa), Rational(0));
      v.require(kqm::multiply(sys.a, ones) == zero, "A*1 != 0 at kappa " + std::to_string(kappa));
      const auto sol = kqm::solve_exact(sys.a, zero);
      v.require(sol.kernel.size() == 1 && kqm::compops::detail::normalized(sol.kernel[0]) == ones,
                "kernel is not span{1} at kappa " + std::to_string(kappa) + ", m " + std::to_string(m));
      ++systems;
    }
  if (v.ok) v.detail = std::to_string(systems) + " systems";
  return v;
}

Verdict ac5() {
  Verdict v;
  Rng rng(1005);
  int checked = 0;
  for (int kappa = 3; kappa <= 5; ++kappa)
    for (int m = 2; m <= 3; ++m) {
      if (m >= kappa) continue;
      for (int k = 1; k <= 2; ++k)
        for (int it = 0; it < 50; ++it) {
          const auto mu = kqm::testing::random_model(rng, kappa, m - 2, k, false);
          const auto res = kqm::compops::solve_circuit(mu, m, k);
          const auto* fam = std::get_if<MassSolutionFamily>(&res);
          v.require(fam != nullptr, "solver reported infeasible");
          if (!fam) return v;
          const auto model = mu.with_circuit_masses(fam->member(fam->sample_t()));
          const auto rep = kqm::verify::defect_suite(model, m, k, k + m + 8);
          v.require(rep.all_zero(), "nonzero defect at kappa " + std::to_string(kappa) + ", m " + std::to_string(m));
          ++checked;
        }
    }
  if (v.ok) v.detail = std::to_string(checked) + " instances (m < kappa)";
  return v;
}

Verdict ac6() {
  Verdict v;
  Rng rng(1006);
  for (int kappa = 2; kappa <= 4; ++kappa)
    for (int it = 0; it < 20; ++it) {
      const auto mu = kqm::testing::affine_model(rng, kappa);
      const auto res = kqm::compops::characterize_1q3(mu);
      const auto* ch = std::get_if<kqm::compops::Characterization>(&res);
      v.require(ch != nullptr, "rejected an admissible instance");
      if (!ch) return v;
      const auto model = mu.with_circuit_masses(ch->masses(ch->t_lower + 1));
      v.require(kqm::compops::is_kqm(model, 3, 1).is_kqm(), "is_kqm(3,1) fails at kappa " + std::to_string(kappa));
      v.require(kqm::verify::defect_suite(model, 3, 1).all_zero(), "defect_suite fails at kappa " + std::to_string(kappa));
    }
  // violation of the kappa = 2 constraint: A1 + A2 = 2, c1 + c2 = 4
  MeasureModel bad;
  bad.g = CircuitGraph{2, {1, 1}};
  bad.branches = {{kqm::testing::affine_rule({1, 1, 0})}, {kqm::testing::affine_rule({1, 3, 0})}};
  v.require(std::holds_alternative<kqm::compops::Infeasible>(kqm::compops::characterize_1q3(bad)), "violation accepted");
  kqm::cli::json payload = kqm::cli::json::object();
  kqm::io::write_measure(payload, bad);
  v.require(run_cli("characterize", kqm::cli::json{{"kind", "graph"}, {"payload", payload}}, 2) == 2, "cli exit code is not 2");
  if (v.ok) v.detail = "60 instances, violation rejected with exit 2";
  return v;
}

Verdict ac7() {
  Verdict v;
  Rng rng(1007);
  for (int it = 0; it < 50; ++it) {
    const int kappa = static_cast<int>(uniform(rng, 1, 4));
    const auto mu = kqm::testing::random_model(rng, kappa, 2, static_cast<int>(uniform(rng, 1, 2)));
    const auto pi = kqm::testing::random_weight(rng, mu.g, true);
    for (long long p = kappa; p <= kappa + 4; ++p)
      v.require(kqm::wcompops::cond_exp(p, mu, pi, 6).values == kqm::wcompops::atom_oracle(p, mu, pi, 6).values,
                "mismatch at kappa " + std::to_string(kappa) + ", p " + std::to_string(p));
  }
  if (v.ok) v.detail = "50 instances";
  return v;
}

Verdict ac8() {
  Verdict v;
  Rng rng(1008);
  int checked = 0;
  for (int m = 1; m <= 3; ++m)
    for (int k = 1; k <= 2; ++k)
      for (int it = 0; it < 10; ++it) {
        std::vector<Rational> b;
        for (int n = 0; n < m; ++n) b.push_back(kqm::testing::positive_rational(rng));
        auto pi = WeightFunction::unit(CircuitGraph{1, {1}});
        for (long long n = uniform(rng, 0, 3); n > 0; --n) pi.branches[0][0].prefix.push_back(kqm::testing::positive_rational(rng, 5, 3));
        if (it % 2 == 1) pi.circuit_values[0] = Rational(uniform(rng, 1, 4), 5);
        const auto done = kqm::wcompops::complete_single_branch_weighted(b, pi, k);
        v.require(done.order == m + 1, "order is not m+1");
        v.require(kqm::wcompops::is_kqm_weighted(done.model, done.pi, m + 1, k).is_kqm(),
                  "is_kqm_weighted fails at m " + std::to_string(m) + ", k " + std::to_string(k));
        v.require(kqm::verify::defect_suite(done.model, done.pi, m + 1, k).all_zero(),
                  "defect_suite fails at m " + std::to_string(m) + ", k " + std::to_string(k));
        ++checked;
      }
  if (v.ok) v.detail = std::to_string(checked) + " completions, m = 1 verified at order 2";
  return v;
}

Verdict ac9() {
  Verdict v;
  Rng rng(1009);
  for (int it = 0; it < 30; ++it) {
    const int kappa = static_cast<int>(uniform(rng, 3, 5));
    const int m = static_cast<int>(uniform(rng, 2, std::min(3, kappa - 1)));
    const int k = static_cast<int>(uniform(rng, 1, 2));
    const auto base = kqm::testing::random_model(rng, kappa, m - 2, k, false);
    const auto unit = WeightFunction::unit(base.g);
    const auto plain = kqm::compops::solve_circuit(base, m, k);
    const auto weighted = kqm::wcompops::solve_weighted_circuit(base, unit, m, k);
    const auto* fp = std::get_if<MassSolutionFamily>(&plain);
    const auto* fw = std::get_if<MassSolutionFamily>(&weighted);
    v.require(fp && fw, "a solver reported infeasible");
    if (!fp || !fw) return v;
    v.require(fp->base == fw->base && fp->direction == fw->direction && fp->t_lower == fw->t_lower &&
                  fp->t_upper == fw->t_upper,
              "families differ");
    const auto mu = base.with_circuit_masses(fp->member(fp->sample_t()));
    v.require(kqm::compops::is_kqm(mu, m, k).circuit_defects == kqm::wcompops::is_kqm_weighted(mu, unit, m, k).circuit_defects,
              "circuit defects differ");
    const auto a = kqm::verify::defect_suite(mu, m, k);
    const auto b = kqm::verify::defect_suite(mu, unit, m, k);
    bool same = a.rows.size() == b.rows.size();
    for (std::size_t n = 0; same && n < a.rows.size(); ++n) same = a.rows[n].moments == b.rows[n].moments;
    v.require(same, "moment reports differ");
    for (long long p = kappa; p <= kappa + 2; ++p)
      for (const auto& [vertex, val] : kqm::wcompops::cond_exp(p, mu, unit, 5).values) v.require(val == 1, "E(|pi_p|^2 | ...) != 1");
  }
  if (v.ok) v.detail = "30 instances: families, defects, moments, conditional expectations";
  return v;
}

Verdict ac10() {
  Verdict v;
  Rng rng(1010);
  long long comparisons = 0;
  for (int it = 0; it < 50; ++it) {
    const int kappa = static_cast<int>(uniform(rng, 1, 4));
    const auto mu = kqm::testing::random_model(rng, kappa, 3, static_cast<int>(uniform(rng, 1, 3)));
    for (const auto& vertex : mu.g.vertices(10))
      for (long long p = 0; p <= 8; ++p) {
        v.require(kqm::graph::h_p_closed(vertex, p, mu) == kqm::graph::h_p_oracle(vertex, p, mu, 18),
                  "mismatch at " + kqm::graph::to_string(vertex));
        ++comparisons;
      }
  }
  if (v.ok) v.detail = "50 models, " + std::to_string(comparisons) + " comparisons";
  return v;
}

}  // namespace

int main() {
  criterion("AC1", "quadratic shift completion, t = 13", 1, ac1);
  criterion("AC2", "unique cubic shift completion", 1, ac2);
  criterion("AC3", "shift nonexistence certificate", 1, ac3);
  criterion("AC4", "circulant structure, 2 <= m < kappa <= 8", 1, ac4);
  criterion("AC5", "solve_circuit round trip", 30, ac5);
  criterion("AC6", "1-quasi-3 closed forms, kappa = 2, 3, 4", 60, ac6);
  criterion("AC7", "conditional expectation equals atom oracle", 60, ac7);
  criterion("AC8", "weighted single-branch round trip", 60, ac8);
  criterion("AC9", "unit weight reduces to the unweighted path", 60, ac9);
  criterion("AC10", "closed h_p equals preimage oracle", 300, ac10);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
