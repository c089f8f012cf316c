#pragma once

// Command dispatch for the kqm tool. Exit codes: 0 success or verified,
// 2 certified nonexistence / infeasible / failed verification, 1 usage or
// schema error. JSON goes to `out`, diagnostics to `err`.

#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "kqm/compops.hpp"
#include "kqm/io.hpp"
#include "kqm/shift.hpp"
#include "kqm/verify.hpp"
#include "kqm/wcompops.hpp"

namespace kqm::cli {

using io::json;

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"complete-shift", "check-shift", "solve-circuit", "characterize",
                                              "complete-branch", "solve-weighted", "verify", "export-graph"};
  return names;
}

struct Args {
  std::string command;
  std::optional<std::string> file;  ///< standard input when absent
  std::optional<long long> depth;
  std::optional<std::string> t;
  std::optional<int> kappa;
  std::optional<int> approx;
  std::optional<std::string> export_graph;
};

enum Exit : int { kOk = 0, kUsage = 1, kInfeasible = 2 };

class UsageError : public Error {
 public:
  using Error::Error;
};

namespace detail {

/// Decimal square root with `digits` significant digits; presentation only.
inline std::string approx_sqrt(const Rational& q, int digits) {
  using Dec = boost::multiprecision::number<boost::multiprecision::cpp_dec_float<100>, boost::multiprecision::et_off>;
  const Dec value = Dec(numerator(q).str()) / Dec(denominator(q).str());
  return boost::multiprecision::sqrt(value).str(digits);
}

struct Context {
  const Args& args;
  io::ProblemFile pf;
  std::ostream& out;
  std::ostream& err;

  std::optional<Rational> t() const {
    if (args.t) return parse_rational(*args.t);
    return pf.options.t;
  }
  std::optional<long long> depth() const { return args.depth ? args.depth : pf.options.depth; }
  std::optional<int> approx() const { return args.approx ? args.approx : pf.options.approx_digits; }

  int emit(json result, json payload, int code) const {
    json doc{{"kind", pf.kind}, {"payload", std::move(payload)}, {"result", std::move(result)}};
    const json opts = io::options_json(pf.options);
    if (!opts.empty()) doc["options"] = opts;
    out << doc.dump(2) << "\n";
    return code;
  }
  int emit_infeasible(const std::string& reason, int code = kInfeasible) const {
    return emit(json{{"status", "infeasible"}, {"reason", reason}}, pf.payload, code);
  }
  void export_dot(const graph::CircuitGraph& g) const {
    if (!args.export_graph) return;
    std::ofstream f(*args.export_graph);
    if (!f) throw UsageError("cannot write " + *args.export_graph);
    f << graph::to_dot(g, depth().value_or(4));
  }
};

inline void require_kind(const Context& ctx, std::initializer_list<const char*> kinds) {
  for (const char* k : kinds)
    if (ctx.pf.kind == k) return;
  std::string list;
  for (const char* k : kinds) list += (list.empty() ? "" : " or ") + std::string(k);
  throw UsageError(ctx.args.command + " needs a " + list + " problem, got " + ctx.pf.kind);
}

inline int payload_int(const io::Cursor& p, const std::string& key) {
  p.require(key);
  return static_cast<int>(io::read_int(p.at(key)));
}

// --- shift -----------------------------------------------------------------------

inline json shift_result(const shift::ShiftCompletion& done, const shift::ShiftProblem& problem, std::optional<int> approx) {
  const std::size_t shown = done.rule.prefix.size() + 4;
  std::vector<Rational> squares;
  for (std::size_t n = 1; n <= shown; ++n) squares.push_back(done.rule(n));
  std::vector<Rational> tail(squares.begin() + static_cast<std::ptrdiff_t>(done.rule.prefix.size()), squares.end());
  json result{{"status", "completed"},
              {"w", io::to_json(done.w)},
              {"w_text", to_string(done.w)},
              {"strict", done.strict},
              {"squared_weights", io::to_json(squares)},
              {"tail_squared_weights", io::to_json(tail)},
              {"tail_from", done.rule.prefix.size() + 1}};
  if (done.t_used) result["t_used"] = to_string(*done.t_used);
  const auto check = shift::check_shift(done.rule, problem.m, problem.k, 100);
  result["check"] = json{{"horizon", 100}, {"ok", check.ok}};
  if (approx) {
    json weights = json::array();
    for (const auto& s : squares) weights.push_back(approx_sqrt(s, *approx));
    result["approx_weights"] = weights;
  }
  return result;
}

inline int complete_shift(const Context& ctx) {
  require_kind(ctx, {"shift"});
  auto problem = io::read_shift_problem(ctx.pf);
  problem.t = ctx.t();
  const auto res = shift::complete_shift(problem);
  json payload = ctx.pf.payload;
  if (const auto* cert = std::get_if<shift::NonexistenceCertificate>(&res)) {
    payload.erase("completion");
    return ctx.emit(json{{"status", "nonexistent"}, {"certificate", io::to_json(*cert)}}, payload, kInfeasible);
  }
  const auto& done = std::get<shift::ShiftCompletion>(res);
  payload["completion"] = io::to_json(done);
  return ctx.emit(shift_result(done, problem, ctx.approx()), payload, kOk);
}

/// The completion stored in the payload, or a fresh one.
inline std::optional<io::StoredCompletion> shift_completion(const Context& ctx, const shift::ShiftProblem& problem) {
  const io::Cursor p{ctx.pf.payload, "/payload"};
  if (p.has("completion")) return io::read_completion(p.at("completion"), problem.k);
  auto fresh = problem;
  fresh.t = ctx.t();
  const auto res = shift::complete_shift(fresh);
  if (const auto* done = std::get_if<shift::ShiftCompletion>(&res))
    return io::StoredCompletion{done->rule, done->strict, done->t_used};
  return std::nullopt;
}

inline int check_shift(const Context& ctx) {
  require_kind(ctx, {"shift"});
  const auto problem = io::read_shift_problem(ctx.pf);
  const io::Cursor p{ctx.pf.payload, "/payload"};
  shift::ShiftCheck check;
  long long horizon = 0;
  if (p.has("completion")) {
    const auto stored = io::read_completion(p.at("completion"), problem.k);
    horizon = ctx.depth().value_or(100);
    check = shift::check_shift(stored.rule, problem.m, problem.k, horizon);
  } else {
    // Only the given weights: every window that fits inside the data.
    horizon = static_cast<long long>(problem.l()) - problem.k - problem.m;
    if (horizon < 0) throw UsageError("need at least k+m weights (or a completion) to check");
    if (ctx.depth()) horizon = std::min(horizon, *ctx.depth());
    const auto squares = shift::detail::squares(problem.weights);
    check = shift::check_shift([&](std::size_t n) { return squares.at(n - 1); }, problem.m, problem.k, horizon);
  }
  json result{{"status", check.ok ? "ok" : "failed"}, {"horizon", horizon}};
  if (check.first_failure) {
    result["first_failure"] = *check.first_failure;
    result["value"] = to_string(check.value);
  }
  return ctx.emit(result, ctx.pf.payload, check.ok ? kOk : kInfeasible);
}

// --- graph -------------------------------------------------------------------------

inline json family_json(const compops::MassSolutionFamily& fam) {
  json out{{"base", io::to_json(fam.base)},
           {"direction", io::to_json(fam.direction)},
           {"kernel_dimension", fam.kernel_dimension},
           {"direction_is_all_ones", fam.direction_is_all_ones()}};
  out["t_lower"] = fam.t_lower ? json(to_string(*fam.t_lower)) : json(nullptr);
  out["t_upper"] = fam.t_upper ? json(to_string(*fam.t_upper)) : json(nullptr);
  return out;
}

inline int emit_family(const Context& ctx, const compops::SolveResult& res, graph::MeasureModel mu) {
  if (const auto* bad = std::get_if<compops::Infeasible>(&res))
    return ctx.emit(json{{"status", "infeasible"}, {"reason", bad->reason}, {"residual", to_string(bad->residual)}},
                    ctx.pf.payload, kInfeasible);
  const auto& fam = std::get<compops::MassSolutionFamily>(res);
  const Rational t = ctx.t().value_or(fam.sample_t());
  if (!fam.admits(t)) return ctx.emit_infeasible("t = " + to_string(t) + " leaves a circuit mass non-positive");
  mu.circuit_masses = fam.member(t);
  json payload = ctx.pf.payload;
  io::write_measure(payload, mu);
  ctx.export_dot(mu.g);
  return ctx.emit(json{{"status", "solved"}, {"family", family_json(fam)}, {"t", to_string(t)}}, payload, kOk);
}

inline int solve_circuit(const Context& ctx) {
  require_kind(ctx, {"graph"});
  const io::Cursor p{ctx.pf.payload, "/payload"};
  auto mu = io::read_measure(p);
  mu.circuit_masses.clear();
  return emit_family(ctx, compops::solve_circuit(mu, payload_int(p, "m"), payload_int(p, "k")), mu);
}

inline int solve_weighted(const Context& ctx) {
  require_kind(ctx, {"weighted"});
  const io::Cursor p{ctx.pf.payload, "/payload"};
  auto mu = io::read_measure(p);
  mu.circuit_masses.clear();
  const auto pi = p.has("weight_pi") ? io::read_weight(p.at("weight_pi"), mu.g) : wcompops::WeightFunction::unit(mu.g);
  return emit_family(ctx, wcompops::solve_weighted_circuit(mu, pi, payload_int(p, "m"), payload_int(p, "k")), mu);
}

inline int characterize(const Context& ctx) {
  require_kind(ctx, {"graph"});
  if (!ctx.args.kappa) throw UsageError("characterize needs --kappa 2|3|4");
  const int kappa = *ctx.args.kappa;
  if (kappa < 2 || kappa > 4) throw UsageError("--kappa must be 2, 3 or 4");
  const io::Cursor p{ctx.pf.payload, "/payload"};
  auto mu = io::read_measure(p);
  if (mu.g.kappa != kappa) throw UsageError("--kappa " + std::to_string(kappa) + " but the graph has kappa " + std::to_string(mu.g.kappa));
  mu.circuit_masses.clear();
  const auto res = compops::characterize_1q3(mu);
  if (const auto* bad = std::get_if<compops::Infeasible>(&res))
    return ctx.emit(json{{"status", "infeasible"}, {"reason", bad->reason}, {"residual", to_string(bad->residual)}},
                    ctx.pf.payload, kInfeasible);
  const auto& ch = std::get<compops::Characterization>(res);
  const Rational t = ctx.t().value_or(ch.t_lower + 1);
  if (t <= ch.t_lower) return ctx.emit_infeasible("t must exceed " + to_string(ch.t_lower));
  mu.circuit_masses = ch.masses(t);

  json constraints = json::array();
  for (const auto& c : ch.constraints)
    constraints.push_back(json{{"name", c.name}, {"lhs", to_string(c.lhs)}, {"rhs", to_string(c.rhs)}, {"satisfied", c.satisfied()}});
  json result{{"status", "characterized"},
              {"constraints", constraints},
              {"W", io::to_json(ch.w)},
              {"W_text", to_string(ch.w)},
              {"t_lower", to_string(ch.t_lower)},
              {"t", to_string(t)}};
  json displayed = json::object();
  bool agrees = true;
  auto put = [&](const char* key, const std::optional<Rational>& mine, const std::optional<Rational>& shown) {
    if (mine) result[key] = to_string(*mine);
    if (shown) {
      displayed[key] = to_string(*shown);
      agrees = agrees && mine && *mine == *shown;
    }
  };
  put("a", ch.a, ch.displayed_a);
  put("b", ch.b, ch.displayed_b);
  put("three_a_plus_b", ch.three_a_plus_b, ch.displayed_three_a_plus_b);
  result["displayed_formula"] = displayed;
  result["displayed_formula_agrees"] = agrees;

  json payload = ctx.pf.payload;
  io::write_measure(payload, mu);
  payload["m"] = 3;
  payload["k"] = 1;
  ctx.export_dot(mu.g);
  return ctx.emit(result, payload, kOk);
}

inline int complete_branch(const Context& ctx) {
  require_kind(ctx, {"graph", "weighted"});
  const io::Cursor p{ctx.pf.payload, "/payload"};
  p.require("b");
  const auto b = io::read_rationals(p.at("b"));
  const int k = payload_int(p, "k");
  std::optional<Rational> circuit_mass;
  if (p.has("circuit_mass")) circuit_mass = io::read_rational(p.at("circuit_mass"));
  json payload = json::object();
  json result{{"status", "completed"}};
  if (ctx.pf.kind == "graph") {
    const auto done = compops::complete_single_branch(b, k, circuit_mass.value_or(1), ctx.t());
    io::write_measure(payload, done.model);
    payload["m"] = done.order;
    result["w"] = io::to_json(done.w);
    result["w_text"] = to_string(done.w);
    result["order"] = done.order;
    ctx.export_dot(done.model.g);
  } else {
    const graph::CircuitGraph g{1, {1}};
    const auto pi = p.has("weight_pi") ? io::read_weight(p.at("weight_pi"), g) : wcompops::WeightFunction::unit(g);
    const auto done = wcompops::complete_single_branch_weighted(b, pi, k, circuit_mass);
    io::write_measure(payload, done.model);
    payload["weight_pi"] = io::to_json(done.pi, g);
    payload["m"] = done.order;
    result["nu"] = io::to_json(done.nu);
    result["nu_text"] = to_string(done.nu);
    result["order"] = done.order;
    ctx.export_dot(g);
  }
  payload["k"] = k;
  payload["b"] = io::to_json(b);
  if (circuit_mass) payload["circuit_mass"] = io::to_json(*circuit_mass);
  return ctx.emit(result, payload, kOk);
}

// --- verification ----------------------------------------------------------------------

inline json branch_checks_json(const std::vector<compops::BranchCheck>& checks) {
  json out = json::array();
  for (const auto& b : checks) {
    json row{{"r", b.r}, {"i", b.i}, {"ok", b.ok}, {"interpolant", io::to_json(b.interpolant)}};
    if (b.residual_at) {
      row["residual_at"] = *b.residual_at;
      row["residual"] = to_string(b.residual);
    }
    out.push_back(row);
  }
  return out;
}

inline json moment_report_json(const verify::MomentReport& rep) {
  json rows = json::array();
  for (const auto& row : rep.rows)
    rows.push_back(json{{"vertex", graph::to_string(row.vertex)}, {"moments", io::to_json(row.moments)}, {"defect", to_string(row.defect)}});
  json out{{"m", rep.m}, {"k", rep.k}, {"depth", rep.depth}, {"rows", rows}, {"all_zero", rep.all_zero()},
           {"max_abs_defect", to_string(rep.max_abs_defect)}};
  if (rep.first_failure) out["first_failure"] = graph::to_string(*rep.first_failure);
  return out;
}

inline int verify(const Context& ctx) {
  if (ctx.pf.kind == "shift") {
    const auto problem = io::read_shift_problem(ctx.pf);
    const auto done = shift_completion(ctx, problem);
    if (!done) return ctx.emit_infeasible("no completion exists for these weights");
    const long long depth = ctx.depth().value_or(verify::default_depth(problem.m, problem.k));
    const auto rep = verify::shift_defect_suite(done->rule, problem.m, problem.k, depth);
    json defects = json::array();
    for (const auto& d : rep.defects) defects.push_back(to_string(d));
    json result{{"status", rep.all_zero() ? "verified" : "failed"}, {"depth", depth}, {"defects", defects}};
    if (rep.first_failure) result["first_failure"] = *rep.first_failure;
    return ctx.emit(result, ctx.pf.payload, rep.all_zero() ? kOk : kInfeasible);
  }
  const io::Cursor p{ctx.pf.payload, "/payload"};
  const auto mu = io::read_measure(p);
  if (!mu.has_circuit_masses()) throw io::SchemaError("/payload/circuit_masses", "verify needs circuit masses");
  const int m = payload_int(p, "m");
  const int k = payload_int(p, "k");
  const auto depth = ctx.depth();
  json result;
  bool oracle_ok = false, criterion_ok = false;
  if (ctx.pf.kind == "graph") {
    const auto rep = verify::defect_suite(mu, m, k, depth);
    const auto crit = compops::is_kqm(mu, m, k);
    oracle_ok = rep.all_zero();
    criterion_ok = crit.is_kqm();
    json defects = json::array();
    for (const auto& d : crit.circuit_defects) defects.push_back(to_string(d));
    result["oracle"] = moment_report_json(rep);
    result["criterion"] = json{{"is_kqm", criterion_ok}, {"branches", branch_checks_json(crit.branches)},
                               {"circuit_defects", defects}, {"bound", to_string(crit.bound)}};
  } else {
    const auto pi = p.has("weight_pi") ? io::read_weight(p.at("weight_pi"), mu.g) : wcompops::WeightFunction::unit(mu.g);
    const auto rep = verify::defect_suite(mu, pi, m, k, depth);
    const auto crit = wcompops::is_kqm_weighted(mu, pi, m, k);
    oracle_ok = rep.all_zero();
    criterion_ok = crit.is_kqm();
    json defects = json::array();
    for (const auto& d : crit.circuit_defects) defects.push_back(to_string(d));
    result["oracle"] = moment_report_json(rep);
    result["criterion"] = json{{"is_kqm", criterion_ok},
                               {"branches", branch_checks_json(crit.branches)},
                               {"literal_branches", branch_checks_json(crit.literal_branches)},
                               {"circuit_defects", defects},
                               {"bound", to_string(crit.bound)}};
  }
  const bool ok = oracle_ok && criterion_ok;
  result["status"] = ok ? "verified" : (oracle_ok == criterion_ok ? "failed" : "inconsistent");
  return ctx.emit(result, ctx.pf.payload, ok ? kOk : kInfeasible);
}

inline int export_graph(const Context& ctx) {
  require_kind(ctx, {"graph", "weighted"});
  const io::Cursor p{ctx.pf.payload, "/payload"};
  graph::CircuitGraph g;
  if (p.has("kappa")) {
    g = io::read_measure(p).g;
  } else {
    g = graph::CircuitGraph{1, {1}};
  }
  const std::string dot = graph::to_dot(g, ctx.depth().value_or(4));
  if (ctx.args.export_graph) {
    ctx.export_dot(g);
  } else {
    ctx.out << dot;
  }
  return kOk;
}

}  // namespace detail

inline int run(const Args& args, std::istream& in, std::ostream& out, std::ostream& err) {
  try {
    if (std::find(commands().begin(), commands().end(), args.command) == commands().end())
      throw UsageError("unknown command '" + args.command + "'");
    std::string text;
    if (args.file) {
      std::ifstream f(*args.file);
      if (!f) throw UsageError("cannot read " + *args.file);
      text.assign(std::istreambuf_iterator<char>(f), {});
    } else {
      text.assign(std::istreambuf_iterator<char>(in), {});
    }
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw io::SchemaError("", std::string("malformed JSON: ") + e.what());
    }
    if (args.t) {
      try {
        parse_rational(*args.t);
      } catch (const DomainError& e) {
        throw UsageError(std::string("--t: ") + e.what());
      }
    }
    detail::Context ctx{args, io::read_problem(doc), out, err};
    const std::string& c = args.command;
    if (c == "complete-shift") return detail::complete_shift(ctx);
    if (c == "check-shift") return detail::check_shift(ctx);
    if (c == "solve-circuit") return detail::solve_circuit(ctx);
    if (c == "characterize") return detail::characterize(ctx);
    if (c == "complete-branch") return detail::complete_branch(ctx);
    if (c == "solve-weighted") return detail::solve_weighted(ctx);
    if (c == "verify") return detail::verify(ctx);
    return detail::export_graph(ctx);
  } catch (const io::SchemaError& e) {
    err << "schema error at " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    out << json{{"result", json{{"status", "infeasible"}, {"reason", e.what()}}}}.dump(2) << "\n";
    return kInfeasible;
  } catch (const PositivityError& e) {
    err << "infeasible: " << e.what() << "\n";
    out << json{{"result", json{{"status", "infeasible"}, {"reason", e.what()}, {"witness", e.witness()}}}}.dump(2) << "\n";
    return kInfeasible;
  } catch (const BoundednessError& e) {
    err << "unbounded: " << e.what() << "\n";
    return kInfeasible;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace kqm::cli
