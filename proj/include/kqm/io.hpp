#pragma once

// JSON problem files. Rationals are strings "p/q" (or "p"), polynomials are
// coefficient arrays lowest degree first, and every object rejects unknown keys.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "kqm/exact.hpp"
#include "kqm/graph.hpp"
#include "kqm/shift.hpp"
#include "kqm/wcompops.hpp"

namespace kqm::io {

using json = nlohmann::json;
using graph::Vertex;

/// Malformed input; `pointer` is the JSON pointer of the offending value.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& pointer, const std::string& what)
      : Error((pointer.empty() ? std::string("/") : pointer) + ": " + what), pointer_(pointer) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

/// A JSON value together with its pointer, for error messages.
struct Cursor {
  const json& value;
  std::string path;

  Cursor at(const std::string& key) const { return {value.at(key), path + "/" + key}; }
  Cursor at(std::size_t index) const { return {value.at(index), path + "/" + std::to_string(index)}; }
  bool has(const std::string& key) const { return value.contains(key) && !value.at(key).is_null(); }

  [[noreturn]] void fail(const std::string& what) const { throw SchemaError(path, what); }

  const json& object(std::initializer_list<const char*> allowed) const {
    if (!value.is_object()) fail("expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : value.items())
      if (!ok.contains(item.key())) throw SchemaError(path + "/" + item.key(), "unknown field");
    return value;
  }
  void require(const std::string& key) const {
    if (!has(key)) throw SchemaError(path + "/" + key, "missing required field");
  }
  const json& array() const {
    if (!value.is_array()) fail("expected an array");
    return value;
  }
};

inline Rational read_rational(const Cursor& c) {
  if (c.value.is_number_integer()) return Rational(c.value.get<long long>());
  if (!c.value.is_string()) c.fail("expected a rational string \"p/q\"");
  try {
    return parse_rational(c.value.get<std::string>());
  } catch (const DomainError& e) {
    c.fail(e.what());
  }
}

inline long long read_int(const Cursor& c) {
  if (!c.value.is_number_integer()) c.fail("expected an integer");
  return c.value.get<long long>();
}

inline std::vector<Rational> read_rationals(const Cursor& c) {
  std::vector<Rational> out;
  for (std::size_t n = 0; n < c.array().size(); ++n) out.push_back(read_rational(c.at(n)));
  return out;
}

inline Poly read_poly(const Cursor& c) { return Poly(read_rationals(c)); }

inline json to_json(const Rational& q) { return to_string(q); }

inline json to_json(const std::vector<Rational>& v) {
  json out = json::array();
  for (const auto& q : v) out.push_back(to_string(q));
  return out;
}

inline json to_json(const Poly& p) { return to_json(p.coeffs()); }

// --- graph and measure -------------------------------------------------------------

/// {prefix, tail: {coeffs, from_j}}. A tail may start inside the prefix as
/// long as the overlapping prefix entries agree with it.
inline graph::BranchRule read_branch_rule(const Cursor& c) {
  graph::BranchRule rule;
  rule.prefix = c.has("prefix") ? read_rationals(c.at("prefix")) : std::vector<Rational>{};
  c.require("tail");
  const Cursor tail = c.at("tail");
  tail.object({"coeffs", "from_j"});
  tail.require("coeffs");
  rule.tail = read_poly(tail.at("coeffs"));
  const long long from_j = tail.has("from_j") ? read_int(tail.at("from_j")) : rule.from_j();
  if (from_j < 1) tail.at("from_j").fail("from_j must be >= 1");
  if (from_j > rule.from_j()) tail.at("from_j").fail("tail must start right after the prefix");
  while (static_cast<long long>(rule.prefix.size()) >= from_j) {
    const long long j = static_cast<long long>(rule.prefix.size());
    if (rule.prefix.back() != rule.tail(j)) c.at("prefix").at(static_cast<std::size_t>(j - 1)).fail("disagrees with the tail polynomial");
    rule.prefix.pop_back();
  }
  return rule;
}

inline json to_json(const graph::BranchRule& rule, int r, int i) {
  return json{{"r", r},
              {"i", i},
              {"prefix", to_json(rule.prefix)},
              {"tail", json{{"coeffs", to_json(rule.tail)}, {"from_j", rule.from_j()}}}};
}

/// Reads kappa, etas and the branch list from a graph payload; circuit
/// masses are optional.
inline graph::MeasureModel read_measure(const Cursor& c) {
  graph::MeasureModel mu;
  c.require("kappa");
  c.require("etas");
  mu.g.kappa = static_cast<int>(read_int(c.at("kappa")));
  if (mu.g.kappa < 1) c.at("kappa").fail("kappa must be >= 1");
  for (std::size_t n = 0; n < c.at("etas").array().size(); ++n) mu.g.etas.push_back(static_cast<int>(read_int(c.at("etas").at(n))));
  if (mu.g.etas.size() != static_cast<std::size_t>(mu.g.kappa)) c.at("etas").fail("needs exactly kappa entries");
  try {
    mu.g.validate();
  } catch (const DomainError& e) {
    c.at("etas").fail(e.what());
  }
  if (c.has("circuit_masses")) {
    mu.circuit_masses = read_rationals(c.at("circuit_masses"));
    if (mu.circuit_masses.size() != static_cast<std::size_t>(mu.g.kappa)) c.at("circuit_masses").fail("needs exactly kappa entries");
  }
  mu.branches.resize(static_cast<std::size_t>(mu.g.kappa));
  for (int r = 1; r <= mu.g.kappa; ++r) mu.branches[static_cast<std::size_t>(r - 1)].resize(static_cast<std::size_t>(mu.g.eta(r)));
  std::set<std::pair<int, int>> seen;
  c.require("branches");
  const Cursor list = c.at("branches");
  for (std::size_t n = 0; n < list.array().size(); ++n) {
    const Cursor b = list.at(n);
    b.object({"r", "i", "prefix", "tail"});
    b.require("r");
    b.require("i");
    const int r = static_cast<int>(read_int(b.at("r")));
    const int i = static_cast<int>(read_int(b.at("i")));
    if (!mu.g.contains(Vertex::branch(r, i, 1))) b.fail("no branch (" + std::to_string(r) + "," + std::to_string(i) + ") in this graph");
    if (!seen.insert({r, i}).second) b.fail("branch listed twice");
    mu.branches[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(i - 1)] = read_branch_rule(b);
  }
  for (int r = 1; r <= mu.g.kappa; ++r)
    for (int i = 1; i <= mu.g.eta(r); ++i)
      if (!seen.contains({r, i})) list.fail("missing branch (" + std::to_string(r) + "," + std::to_string(i) + ")");
  try {
    mu.validate();
  } catch (const DomainError& e) {
    c.fail(e.what());
  }
  return mu;
}

/// Writes kappa, etas, branches and (when present) circuit masses into `out`.
inline void write_measure(json& out, const graph::MeasureModel& mu) {
  out["kappa"] = mu.g.kappa;
  out["etas"] = mu.g.etas;
  json list = json::array();
  for (int r = 1; r <= mu.g.kappa; ++r)
    for (int i = 1; i <= mu.g.eta(r); ++i) list.push_back(to_json(mu.rule(r, i), r, i));
  out["branches"] = list;
  if (mu.has_circuit_masses()) out["circuit_masses"] = to_json(mu.circuit_masses);
  else out.erase("circuit_masses");
}

inline wcompops::WeightFunction read_weight(const Cursor& c, const graph::CircuitGraph& g) {
  c.object({"circuit_values", "branches"});
  wcompops::WeightFunction pi = wcompops::WeightFunction::unit(g);
  if (c.has("circuit_values")) {
    pi.circuit_values = read_rationals(c.at("circuit_values"));
    if (pi.circuit_values.size() != static_cast<std::size_t>(g.kappa)) c.at("circuit_values").fail("needs exactly kappa entries");
  }
  if (c.has("branches")) {
    const Cursor list = c.at("branches");
    for (std::size_t n = 0; n < list.array().size(); ++n) {
      const Cursor b = list.at(n);
      b.object({"r", "i", "prefix", "tail"});
      b.require("r");
      b.require("i");
      const int r = static_cast<int>(read_int(b.at("r")));
      const int i = static_cast<int>(read_int(b.at("i")));
      if (!g.contains(Vertex::branch(r, i, 1))) b.fail("no branch (" + std::to_string(r) + "," + std::to_string(i) + ") in this graph");
      wcompops::BranchWeight w;
      if (b.has("prefix")) w.prefix = read_rationals(b.at("prefix"));
      if (b.has("tail")) {
        const graph::BranchRule rule = read_branch_rule(b);
        if (rule.tail.degree() > 0) b.at("tail").at("coeffs").fail("weight tails must be constant");
        w.prefix = rule.prefix;
        w.tail = rule.tail.coeff(0);
      }
      pi.branches[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(i - 1)] = std::move(w);
    }
  }
  try {
    pi.validate(g);
  } catch (const DomainError& e) {
    c.fail(e.what());
  }
  return pi;
}

inline json to_json(const wcompops::WeightFunction& pi, const graph::CircuitGraph& g) {
  json list = json::array();
  for (int r = 1; r <= g.kappa; ++r)
    for (int i = 1; i <= g.eta(r); ++i) {
      const auto& b = pi.branch(r, i);
      list.push_back(json{{"r", r},
                          {"i", i},
                          {"prefix", to_json(b.prefix)},
                          {"tail", json{{"coeffs", to_json(Poly::constant(b.tail))}, {"from_j", b.settled_from()}}}});
    }
  return json{{"circuit_values", to_json(pi.circuit_values)}, {"branches", list}};
}

// --- shift ---------------------------------------------------------------------------

inline shift::FillerPolicy read_filler(const Cursor& c) {
  if (c.value.is_array()) return read_rationals(c);
  c.object({"constant"});
  c.require("constant");
  return shift::ConstantFiller{read_rational(c.at("constant"))};
}

inline json to_json(const shift::FillerPolicy& f) {
  if (const auto* seq = std::get_if<std::vector<Rational>>(&f)) return to_json(*seq);
  return json{{"constant", to_string(std::get<shift::ConstantFiller>(f).value)}};
}

/// The squared-weight rule of a stored completion.
struct StoredCompletion {
  shift::SquaredWeightRule rule;
  bool strict = false;
  std::optional<Rational> t_used;
};

inline StoredCompletion read_completion(const Cursor& c, int k) {
  c.object({"w", "squared_prefix", "strict", "t_used"});
  c.require("w");
  c.require("squared_prefix");
  StoredCompletion out;
  out.rule.k = k;
  out.rule.w = read_poly(c.at("w"));
  out.rule.prefix = read_rationals(c.at("squared_prefix"));
  for (std::size_t n = 0; n < out.rule.prefix.size(); ++n)
    if (out.rule.prefix[n] <= 0) c.at("squared_prefix").at(n).fail("squared weights must be positive");
  if (out.rule.w(0) == 0) c.at("w").fail("w(0) must be non-zero");
  if (c.has("strict")) {
    if (!c.at("strict").value.is_boolean()) c.at("strict").fail("expected a boolean");
    out.strict = c.at("strict").value.get<bool>();
  }
  if (c.has("t_used")) out.t_used = read_rational(c.at("t_used"));
  return out;
}

inline json to_json(const shift::ShiftCompletion& done) {
  json out{{"w", to_json(done.w)}, {"squared_prefix", to_json(done.rule.prefix)}, {"strict", done.strict}};
  if (done.t_used) out["t_used"] = to_string(*done.t_used);
  return out;
}

inline json to_json(const shift::NonexistenceCertificate& cert) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, shift::AltDiffNonzero>)
          return json{{"alt_diff", json{{"n", c.n}, {"value", to_string(c.value)}}}};
        else if constexpr (std::is_same_v<T, shift::InterpolantMismatch>)
          return json{{"interpolant_mismatch",
                       json{{"node", c.node}, {"expected", to_string(c.expected)}, {"got", to_string(c.got)}}}};
        else
          return json{{"positivity", json{{"witness", c.witness}}}};
      },
      cert);
}

// --- problem files ------------------------------------------------------------------

struct Options {
  std::optional<long long> depth;
  std::optional<Rational> t;
  std::optional<shift::FillerPolicy> filler;
  std::optional<int> approx_digits;
};

struct ProblemFile {
  std::string kind;  ///< shift | graph | weighted
  json payload;
  Options options;
};

inline ProblemFile read_problem(const json& doc) {
  const Cursor root{doc, ""};
  root.object({"kind", "payload", "options", "result"});
  root.require("kind");
  root.require("payload");
  ProblemFile pf;
  if (!doc.at("kind").is_string()) root.at("kind").fail("expected a string");
  pf.kind = doc.at("kind").get<std::string>();
  if (pf.kind != "shift" && pf.kind != "graph" && pf.kind != "weighted")
    root.at("kind").fail("expected one of shift, graph, weighted");
  pf.payload = doc.at("payload");
  if (pf.kind == "shift")
    root.at("payload").object({"m", "k", "weights", "completion"});
  else
    root.at("payload").object({"kappa", "etas", "circuit_masses", "branches", "m", "k", "b", "circuit_mass", "weight_pi"});
  if (pf.kind != "weighted" && pf.payload.contains("weight_pi"))
    throw SchemaError("/payload/weight_pi", "only weighted problems carry a weight");
  if (root.has("options")) {
    const Cursor o = root.at("options");
    o.object({"depth", "t", "filler", "approx_digits"});
    if (o.has("depth")) pf.options.depth = read_int(o.at("depth"));
    if (o.has("t")) pf.options.t = read_rational(o.at("t"));
    if (o.has("filler")) pf.options.filler = read_filler(o.at("filler"));
    if (o.has("approx_digits")) pf.options.approx_digits = static_cast<int>(read_int(o.at("approx_digits")));
  }
  return pf;
}

inline json options_json(const Options& o) {
  json out = json::object();
  if (o.depth) out["depth"] = *o.depth;
  if (o.t) out["t"] = to_string(*o.t);
  if (o.filler) out["filler"] = to_json(*o.filler);
  if (o.approx_digits) out["approx_digits"] = *o.approx_digits;
  return out;
}

inline shift::ShiftProblem read_shift_problem(const ProblemFile& pf) {
  const Cursor p{pf.payload, "/payload"};
  p.require("m");
  p.require("k");
  p.require("weights");
  shift::ShiftProblem problem;
  problem.m = static_cast<int>(read_int(p.at("m")));
  problem.k = static_cast<int>(read_int(p.at("k")));
  problem.weights = read_rationals(p.at("weights"));
  if (pf.options.filler) problem.filler = *pf.options.filler;
  problem.t = pf.options.t;
  try {
    problem.validate();
  } catch (const DomainError& e) {
    p.fail(e.what());
  }
  return problem;
}

}  // namespace kqm::io
