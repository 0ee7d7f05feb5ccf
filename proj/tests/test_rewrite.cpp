#include <algorithm>
#include <string>

#include "doctest.h"
#include "guppy/compile.hpp"
#include "guppy/rewrite.hpp"
#include "guppy/sim.hpp"

using namespace guppy;

namespace {

Graph compiled(const std::string& src) {
  auto r = compile_source(src, ConstBindings{});
  REQUIRE(r.ok());
  return std::move(*r.graph);
}

long count_op(const Graph& g, NodeKind k, const std::string& op) {
  return std::count_if(g.nodes().begin(), g.nodes().end(), [&](const Node& n) {
    return n.kind == k && n.payload.name == op;
  });
}

}  // namespace

TEST_CASE("builtin rule registry") {
  CHECK(!builtin_rules().empty());
  CHECK(!rules_named("hh").empty());
  CHECK(!rules_named("cxcx").empty());
  CHECK(!rules_named("rzfuse").empty());
  CHECK(rules_named("no_such_rule").empty());
}

TEST_CASE("double hadamard cancels, triple leaves exactly one") {
  Graph g = compiled("def f(q: Qubit) -> Qubit:\n  return h(h(h(q)))\n");
  CHECK(count_op(g, NodeKind::QuantumOp, "h") == 3);
  Graph opt = run_pipeline(g, rules_named("hh"));
  CHECK(count_op(opt, NodeKind::QuantumOp, "h") == 1);
  CHECK(validate(opt).empty());
}

TEST_CASE("rz fusion folds two rotations into one rz plus a float add") {
  Graph g = compiled("def f(q: Qubit, a: float, b: float) -> Qubit:\n"
                     "  return rz(rz(q, a), b)\n");
  Graph opt = run_pipeline(g, rules_named("rzfuse"));
  CHECK(count_op(opt, NodeKind::QuantumOp, "rz") == 1);
  CHECK(count_op(opt, NodeKind::FloatOp, "add") == 1);
  CHECK(validate(opt).empty());
}

TEST_CASE("cx pairs cancel only with matching orientation") {
  Graph same = compiled("def f(a: Qubit, b: Qubit) -> tuple[Qubit, Qubit]:\n"
                        "  a, b = cx(a, b)\n"
                        "  a, b = cx(a, b)\n"
                        "  return a, b\n");
  CHECK(count_op(run_pipeline(same, rules_named("cxcx")), NodeKind::QuantumOp, "cx") == 0);

  Graph flipped = compiled("def f(a: Qubit, b: Qubit) -> tuple[Qubit, Qubit]:\n"
                           "  a, b = cx(a, b)\n"
                           "  b, a = cx(b, a)\n"
                           "  return a, b\n");
  CHECK(count_op(run_pipeline(flipped, rules_named("cxcx")), NodeKind::QuantumOp, "cx") == 2);
}

TEST_CASE("rewrites keep node ids dense and bump the revision") {
  Graph g = compiled("def f(q: Qubit) -> Qubit:\n  return h(h(q))\n");
  auto ms = find_matches(g, *rules_named("hh")[0]);
  REQUIRE(ms.size() == 1);
  Graph out = apply_rewrite(g, ms[0], *rules_named("hh")[0]);
  CHECK(out.revision() == g.revision() + 1);
  for (std::size_t i = 0; i < out.nodes().size(); ++i) CHECK(out.nodes()[i].id == i);
  CHECK(validate(out).empty());
}

TEST_CASE("stale matches are rejected") {
  Graph g = compiled("def f(q: Qubit) -> Qubit:\n  return h(h(h(h(q))))\n");
  const RewritePattern& hh = *rules_named("hh")[0];
  auto ms = find_matches(g, hh);
  REQUIRE(ms.size() >= 2);
  Graph once = apply_rewrite(g, ms[0], hh);
  // ms[1] was computed against the old revision
  CHECK_THROWS_AS(apply_rewrite(once, ms[1], hh), RewriteError);
}

TEST_CASE("overlapping matches are all reported") {
  Graph g = compiled("def f(q: Qubit) -> Qubit:\n  return h(h(h(q)))\n");
  CHECK(find_matches(g, *rules_named("hh")[0]).size() == 2);
}

TEST_CASE("optimization preserves simulated behaviour") {
  const char* src =
      "def main() -> bool:\n"
      "  q = h(h(h(Qubit())))\n"
      "  q = rz(rz(q, 0.3), 0.4)\n"
      "  return measure(q)\n";
  Graph g = compiled(src);
  std::vector<const RewritePattern*> rules;
  for (const auto& r : builtin_rules()) rules.push_back(&r);
  Graph opt = run_pipeline(g, rules);
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    RunOptions o;
    o.seed = seed;
    RunReport a = run(g, "main", {}, o);
    RunReport b = run(opt, "main", {}, o);
    CHECK(a.result == b.result);
  }
}
