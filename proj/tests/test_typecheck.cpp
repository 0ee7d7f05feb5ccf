#include <string>
#include <vector>

#include "doctest.h"
#include "guppy/ast.hpp"
#include "guppy/token.hpp"
#include "guppy/typecheck.hpp"

using namespace guppy;

namespace {

std::vector<Diagnostic> check(const std::string& src, const std::string& bindings_json = "{}") {
  auto toks = tokenize(src);
  REQUIRE(toks.ok());
  auto pr = parse_module(toks.tokens);
  REQUIRE(pr.ok());
  std::string err;
  auto b = parse_bindings(bindings_json, err);
  REQUIRE(b.has_value());
  return check_module(pr.module, *b).diagnostics;
}

void expect_one(const std::vector<Diagnostic>& ds, const char* code, int line, int col,
                std::size_t start, std::size_t end) {
  REQUIRE(ds.size() == 1);
  CHECK(diag_code(ds[0].category) == std::string(code));
  CHECK(ds[0].span.line == line);
  CHECK(ds[0].span.col == col);
  CHECK(ds[0].span.start == start);
  CHECK(ds[0].span.end == end);
}

}  // namespace

// The five canonical error snippets. Codes and spans are pinned: the span
// must cover exactly the offending token(s), not the whole statement.

TEST_CASE("use of a conditionally assigned variable is rejected at the use") {
  auto ds = check(
      "def f(b: bool) -> int:\n"
      "  if b:\n"
      "    var = 42\n"
      "  return var\n");
  expect_one(ds, "DEF002", 4, 10, 53, 56);  // `var` in `return var`
}

TEST_CASE("conflicting branch types are rejected at the first use") {
  auto ds = check(
      "def f(b: bool) -> int:\n"
      "  var = 42 if b else None\n"
      "  return var\n");
  expect_one(ds, "TYP002", 3, 10, 58, 61);  // `var` in `return var`
}

TEST_CASE("copying a qubit is rejected at the second use") {
  auto ds = check(
      "def f() -> tuple[Qubit, Qubit]:\n"
      "  q = Qubit()\n"
      "  return cx(q, q)\n");
  expect_one(ds, "LIN001", 3, 16, 61, 62);  // second `q`
}

TEST_CASE("dropping a linear return value is rejected at the call") {
  auto ds = check(
      "def f() -> None:\n"
      "  q = Qubit()\n"
      "  h(q)\n");
  expect_one(ds, "LIN002", 3, 3, 33, 37);  // the whole `h(q)` expression
}

TEST_CASE("guppy variables may not appear inside py expressions") {
  auto ds = check(
      "def f(x: int) -> int:\n"
      "  var = 42\n"
      "  return x + py(var + 1)\n");
  expect_one(ds, "PY001", 3, 17, 49, 52);  // `var` inside py(...)
}

// Remaining categories, pinned by code only.

TEST_CASE("missing annotations are signature errors") {
  auto ds = check("def f(x):\n  return x\n");
  REQUIRE(ds.size() == 2);  // parameter and return annotation
  CHECK(diag_code(ds[0].category) == std::string("TYP003"));
  CHECK(diag_code(ds[1].category) == std::string("TYP003"));
}

TEST_CASE("undefined names are reported") {
  auto ds = check("def f() -> int:\n  return y\n");
  REQUIRE(ds.size() == 1);
  CHECK(diag_code(ds[0].category) == std::string("DEF001"));
}

TEST_CASE("qubit consumed on only one path is rejected") {
  auto ds = check(
      "def f(b: bool) -> None:\n"
      "  q = Qubit()\n"
      "  if b:\n"
      "    r = measure(q)\n");
  REQUIRE(ds.size() == 1);
  CHECK(diag_code(ds[0].category) == std::string("LIN003"));
}

TEST_CASE("py expressions need a binding") {
  auto ds = check("def f() -> int:\n  return py(g.nodes())\n");
  REQUIRE(ds.size() == 1);
  CHECK(diag_code(ds[0].category) == std::string("PY002"));
}

TEST_CASE("arity mismatches are reported") {
  auto ds = check("def f() -> Qubit:\n  return h()\n");
  REQUIRE(ds.size() == 1);
  CHECK(diag_code(ds[0].category) == std::string("ARI001"));
}

TEST_CASE("int literals beyond 64 bits are rejected") {
  auto ds = check("def f() -> int:\n  return 99999999999999999999\n");
  REQUIRE(ds.size() == 1);
  CHECK(diag_code(ds[0].category) == std::string("OVF001"));
}

TEST_CASE("iterating a linear-element list is unsupported") {
  auto ds = check("def f(qs: list[Qubit]) -> None:\n  for q in qs:\n    discard(q)\n");
  REQUIRE(ds.size() == 1);
  CHECK(diag_code(ds[0].category) == std::string("TYP004"));
}

// Positive cases.

TEST_CASE("mutual recursion between top-level functions is allowed") {
  auto ds = check(
      "def f(n: int) -> int:\n"
      "  if n <= 0:\n"
      "    return 0\n"
      "  return g(n - 1)\n"
      "def g(n: int) -> int:\n"
      "  return f(n - 1)\n");
  CHECK(ds.empty());
}

TEST_CASE("gates can be used as first-class values") {
  auto ds = check("def f(q: Qubit) -> Qubit:\n  g = h\n  return g(q)\n");
  CHECK(ds.empty());
}

TEST_CASE("numeric tower coerces bool < int < float") {
  auto ds = check(
      "def f(b: bool, i: int, x: float) -> float:\n"
      "  return b + i + x\n");
  CHECK(ds.empty());
}

TEST_CASE("py constants adopt the bound type") {
  auto ds = check("def f() -> list[int]:\n  return py(xs)\n",
                  R"({"xs": {"type": "list[int]", "value": [1, 2, 3]}})");
  CHECK(ds.empty());
}

TEST_CASE("binding lookup strips whitespace from the key") {
  auto ds = check("def f() -> int:\n  return py( xs [ 0 ] )\n",
                  R"({"xs[0]": {"type": "int", "value": 7}})");
  CHECK(ds.empty());
}

TEST_CASE("join_types requires identical types") {
  CHECK(join_types(Type::int_(), Type::int_()).has_value());
  CHECK(!join_types(Type::int_(), Type::float_()).has_value());
  CHECK(!join_types(Type::int_(), Type::none()).has_value());
}
