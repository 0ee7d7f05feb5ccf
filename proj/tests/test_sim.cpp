#include <cmath>
#include <string>

#include "doctest.h"
#include "guppy/compile.hpp"
#include "guppy/sim.hpp"
#include "support/oracle.hpp"

using namespace guppy;

namespace {

Graph compiled(const std::string& src) {
  auto r = compile_source(src, ConstBindings{});
  REQUIRE(r.ok());
  return std::move(*r.graph);
}

}  // namespace

TEST_CASE("returned qubit order fixes the statevector bit order") {
  // first returned qubit is the most significant bit: |q0 q1> = |10> -> index 2
  Graph g = compiled(
      "def main() -> tuple[Qubit, Qubit]:\n"
      "  return x(Qubit()), Qubit()\n");
  auto sr = final_statevector(g, "main", {});
  REQUIRE(sr.amplitudes.size() == 4);
  CHECK(std::abs(sr.amplitudes[2] - oracle::cplx{1.0, 0.0}) < 1e-12);
}

TEST_CASE("entangled states with phases match the matrix oracle") {
  Graph g = compiled(
      "def main() -> tuple[Qubit, Qubit]:\n"
      "  a = h(Qubit())\n"
      "  b = Qubit()\n"
      "  a, b = cx(a, b)\n"
      "  b = rz(b, 0.7)\n"
      "  a, b = zz(a, b)\n"
      "  b = t(b)\n"
      "  a = tdg(a)\n"
      "  return a, b\n");
  auto sr = final_statevector(g, "main", {});

  oracle::MiniSim m;
  int a = m.alloc(), b = m.alloc();
  m.apply1(oracle::mat_h(), a);
  m.cx(a, b);
  m.apply1(oracle::mat_rz(0.7), b);
  m.zz(a, b);
  m.apply1(oracle::mat_t(), b);
  m.apply1(oracle::mat_tdg(), a);
  // oracle qubit 0 is the LSB; the production convention is reversed
  auto want = oracle::reverse_bits(m.amps, 2);
  CHECK(oracle::equal_up_to_phase(sr.amplitudes, want, 1e-12));
}

TEST_CASE("measurement projects and renormalizes") {
  Graph g = compiled(
      "def main() -> Qubit:\n"
      "  a = h(Qubit())\n"
      "  b = Qubit()\n"
      "  a, b = cx(a, b)\n"
      "  r = measure(a)\n"
      "  return b\n");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RunOptions o;
    o.seed = seed;
    auto sr = final_statevector(g, "main", {}, o);
    REQUIRE(sr.report.measurements.size() == 1);
    bool bit = sr.report.measurements[0].second;
    REQUIRE(sr.amplitudes.size() == 2);
    // post-measurement the partner collapses to the same basis state
    CHECK(std::abs(sr.amplitudes[bit ? 1 : 0] - oracle::cplx{1.0, 0.0}) < 1e-12);
    CHECK(sr.report.norm_deviation <= 1e-12);
  }
}

TEST_CASE("measurement statistics follow the born rule") {
  Graph g = compiled("def main() -> bool:\n  return measure(h(Qubit()))\n");
  int ones = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    RunOptions o;
    o.seed = seed;
    RunReport r = run(g, "main", {}, o);
    if (r.result.b) ++ones;
  }
  CHECK(ones > 430);
  CHECK(ones < 570);
}

TEST_CASE("same seed reproduces the full transcript") {
  Graph g = compiled(
      "def main() -> int:\n"
      "  acc = 0\n"
      "  for _ in range(8):\n"
      "    acc = (acc * 2) + (1 if measure(h(Qubit())) else 0)\n"
      "  return acc\n");
  RunOptions o;
  o.seed = 1234;
  RunReport a = run(g, "main", {}, o);
  RunReport b = run(g, "main", {}, o);
  CHECK(a.result == b.result);
  CHECK(a.measurements == b.measurements);
  CHECK(a.steps == b.steps);
  o.seed = 1235;
  bool all_same = true;
  for (std::uint64_t s = 1235; s < 1245; ++s) {
    o.seed = s;
    all_same = all_same && run(g, "main", {}, o).result == a.result;
  }
  CHECK(!all_same);
}

TEST_CASE("integer arithmetic follows floor/sign-of-divisor semantics") {
  Graph g = compiled(
      "def main(a: int, b: int) -> tuple[int, int]:\n"
      "  return a // b, a % b\n");
  auto go = [&](std::int64_t a, std::int64_t b) {
    RunReport r = run(g, "main", {Value::integer(a), Value::integer(b)});
    return std::make_pair(r.result.elems[0].i, r.result.elems[1].i);
  };
  CHECK(go(7, 2) == std::make_pair<std::int64_t, std::int64_t>(3, 1));
  CHECK(go(-7, 2) == std::make_pair<std::int64_t, std::int64_t>(-4, 1));
  CHECK(go(7, -2) == std::make_pair<std::int64_t, std::int64_t>(-4, -1));
  CHECK(go(-7, -2) == std::make_pair<std::int64_t, std::int64_t>(3, -1));
}

TEST_CASE("runtime traps carry stable kinds") {
  SUBCASE("integer overflow") {
    Graph g = compiled("def main(x: int) -> int:\n  return x + 1\n");
    try {
      run(g, "main", {Value::integer(INT64_MAX)});
      FAIL("expected trap");
    } catch (const RuntimeError& e) {
      CHECK(e.kind == "integer-overflow");
    }
  }
  SUBCASE("division by zero") {
    Graph g = compiled("def main(x: int) -> int:\n  return 7 // x\n");
    try {
      run(g, "main", {Value::integer(0)});
      FAIL("expected trap");
    } catch (const RuntimeError& e) {
      CHECK(e.kind == "division-by-zero");
    }
  }
  SUBCASE("float division by zero") {
    Graph g = compiled("def main(x: float) -> float:\n  return 1.0 / x\n");
    try {
      run(g, "main", {Value::real(0.0)});
      FAIL("expected trap");
    } catch (const RuntimeError& e) {
      CHECK(e.kind == "division-by-zero");
    }
  }
  SUBCASE("index out of range") {
    Graph g = compiled("def main(xs: list[int]) -> int:\n  return xs[5]\n");
    try {
      run(g, "main", {Value::list({Value::integer(1), Value::integer(2)})});
      FAIL("expected trap");
    } catch (const RuntimeError& e) {
      CHECK(e.kind == "index-out-of-range");
    }
  }
  SUBCASE("shift out of range") {
    Graph g = compiled("def main(x: int) -> int:\n  return 1 << x\n");
    try {
      run(g, "main", {Value::integer(70)});
      FAIL("expected trap");
    } catch (const RuntimeError& e) {
      CHECK(e.kind == "shift-out-of-range");
    }
  }
  SUBCASE("step limit") {
    Graph g = compiled(
        "def main() -> int:\n"
        "  i = 0\n"
        "  while True:\n"
        "    i = i + 1\n"
        "  return i\n");
    RunOptions o;
    o.max_steps = 1000;
    try {
      run(g, "main", {}, o);
      FAIL("expected trap");
    } catch (const RuntimeError& e) {
      CHECK(e.kind == "step-limit-exceeded");
    }
  }
}

TEST_CASE("linear list operations thread the list value") {
  Graph g = compiled(
      "def main(qs: list[Qubit]) -> tuple[int, list[Qubit]]:\n"
      "  n, qs = len(qs)\n"
      "  acc = n * 1000\n"
      "  q, qs = get(qs, 0)\n"
      "  acc = (acc * 2) + (1 if measure(q) else 0)\n"
      "  q, qs = get(qs, 1)\n"
      "  acc = (acc * 2) + (1 if measure(q) else 0)\n"
      "  q, qs = get(qs, 0)\n"
      "  acc = (acc * 2) + (1 if measure(q) else 0)\n"
      "  return acc, qs\n");
  std::vector<Value> arg{Value::list({
      Value::qubit_arg({0.0, 0.0}, {1.0, 0.0}),  // |1>
      Value::qubit_arg({1.0, 0.0}, {0.0, 0.0}),  // |0>
      Value::qubit_arg({0.0, 0.0}, {1.0, 0.0}),  // |1>
  })};
  RunReport r = run(g, "main", arg);
  // len=3; removal order picks |1>, |1>, |0>: ((3000*2+1)*2+1)*2+0
  CHECK(r.result.elems[0].i == 24006);
  CHECK(r.result.elems[1].elems.empty());
  CHECK(r.qubits_leaked == 0);
}

TEST_CASE("qubit arguments can be prepared in arbitrary states") {
  double a0 = std::sqrt(0.3), a1 = std::sqrt(0.7);
  Graph g = compiled("def main(q: Qubit) -> Qubit:\n  return q\n");
  auto sr = final_statevector(g, "main", {Value::qubit_arg({a0, 0.0}, {0.0, a1})});
  REQUIRE(sr.amplitudes.size() == 2);
  CHECK(std::abs(sr.amplitudes[0] - oracle::cplx{a0, 0.0}) < 1e-12);
  CHECK(std::abs(sr.amplitudes[1] - oracle::cplx{0.0, a1}) < 1e-12);
}

TEST_CASE("missing entry point is reported") {
  Graph g = compiled("def main() -> int:\n  return 0\n");
  CHECK_THROWS_AS(run(g, "nope", {}), RuntimeError);
}
