#include <algorithm>
#include <string>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "guppy/compile.hpp"
#include "guppy/ir.hpp"

using namespace guppy;

namespace {

// module -> funcdefn f: int -> int -> { input, output } with a pass-through
// edge. The smallest validation-clean graph with a real dataflow body.
Graph identity_fn() {
  GraphBuilder b;
  Payload fp;
  fp.name = "f";
  fp.sig = FuncSig{{Type::int_()}, Type::int_()};
  NodeId f = b.add_node(NodeKind::FuncDefn, b.root(), {}, {}, std::move(fp));
  NodeId in = b.add_node(NodeKind::Input, f, {}, {PortType::value(Type::int_())});
  NodeId out = b.add_node(NodeKind::Output, f, {PortType::value(Type::int_())}, {});
  b.connect(in, 0, out, 0);
  return b.finish();
}

Graph compiled(const std::string& src, LoweringMode mode = LoweringMode::Structured) {
  auto r = compile_source(src, ConstBindings{}, mode);
  REQUIRE(r.ok());
  return std::move(*r.graph);
}

}  // namespace

TEST_CASE("hand-built graphs validate clean") {
  Graph g = identity_fn();
  CHECK(validate(g).empty());
  CHECK(g.find_function("f").has_value());
  CHECK(!g.find_function("missing").has_value());
}

TEST_CASE("builder rejects port type mismatches") {
  GraphBuilder b;
  Payload fp;
  fp.name = "f";
  fp.sig = FuncSig{{Type::int_()}, Type::int_()};
  NodeId f = b.add_node(NodeKind::FuncDefn, b.root(), {}, {}, std::move(fp));
  NodeId in = b.add_node(NodeKind::Input, f, {}, {PortType::value(Type::float_())});
  NodeId out = b.add_node(NodeKind::Output, f, {PortType::value(Type::int_())}, {});
  CHECK_THROWS_AS(b.connect(in, 0, out, 0), BuildError);
}

TEST_CASE("unconsumed linear out-port violates rule 3") {
  GraphBuilder b;
  Payload fp;
  fp.name = "f";
  fp.sig = FuncSig{{Type::qubit()}, Type::none()};
  NodeId f = b.add_node(NodeKind::FuncDefn, b.root(), {}, {}, std::move(fp));
  b.add_node(NodeKind::Input, f, {}, {PortType::value(Type::qubit())});
  b.add_node(NodeKind::Output, f, {}, {});
  Graph g = b.finish();
  auto vs = validate(g);
  REQUIRE(!vs.empty());
  CHECK(vs[0].rule == 3);
}

TEST_CASE("serialization is canonical and round-trips byte-identically") {
  Graph g = compiled(
      "def f(q: Qubit, a: float) -> Qubit:\n"
      "  return h(rz(h(q), a))\n");
  std::string s1 = serialize(g);
  Graph g2 = deserialize(s1);
  std::string s2 = serialize(g2);
  CHECK(s1 == s2);
  CHECK(s1.back() == '\n');

  auto doc = nlohmann::json::parse(s1);
  CHECK(doc.at("version") == 1);
  // node ids are dense and ascending
  for (std::size_t i = 0; i < doc.at("nodes").size(); ++i)
    CHECK(doc.at("nodes")[i].at("id") == i);
  // edges are sorted by (src, src_port, dst, dst_port)
  const auto& es = g2.edges();
  CHECK(std::is_sorted(es.begin(), es.end()));
}

TEST_CASE("two compilations of the same source serialize identically") {
  const char* src =
      "def f(n: int) -> int:\n"
      "  acc = 0\n"
      "  for i in range(n):\n"
      "    acc = acc + i\n"
      "  return acc\n";
  CHECK(serialize(compiled(src)) == serialize(compiled(src)));
  CHECK(serialize(compiled(src, LoweringMode::Cfg)) ==
        serialize(compiled(src, LoweringMode::Cfg)));
}

TEST_CASE("deserialize rejects malformed documents") {
  Graph g = identity_fn();
  auto doc = nlohmann::json::parse(serialize(g));

  SUBCASE("version mismatch") {
    doc["version"] = 2;
    CHECK_THROWS_AS(deserialize(doc.dump()), DeserializeError);
  }
  SUBCASE("unknown node kind") {
    doc["nodes"][1]["kind"] = "warp_gate";
    CHECK_THROWS_AS(deserialize(doc.dump()), DeserializeError);
  }
  SUBCASE("dangling edge endpoint") {
    doc["edges"][0]["dst"][0] = 99;
    CHECK_THROWS_AS(deserialize(doc.dump()), DeserializeError);
  }
  SUBCASE("not json at all") {
    CHECK_THROWS_AS(deserialize("***"), DeserializeError);
  }
  SUBCASE("validation runs on load") {
    doc["edges"] = nlohmann::json::array();  // output loses its producer
    CHECK_THROWS_AS(deserialize(doc.dump()), DeserializeError);
  }
}

TEST_CASE("structured lowering emits structured nodes, cfg lowering does not") {
  const char* src =
      "def f(n: int) -> int:\n"
      "  acc = 0\n"
      "  while acc < n:\n"
      "    acc = acc + 2\n"
      "  return acc\n";
  Graph s = compiled(src, LoweringMode::Structured);
  Graph c = compiled(src, LoweringMode::Cfg);
  auto count = [](const Graph& g, NodeKind k) {
    return std::count_if(g.nodes().begin(), g.nodes().end(),
                         [&](const Node& n) { return n.kind == k; });
  };
  CHECK(count(s, NodeKind::TailLoop) == 1);
  CHECK(count(s, NodeKind::CFG) == 0);
  CHECK(count(c, NodeKind::TailLoop) == 0);
  CHECK(count(c, NodeKind::CFG) == 1);
  CHECK(count(c, NodeKind::BasicBlock) >= 3);  // entry, loop blocks, exit
  CHECK(validate(s).empty());
  CHECK(validate(c).empty());
}
