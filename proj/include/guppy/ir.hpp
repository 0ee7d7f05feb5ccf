#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "guppy/const_value.hpp"
#include "guppy/types.hpp"

namespace guppy {

using NodeId = std::uint32_t;
constexpr NodeId kInvalidNode = static_cast<NodeId>(-1);

enum class NodeKind {
  Module,
  FuncDefn,
  Input,
  Output,
  Const,
  Call,
  CallIndirect,
  LoadFunction,
  QuantumOp,
  IntOp,
  FloatOp,
  CmpOp,
  MakeTuple,
  UnpackTuple,
  ListOp,
  Tag,
  Conditional,
  Case,
  TailLoop,
  CFG,
  BasicBlock,
};

const char* node_kind_name(NodeKind k);
std::optional<NodeKind> node_kind_from_name(const std::string& name);

bool is_container_kind(NodeKind k);

enum class BlockRole { Entry, Exit, Dataflow };

// A port carries a plain value, a sum (tagged union over tuple rows), or a
// control token between basic blocks. Sum and control ports are never linear.
struct PortType {
  enum class Kind { Value, Sum, Control };
  Kind kind = Kind::Value;
  Type value_type;                       // Kind::Value
  std::vector<std::vector<Type>> rows;   // Kind::Sum

  static PortType value(Type t) {
    PortType p;
    p.kind = Kind::Value;
    p.value_type = std::move(t);
    return p;
  }
  static PortType sum(std::vector<std::vector<Type>> rows) {
    PortType p;
    p.kind = Kind::Sum;
    p.rows = std::move(rows);
    return p;
  }
  static PortType control() {
    PortType p;
    p.kind = Kind::Control;
    return p;
  }

  bool is_linear() const { return kind == Kind::Value && value_type.is_linear(); }
  bool operator==(const PortType& o) const;
  bool operator!=(const PortType& o) const { return !(*this == o); }
  std::string str() const;
};

struct FuncSig {
  std::vector<Type> params;
  Type result;
  bool operator==(const FuncSig& o) const { return params == o.params && result == o.result; }
};

// Kind-specific data. Which fields are meaningful depends on the node kind.
struct Payload {
  std::string name;                 // op name (quantum/int/float/cmp/list), func name
  int index = -1;                   // Case index, Tag variant
  std::optional<ConstValue> value;  // Const
  std::optional<FuncSig> sig;       // FuncDefn
  NodeId target = kInvalidNode;     // Call / LoadFunction
  BlockRole role = BlockRole::Dataflow;  // BasicBlock
};

struct Node {
  NodeId id = kInvalidNode;
  NodeId parent = kInvalidNode;  // kInvalidNode only for root
  NodeKind kind;
  Payload payload;
  std::vector<PortType> in_ports;
  std::vector<PortType> out_ports;
  std::vector<NodeId> children;  // in creation order
};

struct Edge {
  NodeId src;
  std::uint32_t src_port;
  NodeId dst;
  std::uint32_t dst_port;

  friend bool operator<(const Edge& a, const Edge& b) {
    return std::tie(a.src, a.src_port, a.dst, a.dst_port) <
           std::tie(b.src, b.src_port, b.dst, b.dst_port);
  }
  friend bool operator==(const Edge& a, const Edge& b) {
    return a.src == b.src && a.src_port == b.src_port && a.dst == b.dst &&
           a.dst_port == b.dst_port;
  }
};

class Graph {
 public:
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  NodeId root() const { return root_; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  std::uint64_t revision() const { return revision_; }

  // Edges grouped by endpoint; recomputed lazily after construction.
  std::vector<Edge> edges_from(NodeId n) const;
  std::vector<Edge> edges_into(NodeId n) const;
  std::vector<Edge> edges_from_port(NodeId n, std::uint32_t port) const;
  std::optional<Edge> edge_into_port(NodeId n, std::uint32_t port) const;

  std::optional<NodeId> find_function(const std::string& name) const;

 private:
  friend class GraphBuilder;
  friend class RewriteApplier;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;  // kept sorted once frozen
  NodeId root_ = kInvalidNode;
  std::uint64_t revision_ = 0;
};

struct BuildError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Wire {
  NodeId node = kInvalidNode;
  std::uint32_t port = 0;
};

// Incremental graph construction; `finish` freezes the graph. Port type
// mismatches and structural misuse throw BuildError.
class GraphBuilder {
 public:
  GraphBuilder();

  NodeId root() const { return g_.root_; }
  NodeId add_node(NodeKind kind, NodeId parent, std::vector<PortType> in,
                  std::vector<PortType> out, Payload payload = {});
  void connect(Wire src, NodeId dst, std::uint32_t dst_port);
  void connect(NodeId src, std::uint32_t src_port, NodeId dst, std::uint32_t dst_port);

  const Node& node(NodeId id) const { return g_.nodes_.at(id); }
  const PortType& out_port(Wire w) const { return g_.nodes_.at(w.node).out_ports.at(w.port); }

  Graph finish();

 private:
  Graph g_;
  std::vector<int> linear_consumers_;  // per (node,port) flattened lazily
  bool finished_ = false;
  std::vector<std::vector<int>> out_edge_count_;
};

struct Violation {
  int rule;  // 1..8
  std::string message;
  NodeId node = kInvalidNode;
};

// Checks the 8 structural rules; returns all violations found.
std::vector<Violation> validate(const Graph& g);

// Canonical JSON serialization. serialize requires a validated graph only by
// convention; it never inspects semantics.
std::string serialize(const Graph& g);

struct DeserializeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parses, rebuilds, and validates; throws DeserializeError on version
// mismatch, malformed documents, unknown kinds, or validation failure.
Graph deserialize(const std::string& bytes);

}  // namespace guppy
