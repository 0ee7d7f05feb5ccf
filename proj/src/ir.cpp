#include "guppy/ir.hpp"

#include <algorithm>
#include <sstream>

namespace guppy {

const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Module: return "module";
    case NodeKind::FuncDefn: return "func_defn";
    case NodeKind::Input: return "input";
    case NodeKind::Output: return "output";
    case NodeKind::Const: return "const";
    case NodeKind::Call: return "call";
    case NodeKind::CallIndirect: return "call_indirect";
    case NodeKind::LoadFunction: return "load_function";
    case NodeKind::QuantumOp: return "quantum_op";
    case NodeKind::IntOp: return "int_op";
    case NodeKind::FloatOp: return "float_op";
    case NodeKind::CmpOp: return "cmp_op";
    case NodeKind::MakeTuple: return "make_tuple";
    case NodeKind::UnpackTuple: return "unpack_tuple";
    case NodeKind::ListOp: return "list_op";
    case NodeKind::Tag: return "tag";
    case NodeKind::Conditional: return "conditional";
    case NodeKind::Case: return "case";
    case NodeKind::TailLoop: return "tail_loop";
    case NodeKind::CFG: return "cfg";
    case NodeKind::BasicBlock: return "basic_block";
  }
  return "unknown";
}

std::optional<NodeKind> node_kind_from_name(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(NodeKind::BasicBlock); ++k) {
    if (name == node_kind_name(static_cast<NodeKind>(k))) return static_cast<NodeKind>(k);
  }
  return std::nullopt;
}

bool is_container_kind(NodeKind k) {
  switch (k) {
    case NodeKind::Module:
    case NodeKind::FuncDefn:
    case NodeKind::Conditional:
    case NodeKind::Case:
    case NodeKind::TailLoop:
    case NodeKind::CFG:
    case NodeKind::BasicBlock:
      return true;
    default:
      return false;
  }
}

bool PortType::operator==(const PortType& o) const {
  if (kind != o.kind) return false;
  if (kind == Kind::Value) return value_type == o.value_type;
  if (kind == Kind::Sum) return rows == o.rows;
  return true;
}

std::string PortType::str() const {
  switch (kind) {
    case Kind::Value:
      return value_type.tag();
    case Kind::Control:
      return "control";
    case Kind::Sum: {
      std::ostringstream out;
      out << "sum[";
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i) out << ";";
        out << "[";
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
          if (j) out << ",";
          out << rows[i][j].tag();
        }
        out << "]";
      }
      out << "]";
      return out.str();
    }
  }
  return "?";
}

std::vector<Edge> Graph::edges_from(NodeId n) const {
  std::vector<Edge> out;
  for (const auto& e : edges_)
    if (e.src == n) out.push_back(e);
  return out;
}

std::vector<Edge> Graph::edges_into(NodeId n) const {
  std::vector<Edge> out;
  for (const auto& e : edges_)
    if (e.dst == n) out.push_back(e);
  return out;
}

std::vector<Edge> Graph::edges_from_port(NodeId n, std::uint32_t port) const {
  std::vector<Edge> out;
  for (const auto& e : edges_)
    if (e.src == n && e.src_port == port) out.push_back(e);
  return out;
}

std::optional<Edge> Graph::edge_into_port(NodeId n, std::uint32_t port) const {
  for (const auto& e : edges_)
    if (e.dst == n && e.dst_port == port) return e;
  return std::nullopt;
}

std::optional<NodeId> Graph::find_function(const std::string& name) const {
  for (NodeId child : node(root_).children) {
    const Node& n = node(child);
    if (n.kind == NodeKind::FuncDefn && n.payload.name == name) return child;
  }
  return std::nullopt;
}

GraphBuilder::GraphBuilder() {
  g_.root_ = add_node(NodeKind::Module, kInvalidNode, {}, {});
}

NodeId GraphBuilder::add_node(NodeKind kind, NodeId parent, std::vector<PortType> in,
                              std::vector<PortType> out, Payload payload) {
  if (finished_) throw BuildError("builder already finished");
  NodeId id = static_cast<NodeId>(g_.nodes_.size());
  if (kind == NodeKind::Module) {
    if (!g_.nodes_.empty()) throw BuildError("module node must be the root");
  } else {
    if (parent == kInvalidNode || parent >= g_.nodes_.size())
      throw BuildError("node parent does not exist");
    Node& p = g_.nodes_[parent];
    if (!is_container_kind(p.kind)) throw BuildError("cannot add a child to a leaf node");
    if (p.kind == NodeKind::BasicBlock && p.payload.role == BlockRole::Exit)
      throw BuildError("exit blocks have no children");
    if (kind == NodeKind::Case) {
      if (p.kind != NodeKind::Conditional) throw BuildError("case outside conditional");
      for (NodeId sib : p.children) {
        if (g_.nodes_[sib].payload.index == payload.index)
          throw BuildError("duplicate case index");
      }
    }
    p.children.push_back(id);
  }
  Node n;
  n.id = id;
  n.parent = parent;
  n.kind = kind;
  n.payload = std::move(payload);
  n.in_ports = std::move(in);
  n.out_ports = std::move(out);
  g_.nodes_.push_back(std::move(n));
  out_edge_count_.push_back(std::vector<int>(g_.nodes_.back().out_ports.size(), 0));
  return id;
}

void GraphBuilder::connect(Wire src, NodeId dst, std::uint32_t dst_port) {
  connect(src.node, src.port, dst, dst_port);
}

void GraphBuilder::connect(NodeId src, std::uint32_t src_port, NodeId dst,
                           std::uint32_t dst_port) {
  if (finished_) throw BuildError("builder already finished");
  if (src >= g_.nodes_.size() || dst >= g_.nodes_.size()) throw BuildError("bad node id");
  const Node& s = g_.nodes_[src];
  const Node& d = g_.nodes_[dst];
  if (src_port >= s.out_ports.size()) throw BuildError("bad source port");
  if (dst_port >= d.in_ports.size()) throw BuildError("bad destination port");
  if (s.out_ports[src_port] != d.in_ports[dst_port]) {
    throw BuildError("port type mismatch: " + s.out_ports[src_port].str() + " -> " +
                     d.in_ports[dst_port].str());
  }
  if (s.out_ports[src_port].is_linear() && out_edge_count_[src][src_port] > 0)
    throw BuildError("linear wire already has a consumer");
  ++out_edge_count_[src][src_port];
  g_.edges_.push_back(Edge{src, src_port, dst, dst_port});
}

Graph GraphBuilder::finish() {
  finished_ = true;
  std::sort(g_.edges_.begin(), g_.edges_.end());
  return std::move(g_);
}

}  // namespace guppy
