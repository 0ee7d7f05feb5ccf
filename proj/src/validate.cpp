#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "guppy/ir.hpp"

namespace guppy {

namespace {

bool is_dataflow_container(const Node& n) {
  switch (n.kind) {
    case NodeKind::FuncDefn:
    case NodeKind::Case:
    case NodeKind::TailLoop:
      return true;
    case NodeKind::BasicBlock:
      return n.payload.role != BlockRole::Exit;
    default:
      return false;
  }
}

struct Validator {
  const Graph& g;
  std::vector<Violation> out;

  void report(int rule, NodeId node, const std::string& msg) {
    std::ostringstream s;
    s << "rule " << rule << ": " << msg;
    out.push_back(Violation{rule, s.str(), node});
  }

  std::vector<Type> port_row(const std::vector<PortType>& ports, NodeId node, int rule) {
    std::vector<Type> row;
    for (const auto& p : ports) {
      if (p.kind != PortType::Kind::Value) {
        report(rule, node, "expected a value port in signature row");
        row.push_back(Type::error());
      } else {
        row.push_back(p.value_type);
      }
    }
    return row;
  }

  // rule 1: the parent/child structure forms a tree rooted at the module
  void check_hierarchy() {
    if (g.nodes().empty() || g.root() >= g.nodes().size() ||
        g.node(g.root()).kind != NodeKind::Module) {
      report(1, kInvalidNode, "missing module root");
      return;
    }
    for (const auto& n : g.nodes()) {
      if (n.id == g.root()) {
        if (n.parent != kInvalidNode) report(1, n.id, "root must have no parent");
        continue;
      }
      if (n.parent == kInvalidNode || n.parent >= g.nodes().size()) {
        report(1, n.id, "node has no parent");
        continue;
      }
      const auto& kids = g.node(n.parent).children;
      if (std::find(kids.begin(), kids.end(), n.id) == kids.end())
        report(1, n.id, "node is not listed among its parent's children");
    }
    // reachability from root
    std::set<NodeId> seen;
    std::vector<NodeId> stack{g.root()};
    while (!stack.empty()) {
      NodeId id = stack.back();
      stack.pop_back();
      if (!seen.insert(id).second) {
        report(1, id, "hierarchy contains a cycle");
        return;
      }
      for (NodeId c : g.node(id).children) {
        if (c >= g.nodes().size()) {
          report(1, id, "child id out of range");
          continue;
        }
        stack.push_back(c);
      }
    }
    for (const auto& n : g.nodes())
      if (!seen.count(n.id)) report(1, n.id, "node unreachable from root");
    // container discipline: dataflow containers start with Input, Output
    for (const auto& n : g.nodes()) {
      if (!is_container_kind(n.kind) && !n.children.empty())
        report(1, n.id, "leaf node has children");
      if (is_dataflow_container(n)) {
        if (n.children.size() < 2 || g.node(n.children[0]).kind != NodeKind::Input ||
            g.node(n.children[1]).kind != NodeKind::Output)
          report(1, n.id, "dataflow container must start with input and output nodes");
      }
    }
  }

  // rule 2: port types at both edge ends are identical
  void check_edge_types() {
    for (const auto& e : g.edges()) {
      if (e.src >= g.nodes().size() || e.dst >= g.nodes().size()) {
        report(2, e.src, "edge endpoint out of range");
        continue;
      }
      const Node& s = g.node(e.src);
      const Node& d = g.node(e.dst);
      if (e.src_port >= s.out_ports.size() || e.dst_port >= d.in_ports.size()) {
        report(2, e.src, "edge port index out of range");
        continue;
      }
      if (s.out_ports[e.src_port] != d.in_ports[e.dst_port])
        report(2, e.src, "edge connects ports of different types");
    }
  }

  // rule 3: exactly-one-use for linear ports; every value/sum in-port of a
  // node inside a dataflow container has exactly one incoming edge
  void check_degrees() {
    std::map<std::pair<NodeId, std::uint32_t>, int> out_deg, in_deg;
    for (const auto& e : g.edges()) {
      ++out_deg[{e.src, e.src_port}];
      ++in_deg[{e.dst, e.dst_port}];
    }
    for (const auto& n : g.nodes()) {
      for (std::uint32_t p = 0; p < n.out_ports.size(); ++p) {
        if (n.out_ports[p].is_linear() && out_deg[{n.id, p}] != 1)
          report(3, n.id, "linear out-port must have exactly one consumer (has " +
                              std::to_string(out_deg[{n.id, p}]) + ")");
      }
      bool in_dataflow = n.parent != kInvalidNode && is_dataflow_container(g.node(n.parent));
      for (std::uint32_t p = 0; p < n.in_ports.size(); ++p) {
        if (n.in_ports[p].kind == PortType::Kind::Control) continue;
        int deg = in_deg[{n.id, p}];
        if (n.in_ports[p].is_linear() && deg != 1)
          report(3, n.id, "linear in-port must have exactly one producer");
        else if (in_dataflow && deg != 1)
          report(3, n.id, "value in-port must have exactly one producer (has " +
                              std::to_string(deg) + ")");
      }
    }
  }

  // rule 4: value/sum edges stay inside one dataflow container
  void check_locality() {
    for (const auto& e : g.edges()) {
      if (e.src >= g.nodes().size() || e.dst >= g.nodes().size()) continue;
      const Node& s = g.node(e.src);
      if (e.src_port < s.out_ports.size() &&
          s.out_ports[e.src_port].kind == PortType::Kind::Control)
        continue;  // control edges checked by rule 8
      const Node& d = g.node(e.dst);
      if (s.parent != d.parent)
        report(4, e.src, "value edge crosses container boundary");
      else if (s.parent == kInvalidNode || !is_dataflow_container(g.node(s.parent)))
        report(4, e.src, "value edge outside a dataflow container");
    }
  }

  // rule 5: value edges inside each dataflow container form a DAG
  void check_acyclicity() {
    for (const auto& c : g.nodes()) {
      if (!is_dataflow_container(c)) continue;
      std::map<NodeId, std::vector<NodeId>> succ;
      std::map<NodeId, int> indeg;
      for (NodeId k : c.children) indeg[k] = 0;
      for (const auto& e : g.edges()) {
        if (indeg.count(e.src) && indeg.count(e.dst)) {
          succ[e.src].push_back(e.dst);
          ++indeg[e.dst];
        }
      }
      std::vector<NodeId> ready;
      for (auto& [id, d] : indeg)
        if (d == 0) ready.push_back(id);
      std::size_t done = 0;
      while (!ready.empty()) {
        NodeId id = ready.back();
        ready.pop_back();
        ++done;
        for (NodeId s : succ[id])
          if (--indeg[s] == 0) ready.push_back(s);
      }
      if (done != c.children.size())
        report(5, c.id, "value edges form a cycle inside a dataflow container");
    }
  }

  // rule 6: conditional arity and case signatures
  void check_conditionals() {
    for (const auto& n : g.nodes()) {
      if (n.kind != NodeKind::Conditional) continue;
      if (n.in_ports.empty() || n.in_ports[0].kind != PortType::Kind::Sum) {
        report(6, n.id, "conditional predicate in-port must be a sum");
        continue;
      }
      const auto& rows = n.in_ports[0].rows;
      if (rows.size() != n.children.size()) {
        report(6, n.id, "predicate arity does not match number of cases");
        continue;
      }
      std::vector<bool> seen(n.children.size(), false);
      for (NodeId cid : n.children) {
        const Node& c = g.node(cid);
        if (c.kind != NodeKind::Case) {
          report(6, n.id, "conditional child is not a case");
          continue;
        }
        int idx = c.payload.index;
        if (idx < 0 || idx >= static_cast<int>(n.children.size()) || seen[idx]) {
          report(6, c.id, "case indices must cover 0..n-1 exactly once");
          continue;
        }
        seen[idx] = true;
        if (c.children.size() < 2) continue;  // rule 1 already complained
        std::vector<PortType> expected_in;
        for (const auto& t : rows[idx]) expected_in.push_back(PortType::value(t));
        for (std::size_t i = 1; i < n.in_ports.size(); ++i) {
          if (n.in_ports[i].kind == PortType::Kind::Value)
            expected_in.push_back(n.in_ports[i]);
          else
            report(6, n.id, "conditional non-predicate inputs must be values");
        }
        if (g.node(c.children[0]).out_ports != expected_in)
          report(6, c.id, "case input signature does not match conditional inputs");
        if (g.node(c.children[1]).in_ports != n.out_ports)
          report(6, c.id, "case output signature does not match conditional outputs");
      }
    }
  }

  // rule 7: tail loop control sum
  void check_tail_loops() {
    for (const auto& n : g.nodes()) {
      if (n.kind != NodeKind::TailLoop) continue;
      if (n.children.size() < 2) continue;
      const Node& input = g.node(n.children[0]);
      const Node& output = g.node(n.children[1]);
      auto carried = port_row(n.in_ports, n.id, 7);
      auto results = port_row(n.out_ports, n.id, 7);
      if (port_row(input.out_ports, n.id, 7) != carried)
        report(7, n.id, "loop body input row does not match loop-carried inputs");
      if (output.in_ports.size() != 1 || output.in_ports[0].kind != PortType::Kind::Sum ||
          output.in_ports[0].rows.size() != 2) {
        report(7, n.id, "loop body output must be a 2-variant sum");
        continue;
      }
      if (output.in_ports[0].rows[0] != carried)
        report(7, n.id, "continue variant row does not match loop-carried inputs");
      if (output.in_ports[0].rows[1] != results)
        report(7, n.id, "break variant row does not match loop outputs");
    }
  }

  // rule 8: control flow graphs
  void check_cfgs() {
    for (const auto& n : g.nodes()) {
      if (n.kind != NodeKind::CFG) continue;
      NodeId entry = kInvalidNode;
      int entries = 0, exits = 0;
      for (NodeId cid : n.children) {
        const Node& b = g.node(cid);
        if (b.kind != NodeKind::BasicBlock) {
          report(8, cid, "cfg child is not a basic block");
          continue;
        }
        if (b.payload.role == BlockRole::Entry) {
          ++entries;
          entry = cid;
        }
        if (b.payload.role == BlockRole::Exit) ++exits;
      }
      if (entries != 1) report(8, n.id, "cfg must have exactly one entry block");
      if (exits != 1) report(8, n.id, "cfg must have exactly one exit block");
      if (entries != 1 || exits != 1) continue;

      std::set<NodeId> blocks(n.children.begin(), n.children.end());
      // control edges connect sibling blocks only
      std::map<NodeId, std::vector<NodeId>> succs;  // ordered by out port
      for (NodeId cid : n.children) {
        const Node& b = g.node(cid);
        succs[cid].assign(b.out_ports.size(), kInvalidNode);
      }
      for (const auto& e : g.edges()) {
        const Node& s = g.node(e.src);
        if (e.src_port >= s.out_ports.size() ||
            s.out_ports[e.src_port].kind != PortType::Kind::Control)
          continue;
        if (!blocks.count(e.src)) continue;
        if (!blocks.count(e.dst)) {
          report(8, e.src, "control edge leaves the cfg");
          continue;
        }
        if (succs[e.src][e.src_port] != kInvalidNode)
          report(8, e.src, "duplicate control edge from one port");
        succs[e.src][e.src_port] = e.dst;
      }
      for (NodeId cid : n.children) {
        for (std::size_t i = 0; i < succs[cid].size(); ++i)
          if (succs[cid][i] == kInvalidNode)
            report(8, cid, "control out-port without successor");
      }
      // reachability from entry
      std::set<NodeId> seen;
      std::vector<NodeId> stack{entry};
      while (!stack.empty()) {
        NodeId id = stack.back();
        stack.pop_back();
        if (!seen.insert(id).second) continue;
        for (NodeId s : succs[id])
          if (s != kInvalidNode) stack.push_back(s);
      }
      for (NodeId cid : n.children)
        if (!seen.count(cid)) report(8, cid, "basic block unreachable from entry");

      auto block_input_row = [&](NodeId cid) -> std::vector<Type> {
        const Node& b = g.node(cid);
        if (b.payload.role == BlockRole::Exit) return port_row(n.out_ports, n.id, 8);
        if (b.children.empty()) return {};
        return port_row(g.node(b.children[0]).out_ports, cid, 8);
      };

      // output sum arity matches successor count; variant rows match targets
      for (NodeId cid : n.children) {
        const Node& b = g.node(cid);
        if (b.payload.role == BlockRole::Exit) continue;
        if (b.children.size() < 2) continue;
        const Node& output = g.node(b.children[1]);
        if (output.in_ports.size() != 1 || output.in_ports[0].kind != PortType::Kind::Sum) {
          report(8, cid, "basic block output must be a single sum");
          continue;
        }
        const auto& rows = output.in_ports[0].rows;
        if (rows.size() != succs[cid].size()) {
          report(8, cid, "block output sum arity does not match successor count");
          continue;
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (succs[cid][i] == kInvalidNode) continue;
          if (rows[i] != block_input_row(succs[cid][i]))
            report(8, cid, "branch variant row does not match successor inputs");
        }
        if (b.payload.role == BlockRole::Entry &&
            block_input_row(cid) != port_row(n.in_ports, n.id, 8))
          report(8, cid, "entry block inputs do not match cfg inputs");
      }
    }
  }
};

}  // namespace

std::vector<Violation> validate(const Graph& g) {
  Validator v{g, {}};
  v.check_hierarchy();
  if (!v.out.empty()) return v.out;  // later rules assume a sane tree
  v.check_edge_types();
  v.check_degrees();
  v.check_locality();
  v.check_acyclicity();
  v.check_conditionals();
  v.check_tail_loops();
  v.check_cfgs();
  return v.out;
}

}  // namespace guppy
