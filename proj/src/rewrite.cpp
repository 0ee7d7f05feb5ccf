#include <algorithm>
#include <map>
#include <set>

#include "guppy/rewrite.hpp"

namespace guppy {

namespace {

bool node_fits(const Graph& g, NodeId id, const TemplateNode& tn) {
  const Node& n = g.node(id);
  return n.kind == tn.kind && n.payload.name == tn.op && n.in_ports.size() == tn.n_in &&
         n.out_ports.size() == tn.n_out;
}

// Extends a partial assignment template-node-by-template-node. Every template
// node after the anchor must be reachable from an already-assigned one, which
// holds for all built-in rules.
bool extend(const Graph& g, const RewritePattern& p, std::vector<NodeId>& assign, std::size_t j) {
  if (j == p.nodes.size()) {
    if (p.predicate && !p.predicate(g, assign)) return false;
    return true;
  }
  std::vector<NodeId> candidates;
  for (const TemplateEdge& te : p.edges) {
    if (static_cast<std::size_t>(te.dst) == j && static_cast<std::size_t>(te.src) < j) {
      for (const Edge& e : g.edges_from_port(assign[te.src], te.sport))
        if (e.dst_port == te.dport) candidates.push_back(e.dst);
      break;
    }
    if (static_cast<std::size_t>(te.src) == j && static_cast<std::size_t>(te.dst) < j) {
      if (auto e = g.edge_into_port(assign[te.dst], te.dport))
        if (e->src_port == te.sport) candidates.push_back(e->src);
      break;
    }
  }
  for (NodeId c : candidates) {
    if (!node_fits(g, c, p.nodes[j])) continue;
    if (g.node(c).parent != g.node(assign[0]).parent) continue;
    if (std::find(assign.begin(), assign.end(), c) != assign.end()) continue;
    assign.push_back(c);
    bool ok = true;
    // all template edges between assigned nodes must be present
    for (const TemplateEdge& te : p.edges) {
      if (static_cast<std::size_t>(te.src) > j || static_cast<std::size_t>(te.dst) > j)
        continue;
      auto e = g.edge_into_port(assign[te.dst], te.dport);
      if (!e || e->src != assign[te.src] || e->src_port != te.sport) {
        ok = false;
        break;
      }
    }
    if (ok && extend(g, p, assign, j + 1)) return true;
    assign.pop_back();
  }
  return false;
}

}  // namespace

std::vector<Match> find_matches(const Graph& g, const RewritePattern& p) {
  std::vector<Match> out;
  if (p.nodes.empty()) return out;
  for (const Node& n : g.nodes()) {
    if (!node_fits(g, n.id, p.nodes[0])) continue;
    std::vector<NodeId> assign{n.id};
    if (extend(g, p, assign, 1)) {
      Match m;
      m.container = n.parent;
      m.nodes = std::move(assign);
      m.revision = g.revision();
      out.push_back(std::move(m));
    }
  }
  return out;
}

class RewriteApplier {
 public:
  static Graph apply(const Graph& g, const Match& m, const RewritePattern& p) {
    if (m.revision != g.revision())
      throw RewriteError("stale match: graph revision changed since matching");
    if (m.nodes.size() != p.nodes.size()) throw RewriteError("match/pattern size mismatch");
    std::set<NodeId> matched(m.nodes.begin(), m.nodes.end());

    struct Src {
      NodeId node;
      std::uint32_t port;
    };
    std::vector<Src> in_src;
    std::vector<PortType> in_types;
    for (const PortRef& pr : p.inputs) {
      NodeId n = m.nodes[static_cast<std::size_t>(pr.node)];
      auto e = g.edge_into_port(n, pr.port);
      if (!e) throw RewriteError("boundary input has no producer");
      if (matched.count(e->src)) throw RewriteError("boundary input produced inside the match");
      in_src.push_back({e->src, e->src_port});
      in_types.push_back(g.node(n).in_ports[pr.port]);
    }
    std::vector<std::vector<Src>> out_dst;
    for (const PortRef& pr : p.outputs) {
      NodeId n = m.nodes[static_cast<std::size_t>(pr.node)];
      std::vector<Src> dsts;
      for (const Edge& e : g.edges_from_port(n, pr.port)) {
        if (matched.count(e.dst)) throw RewriteError("boundary output consumed inside the match");
        dsts.push_back({e.dst, e.dst_port});
      }
      out_dst.push_back(std::move(dsts));
    }

    Graph out = g;
    out.edges_.erase(std::remove_if(out.edges_.begin(), out.edges_.end(),
                                    [&](const Edge& e) {
                                      return matched.count(e.src) || matched.count(e.dst);
                                    }),
                     out.edges_.end());

    // replacement nodes get provisional ids past the current range
    std::vector<NodeId> repl_id;
    auto source_wire = [&](const SourceRef& s) -> Src {
      if (s.from_input) return in_src[s.index];
      return {repl_id[s.index], s.port};
    };
    auto source_type = [&](const SourceRef& s) -> const PortType& {
      if (s.from_input) return in_types[s.index];
      return out.nodes_[repl_id[s.index]].out_ports[s.port];
    };
    for (const ReplacementNode& rn : p.repl) {
      Node n;
      n.id = static_cast<NodeId>(out.nodes_.size());
      n.parent = m.container;
      n.kind = rn.kind;
      n.payload.name = rn.op;
      for (const SourceRef& s : rn.inputs) n.in_ports.push_back(source_type(s));
      n.out_ports = rn.out_ports;
      repl_id.push_back(n.id);
      out.nodes_.push_back(std::move(n));
      out.nodes_[m.container].children.push_back(repl_id.back());
      for (std::uint32_t i = 0; i < rn.inputs.size(); ++i) {
        Src s = source_wire(rn.inputs[i]);
        out.edges_.push_back({s.node, s.port, repl_id.back(), i});
      }
    }
    for (std::size_t j = 0; j < p.outputs.size(); ++j) {
      Src s = source_wire(p.out_sources[j]);
      for (const Src& d : out_dst[j]) out.edges_.push_back({s.node, s.port, d.node, d.port});
    }

    // drop matched nodes and recompact to dense ids, preserving order
    std::vector<NodeId> remap(out.nodes_.size(), kInvalidNode);
    std::vector<Node> packed;
    for (Node& n : out.nodes_) {
      if (matched.count(n.id)) continue;
      remap[n.id] = static_cast<NodeId>(packed.size());
      packed.push_back(std::move(n));
    }
    for (Node& n : packed) {
      n.id = remap[n.id];
      if (n.parent != kInvalidNode) n.parent = remap[n.parent];
      std::vector<NodeId> kids;
      for (NodeId c : n.children)
        if (remap[c] != kInvalidNode) kids.push_back(remap[c]);
      n.children = std::move(kids);
      if (n.payload.target != kInvalidNode) n.payload.target = remap[n.payload.target];
    }
    for (Edge& e : out.edges_) {
      e.src = remap[e.src];
      e.dst = remap[e.dst];
    }
    out.nodes_ = std::move(packed);
    out.root_ = remap[out.root_];
    std::sort(out.edges_.begin(), out.edges_.end());
    out.revision_ = g.revision() + 1;

    auto violations = validate(out);
    if (!violations.empty())
      throw RewriteError("rewrite produced an invalid graph: " + violations.front().message);
    return out;
  }
};

Graph apply_rewrite(const Graph& g, const Match& m, const RewritePattern& p) {
  return RewriteApplier::apply(g, m, p);
}

Graph run_pipeline(const Graph& g, const std::vector<const RewritePattern*>& rules, int max_passes) {
  Graph cur = g;
  for (int pass = 0; pass < max_passes; ++pass) {
    bool changed = false;
    for (const RewritePattern* p : rules) {
      while (true) {
        auto ms = find_matches(cur, *p);
        if (ms.empty()) break;
        cur = apply_rewrite(cur, ms.front(), *p);
        changed = true;
      }
    }
    if (!changed) break;
  }
  return cur;
}

namespace {

RewritePattern cancel_1q(const std::string& name, const std::string& first, const std::string& second) {
  RewritePattern p;
  p.name = name;
  p.nodes = {{NodeKind::QuantumOp, first, 1, 1}, {NodeKind::QuantumOp, second, 1, 1}};
  p.edges = {{0, 0, 1, 0}};
  p.inputs = {{0, 0}};
  p.outputs = {{1, 0}};
  p.out_sources = {{true, 0, 0}};
  return p;
}

RewritePattern cancel_cx() {
  RewritePattern p;
  p.name = "cxcx";
  p.nodes = {{NodeKind::QuantumOp, "cx", 2, 2}, {NodeKind::QuantumOp, "cx", 2, 2}};
  p.edges = {{0, 0, 1, 0}, {0, 1, 1, 1}};  // same control/target orientation
  p.inputs = {{0, 0}, {0, 1}};
  p.outputs = {{1, 0}, {1, 1}};
  p.out_sources = {{true, 0, 0}, {true, 1, 0}};
  return p;
}

RewritePattern rz_fusion() {
  RewritePattern p;
  p.name = "rzfuse";
  p.nodes = {{NodeKind::QuantumOp, "rz", 2, 1}, {NodeKind::QuantumOp, "rz", 2, 1}};
  p.edges = {{0, 0, 1, 0}};
  p.inputs = {{0, 0}, {0, 1}, {1, 1}};  // qubit, angle a, angle b
  p.outputs = {{1, 0}};
  p.repl = {
      {NodeKind::FloatOp, "add", {{true, 1, 0}, {true, 2, 0}}, {PortType::value(Type::float_())}},
      {NodeKind::QuantumOp, "rz", {{true, 0, 0}, {false, 0, 0}}, {PortType::value(Type::qubit())}},
  };
  p.out_sources = {{false, 1, 0}};
  return p;
}

}  // namespace

const std::vector<RewritePattern>& builtin_rules() {
  static const std::vector<RewritePattern> rules = [] {
    std::vector<RewritePattern> r;
    r.push_back(cancel_1q("hh", "h", "h"));
    r.push_back(cancel_1q("xx", "x", "x"));
    r.push_back(cancel_1q("zz", "z", "z"));
    r.push_back(cancel_1q("tdgt", "t", "tdg"));
    r.push_back(cancel_1q("tdgt", "tdg", "t"));
    r.push_back(cancel_cx());
    r.push_back(rz_fusion());
    return r;
  }();
  return rules;
}

std::vector<const RewritePattern*> rules_named(const std::string& name) {
  std::vector<const RewritePattern*> out;
  for (const RewritePattern& p : builtin_rules())
    if (p.name == name) out.push_back(&p);
  return out;
}

}  // namespace guppy
