#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "guppy/ir.hpp"

namespace guppy {

struct RewriteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Template node of a pattern: kind, op name, and exact port arities.
struct TemplateNode {
  NodeKind kind;
  std::string op;
  std::size_t n_in;
  std::size_t n_out;
};

struct TemplateEdge {
  int src;
  std::uint32_t sport;
  int dst;
  std::uint32_t dport;
};

// A port of a template node, used to describe the pattern boundary.
struct PortRef {
  int node;
  std::uint32_t port;
};

// Where a replacement in-port or boundary output takes its value from:
// either boundary input `index`, or out-port `port` of replacement node
// `index`.
struct SourceRef {
  bool from_input;
  std::uint32_t index;
  std::uint32_t port = 0;
};

struct ReplacementNode {
  NodeKind kind;
  std::string op;
  std::vector<SourceRef> inputs;
  std::vector<PortType> out_ports;
};

// A small dataflow template with typed boundary holes plus a replacement
// template over the same boundary. Boundary signatures of the two sides are
// identical by construction of the built-in rules.
struct RewritePattern {
  std::string name;  // rule name as used by `opt --rule`
  std::vector<TemplateNode> nodes;
  std::vector<TemplateEdge> edges;
  std::vector<PortRef> inputs;    // boundary inputs (in-ports fed from outside)
  std::vector<PortRef> outputs;   // boundary outputs (out-ports read outside)
  std::vector<ReplacementNode> repl;
  std::vector<SourceRef> out_sources;  // one per boundary output
  std::function<bool(const Graph&, const std::vector<NodeId>&)> predicate;  // optional
};

struct Match {
  NodeId container = kInvalidNode;
  std::vector<NodeId> nodes;  // template index -> graph node
  std::uint64_t revision = 0;
};

// Built-in rules in canonical pipeline order: hh, xx, zz, tdgt (both gate
// orders), cxcx, rzfuse.
const std::vector<RewritePattern>& builtin_rules();

// All patterns registered under `name`; empty for unknown names.
std::vector<const RewritePattern*> rules_named(const std::string& name);

// All embeddings of `p` into single dataflow containers of `g`, in ascending
// anchor-node order. Overlapping matches are all reported.
std::vector<Match> find_matches(const Graph& g, const RewritePattern& p);

// Splices the replacement over the match boundary. Node ids are recompacted
// (relative order of untouched nodes preserved) and the revision advances.
// Throws RewriteError on a stale match (graph changed since matching).
Graph apply_rewrite(const Graph& g, const Match& m, const RewritePattern& p);

// Repeatedly applies the first available match of each rule in order until a
// full pass changes nothing or `max_passes` passes have run.
Graph run_pipeline(const Graph& g, const std::vector<const RewritePattern*>& rules,
                   int max_passes = 10);

}  // namespace guppy
