#include <sstream>

#include <nlohmann/json.hpp>

#include "guppy/ir.hpp"

namespace guppy {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json port_to_json(const PortType& p) {
  switch (p.kind) {
    case PortType::Kind::Value:
      return p.value_type.tag();
    case PortType::Kind::Control:
      return "control";
    case PortType::Kind::Sum: {
      json rows = json::array();
      for (const auto& row : p.rows) {
        json r = json::array();
        for (const auto& t : row) r.push_back(t.tag());
        rows.push_back(r);
      }
      return json{{"sum", rows}};
    }
  }
  return nullptr;
}

PortType port_from_json(const json& j) {
  if (j.is_string()) {
    std::string tag = j.get<std::string>();
    if (tag == "control") return PortType::control();
    auto t = parse_type_tag(tag);
    if (!t) throw DeserializeError("unknown type tag: " + tag);
    return PortType::value(*t);
  }
  if (j.is_object() && j.contains("sum")) {
    std::vector<std::vector<Type>> rows;
    for (const auto& row : j.at("sum")) {
      std::vector<Type> r;
      for (const auto& t : row) {
        auto ty = parse_type_tag(t.get<std::string>());
        if (!ty) throw DeserializeError("unknown type tag in sum row");
        r.push_back(*ty);
      }
      rows.push_back(std::move(r));
    }
    return PortType::sum(std::move(rows));
  }
  throw DeserializeError("malformed port type");
}

const char* role_name(BlockRole r) {
  switch (r) {
    case BlockRole::Entry: return "entry";
    case BlockRole::Exit: return "exit";
    case BlockRole::Dataflow: return "dataflow";
  }
  return "dataflow";
}

json payload_to_json(const Node& n) {
  json p = json::object();
  switch (n.kind) {
    case NodeKind::FuncDefn: {
      p["name"] = n.payload.name;
      json params = json::array();
      if (n.payload.sig) {
        for (const auto& t : n.payload.sig->params) params.push_back(t.tag());
        p["signature"] = json{{"params", params}, {"result", n.payload.sig->result.tag()}};
      }
      break;
    }
    case NodeKind::Const:
      if (n.payload.value) {
        p["type"] = n.payload.value->type.tag();
        p["value"] = n.payload.value->value;
      }
      break;
    case NodeKind::Call:
    case NodeKind::LoadFunction:
      p["target"] = n.payload.target;
      break;
    case NodeKind::QuantumOp:
    case NodeKind::IntOp:
    case NodeKind::FloatOp:
    case NodeKind::CmpOp:
    case NodeKind::ListOp:
      p["op"] = n.payload.name;
      break;
    case NodeKind::Tag:
      p["variant"] = n.payload.index;
      break;
    case NodeKind::Case:
      p["index"] = n.payload.index;
      break;
    case NodeKind::BasicBlock:
      p["role"] = role_name(n.payload.role);
      break;
    default:
      break;
  }
  return p;
}

Payload payload_from_json(NodeKind kind, const json& p) {
  Payload out;
  switch (kind) {
    case NodeKind::FuncDefn: {
      out.name = p.at("name").get<std::string>();
      if (p.contains("signature")) {
        FuncSig sig;
        for (const auto& t : p.at("signature").at("params")) {
          auto ty = parse_type_tag(t.get<std::string>());
          if (!ty) throw DeserializeError("bad signature type tag");
          sig.params.push_back(*ty);
        }
        auto res = parse_type_tag(p.at("signature").at("result").get<std::string>());
        if (!res) throw DeserializeError("bad signature result tag");
        sig.result = *res;
        out.sig = std::move(sig);
      }
      break;
    }
    case NodeKind::Const: {
      auto cv = typed_literal(p.at("type").get<std::string>(), p.at("value"));
      if (!cv) throw DeserializeError("constant value does not match its type tag");
      out.value = std::move(cv);
      break;
    }
    case NodeKind::Call:
    case NodeKind::LoadFunction:
      out.target = p.at("target").get<NodeId>();
      break;
    case NodeKind::QuantumOp:
    case NodeKind::IntOp:
    case NodeKind::FloatOp:
    case NodeKind::CmpOp:
    case NodeKind::ListOp:
      out.name = p.at("op").get<std::string>();
      break;
    case NodeKind::Tag:
      out.index = p.at("variant").get<int>();
      break;
    case NodeKind::Case:
      out.index = p.at("index").get<int>();
      break;
    case NodeKind::BasicBlock: {
      std::string role = p.at("role").get<std::string>();
      if (role == "entry") out.role = BlockRole::Entry;
      else if (role == "exit") out.role = BlockRole::Exit;
      else if (role == "dataflow") out.role = BlockRole::Dataflow;
      else throw DeserializeError("unknown basic block role: " + role);
      break;
    }
    default:
      break;
  }
  return out;
}

}  // namespace

std::string serialize(const Graph& g) {
  json doc;
  doc["version"] = kFormatVersion;
  json nodes = json::array();
  for (const auto& n : g.nodes()) {  // already ordered by id
    json rec;
    rec["id"] = n.id;
    if (n.parent == kInvalidNode)
      rec["parent"] = nullptr;
    else
      rec["parent"] = n.parent;
    rec["kind"] = node_kind_name(n.kind);
    rec["payload"] = payload_to_json(n);
    json in = json::array(), out = json::array();
    for (const auto& p : n.in_ports) in.push_back(port_to_json(p));
    for (const auto& p : n.out_ports) out.push_back(port_to_json(p));
    rec["in"] = in;
    rec["out"] = out;
    nodes.push_back(rec);
  }
  doc["nodes"] = nodes;
  json edges = json::array();
  for (const auto& e : g.edges()) {  // kept sorted lexicographically
    edges.push_back(json{{"src", {e.src, e.src_port}}, {"dst", {e.dst, e.dst_port}}});
  }
  doc["edges"] = edges;
  return doc.dump(2) + "\n";
}

Graph deserialize(const std::string& bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::exception& e) {
    throw DeserializeError(std::string("malformed document: ") + e.what());
  }
  try {
    if (!doc.contains("version") || doc.at("version").get<int>() != kFormatVersion)
      throw DeserializeError("unsupported format version");
    const json& nodes = doc.at("nodes");
    if (!nodes.is_array() || nodes.empty()) throw DeserializeError("empty node list");

    GraphBuilder b;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const json& rec = nodes[i];
      if (rec.at("id").get<std::size_t>() != i)
        throw DeserializeError("node ids must be dense and ordered");
      std::string kind_name = rec.at("kind").get<std::string>();
      auto kind = node_kind_from_name(kind_name);
      if (!kind) throw DeserializeError("unknown node kind: " + kind_name);
      NodeId parent = rec.at("parent").is_null() ? kInvalidNode : rec.at("parent").get<NodeId>();
      if (i == 0) {
        if (*kind != NodeKind::Module || parent != kInvalidNode)
          throw DeserializeError("first node must be the module root");
        continue;  // builder already created it
      }
      if (parent >= i) throw DeserializeError("node parent must precede it");
      std::vector<PortType> in, out;
      for (const auto& p : rec.at("in")) in.push_back(port_from_json(p));
      for (const auto& p : rec.at("out")) out.push_back(port_from_json(p));
      b.add_node(*kind, parent, std::move(in), std::move(out),
                 payload_from_json(*kind, rec.at("payload")));
    }
    for (const auto& rec : doc.at("edges")) {
      const auto& src = rec.at("src");
      const auto& dst = rec.at("dst");
      b.connect(src.at(0).get<NodeId>(), src.at(1).get<std::uint32_t>(),
                dst.at(0).get<NodeId>(), dst.at(1).get<std::uint32_t>());
    }
    Graph g = b.finish();
    auto violations = validate(g);
    if (!violations.empty())
      throw DeserializeError("validation failed on load: " + violations.front().message);
    return g;
  } catch (const json::exception& e) {
    throw DeserializeError(std::string("malformed document: ") + e.what());
  } catch (const BuildError& e) {
    throw DeserializeError(std::string("inconsistent graph: ") + e.what());
  }
}

}  // namespace guppy
