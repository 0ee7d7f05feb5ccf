#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <vector>

#include "guppy/sim.hpp"

namespace guppy {

namespace {

// splitmix64, used only to expand the seed into the xoshiro state
std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256**: one uniform draw in [0,1) per measurement
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
  }

  double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t next() {
    std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  std::uint64_t s_[4];
};

using cd = std::complex<double>;

// Statevector over the live qubits. Handle h sits at tensor position pos(h):
// bit pos(h) of the amplitude index. A fresh qubit is appended as the new
// most significant bit.
class QState {
 public:
  QState() : amps_{cd{1.0, 0.0}} {}

  std::size_t live() const { return order_.size(); }
  double norm_deviation() const { return max_dev_; }

  void alloc(std::uint64_t h, cd a0, cd a1) {
    double n = std::sqrt(std::norm(a0) + std::norm(a1));
    if (n == 0.0) throw RuntimeError("bad-argument", "qubit argument has zero norm");
    a0 /= n;
    a1 /= n;
    std::size_t old = amps_.size();
    std::vector<cd> next(old * 2);
    for (std::size_t i = 0; i < old; ++i) {
      next[i] = amps_[i] * a0;
      next[i + old] = amps_[i] * a1;
    }
    amps_ = std::move(next);
    pos_[h] = order_.size();
    order_.push_back(h);
    track_norm();
  }

  void apply1(std::uint64_t h, const cd m[2][2]) {
    std::size_t p = position(h);
    std::size_t bit = std::size_t{1} << p;
    for (std::size_t i = 0; i < amps_.size(); ++i) {
      if (i & bit) continue;
      cd a0 = amps_[i], a1 = amps_[i | bit];
      amps_[i] = m[0][0] * a0 + m[0][1] * a1;
      amps_[i | bit] = m[1][0] * a0 + m[1][1] * a1;
    }
    track_norm();
  }

  void apply_cx(std::uint64_t hc, std::uint64_t ht) {
    std::size_t pc = position(hc), pt = position(ht);
    std::size_t cb = std::size_t{1} << pc, tb = std::size_t{1} << pt;
    for (std::size_t i = 0; i < amps_.size(); ++i)
      if ((i & cb) && !(i & tb)) std::swap(amps_[i], amps_[i | tb]);
    track_norm();
  }

  // zz = diag(1,-1,-1,1): phase -1 where the two bits differ
  void apply_zz(std::uint64_t ha, std::uint64_t hb) {
    std::size_t ba = std::size_t{1} << position(ha);
    std::size_t bb = std::size_t{1} << position(hb);
    for (std::size_t i = 0; i < amps_.size(); ++i)
      if (((i & ba) != 0) != ((i & bb) != 0)) amps_[i] = -amps_[i];
    track_norm();
  }

  // Born-rule projection with a single rng draw; contracts the state.
  bool measure(std::uint64_t h, Rng& rng) {
    std::size_t p = position(h);
    std::size_t bit = std::size_t{1} << p;
    double p1 = 0.0;
    for (std::size_t i = 0; i < amps_.size(); ++i)
      if (i & bit) p1 += std::norm(amps_[i]);
    bool outcome = rng.uniform() < p1;
    double keep = outcome ? p1 : 1.0 - p1;
    double scale = 1.0 / std::sqrt(keep);
    std::vector<cd> next(amps_.size() / 2);
    for (std::size_t i = 0; i < amps_.size(); ++i) {
      if (((i & bit) != 0) != outcome) continue;
      std::size_t j = (i & (bit - 1)) | ((i >> 1) & ~(bit - 1));
      next[j] = amps_[i] * scale;
    }
    amps_ = std::move(next);
    order_.erase(order_.begin() + static_cast<std::ptrdiff_t>(p));
    pos_.erase(h);
    for (std::size_t q = p; q < order_.size(); ++q) pos_[order_[q]] = q;
    track_norm();
    return outcome;
  }

  std::size_t position(std::uint64_t h) const {
    auto it = pos_.find(h);
    if (it == pos_.end()) throw RuntimeError("dangling-handle", "qubit handle is not live");
    return it->second;
  }

  const std::vector<cd>& amplitudes() const { return amps_; }

 private:
  void track_norm() {
    double n = 0.0;
    for (const cd& a : amps_) n += std::norm(a);
    max_dev_ = std::max(max_dev_, std::abs(std::sqrt(n) - 1.0));
  }

  std::vector<cd> amps_;
  std::map<std::uint64_t, std::size_t> pos_;
  std::vector<std::uint64_t> order_;  // position -> handle
  double max_dev_ = 0.0;
};

constexpr double kInvSqrt2 = 0.70710678118654752440;

struct Interp {
  const Graph& g;
  RunOptions opts;
  Rng rng;
  QState st;
  RunReport rep;
  std::uint64_t next_handle = 0;
  std::vector<std::vector<Edge>> in_edges, out_edges;

  Interp(const Graph& graph, const RunOptions& o) : g(graph), opts(o), rng(o.seed) {
    in_edges.resize(g.nodes().size());
    out_edges.resize(g.nodes().size());
    for (const Edge& e : g.edges()) {
      out_edges[e.src].push_back(e);
      in_edges[e.dst].push_back(e);
    }
  }

  void count_step(NodeId n) {
    if (++rep.steps > opts.max_steps)
      throw RuntimeError("step-limit-exceeded", "execution exceeded the step limit", n);
  }

  const Value& input_value(const std::map<NodeId, std::vector<Value>>& outs, NodeId n,
                           std::uint32_t port) {
    for (const Edge& e : in_edges[n])
      if (e.dst_port == port) return outs.at(e.src).at(e.src_port);
    throw RuntimeError("internal", "missing producer for an in-port", n);
  }

  std::vector<Value> gather_inputs(const std::map<NodeId, std::vector<Value>>& outs,
                                   const Node& n) {
    std::vector<Value> ins;
    for (std::uint32_t p = 0; p < n.in_ports.size(); ++p)
      ins.push_back(input_value(outs, n.id, p));
    return ins;
  }

  // Runs one dataflow container (FuncDefn, Case, TailLoop body, BasicBlock):
  // lowest-id-first among ready nodes, returning the Output node's row.
  std::vector<Value> exec_container(NodeId container, const std::vector<Value>& inputs) {
    const Node& cn = g.node(container);
    std::map<NodeId, std::vector<Value>> outs;
    std::map<NodeId, std::size_t> pending;
    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<NodeId>> ready;
    for (NodeId c : cn.children) {
      pending[c] = g.node(c).in_ports.size();
      if (pending[c] == 0) ready.push(c);
    }
    std::vector<Value> result;
    while (!ready.empty()) {
      NodeId id = ready.top();
      ready.pop();
      const Node& n = g.node(id);
      count_step(id);
      if (n.kind == NodeKind::Input) {
        outs[id] = inputs;
      } else if (n.kind == NodeKind::Output) {
        result = gather_inputs(outs, n);
        outs[id] = {};
      } else {
        outs[id] = eval_node(n, gather_inputs(outs, n));
      }
      for (const Edge& e : out_edges[id]) {
        auto it = pending.find(e.dst);
        if (it == pending.end()) continue;  // cross-container edge (impossible here)
        if (--it->second == 0) ready.push(e.dst);
      }
    }
    return result;
  }

  std::vector<Value> exec_function(NodeId fid, const std::vector<Value>& args) {
    count_step(fid);
    return exec_container(fid, args);
  }

  std::vector<Value> eval_node(const Node& n, std::vector<Value> ins) {
    switch (n.kind) {
      case NodeKind::Const:
        return {const_to_value(n.payload.value->type, n.payload.value->value)};
      case NodeKind::LoadFunction:
        return {Value::function(n.payload.target)};
      case NodeKind::Call:
        return exec_function(n.payload.target, ins);
      case NodeKind::CallIndirect: {
        NodeId target = ins[0].target;
        std::vector<Value> args(ins.begin() + 1, ins.end());
        return exec_function(target, args);
      }
      case NodeKind::MakeTuple:
        return {Value::tuple(std::move(ins))};
      case NodeKind::UnpackTuple:
        return std::move(ins[0].elems);
      case NodeKind::Tag:
        return {Value::sum(n.payload.index, std::move(ins))};
      case NodeKind::QuantumOp:
        return eval_quantum(n, std::move(ins));
      case NodeKind::IntOp:
        return eval_int(n, std::move(ins));
      case NodeKind::FloatOp:
        return eval_float(n, std::move(ins));
      case NodeKind::CmpOp:
        return eval_cmp(n, std::move(ins));
      case NodeKind::ListOp:
        return eval_list(n, std::move(ins));
      case NodeKind::Conditional:
        return eval_conditional(n, std::move(ins));
      case NodeKind::TailLoop:
        return eval_tail_loop(n, std::move(ins));
      case NodeKind::CFG:
        return eval_cfg(n, std::move(ins));
      default:
        throw RuntimeError("internal", "unexpected node kind in dataflow position", n.id);
    }
  }

  std::vector<Value> eval_conditional(const Node& n, std::vector<Value> ins) {
    const Value& sel = ins[0];
    NodeId chosen = kInvalidNode;
    for (NodeId c : n.children)
      if (g.node(c).payload.index == sel.variant) chosen = c;
    if (chosen == kInvalidNode)
      throw RuntimeError("internal", "no case for the selected variant", n.id);
    std::vector<Value> inputs = sel.elems;
    inputs.insert(inputs.end(), ins.begin() + 1, ins.end());
    return exec_container(chosen, inputs);
  }

  std::vector<Value> eval_tail_loop(const Node& n, std::vector<Value> ins) {
    std::vector<Value> carried = std::move(ins);
    while (true) {
      std::vector<Value> row = exec_container(n.id, carried);
      const Value& s = row.at(0);
      if (s.variant == 0) {
        carried = s.elems;
        count_step(n.id);  // each iteration counts
        continue;
      }
      return s.elems;
    }
  }

  std::vector<Value> eval_cfg(const Node& n, std::vector<Value> ins) {
    NodeId entry = kInvalidNode, exit = kInvalidNode;
    for (NodeId c : n.children) {
      if (g.node(c).payload.role == BlockRole::Entry) entry = c;
      if (g.node(c).payload.role == BlockRole::Exit) exit = c;
    }
    NodeId cur = entry;
    std::vector<Value> vals = std::move(ins);
    while (cur != exit) {
      std::vector<Value> row = exec_container(cur, vals);
      const Value& s = row.at(0);
      NodeId succ = kInvalidNode;
      for (const Edge& e : out_edges[cur])
        if (e.src_port == static_cast<std::uint32_t>(s.variant)) succ = e.dst;
      if (succ == kInvalidNode)
        throw RuntimeError("internal", "missing control successor", cur);
      vals = s.elems;
      cur = succ;
    }
    return vals;
  }

  std::vector<Value> eval_quantum(const Node& n, std::vector<Value> ins) {
    const std::string& op = n.payload.name;
    if (op == "qalloc") {
      Value q;
      q.kind = Value::Kind::Qubit;
      q.qubit = next_handle++;
      st.alloc(q.qubit, {1.0, 0.0}, {0.0, 0.0});
      return {q};
    }
    if (op == "h" || op == "x" || op == "z" || op == "t" || op == "tdg" || op == "rz") {
      std::uint64_t h = ins[0].qubit;
      cd m[2][2];
      if (op == "h") {
        m[0][0] = m[0][1] = m[1][0] = kInvSqrt2;
        m[1][1] = -kInvSqrt2;
      } else if (op == "x") {
        m[0][0] = m[1][1] = 0.0;
        m[0][1] = m[1][0] = 1.0;
      } else if (op == "z") {
        m[0][0] = 1.0;
        m[1][1] = -1.0;
        m[0][1] = m[1][0] = 0.0;
      } else if (op == "t" || op == "tdg") {
        double a = op == "t" ? M_PI / 4 : -M_PI / 4;
        m[0][0] = 1.0;
        m[1][1] = std::polar(1.0, a);
        m[0][1] = m[1][0] = 0.0;
      } else {  // rz(theta) = diag(e^{-i theta/2}, e^{i theta/2})
        double theta = ins[1].f;
        m[0][0] = std::polar(1.0, -theta / 2);
        m[1][1] = std::polar(1.0, theta / 2);
        m[0][1] = m[1][0] = 0.0;
      }
      st.apply1(h, m);
      rep.norm_deviation = std::max(rep.norm_deviation, st.norm_deviation());
      return {ins[0]};
    }
    if (op == "cx" || op == "zz") {
      std::uint64_t a = ins[0].qubit, b2 = ins[1].qubit;
      if (a == b2)
        throw RuntimeError("duplicate-handle", "two-qubit gate on one qubit", n.id);
      if (op == "cx")
        st.apply_cx(a, b2);
      else
        st.apply_zz(a, b2);
      rep.norm_deviation = std::max(rep.norm_deviation, st.norm_deviation());
      return {ins[0], ins[1]};
    }
    if (op == "measure" || op == "discard") {
      std::uint64_t h = ins[0].qubit;
      bool bit = st.measure(h, rng);
      rep.norm_deviation = std::max(rep.norm_deviation, st.norm_deviation());
      if (op == "discard") return {};
      rep.measurements.emplace_back(h, bit);
      return {Value::boolean(bit)};
    }
    throw RuntimeError("internal", "unknown quantum op '" + op + "'", n.id);
  }

  std::vector<Value> eval_int(const Node& n, std::vector<Value> ins) {
    const std::string& op = n.payload.name;
    if (op == "not") return {Value::boolean(!ins[0].b)};
    if (op == "bool_to_int") return {Value::integer(ins[0].b ? 1 : 0)};
    if (op == "bool_tag") return {Value::sum(ins[0].b ? 1 : 0, {})};
    if (op == "and" || op == "or" || op == "xor") {
      if (ins[0].kind == Value::Kind::Bool) {
        bool a = ins[0].b, b2 = ins[1].b;
        bool r = op == "and" ? (a && b2) : op == "or" ? (a || b2) : (a != b2);
        return {Value::boolean(r)};
      }
      std::int64_t a = ins[0].i, b2 = ins[1].i;
      std::int64_t r = op == "and" ? (a & b2) : op == "or" ? (a | b2) : (a ^ b2);
      return {Value::integer(r)};
    }
    std::int64_t a = ins[0].i;
    if (op == "neg") {
      if (a == INT64_MIN) throw RuntimeError("integer-overflow", "negation overflows", n.id);
      return {Value::integer(-a)};
    }
    std::int64_t b2 = ins[1].i, r = 0;
    if (op == "add") {
      if (__builtin_add_overflow(a, b2, &r))
        throw RuntimeError("integer-overflow", "addition overflows", n.id);
      return {Value::integer(r)};
    }
    if (op == "sub") {
      if (__builtin_sub_overflow(a, b2, &r))
        throw RuntimeError("integer-overflow", "subtraction overflows", n.id);
      return {Value::integer(r)};
    }
    if (op == "mul") {
      if (__builtin_mul_overflow(a, b2, &r))
        throw RuntimeError("integer-overflow", "multiplication overflows", n.id);
      return {Value::integer(r)};
    }
    if (op == "floordiv" || op == "mod") {
      if (b2 == 0) throw RuntimeError("division-by-zero", "integer division by zero", n.id);
      if (a == INT64_MIN && b2 == -1)
        throw RuntimeError("integer-overflow", "division overflows", n.id);
      std::int64_t q = a / b2, rem = a % b2;
      if (rem != 0 && ((rem < 0) != (b2 < 0))) {
        q -= 1;
        rem += b2;
      }
      return {Value::integer(op == "mod" ? rem : q)};
    }
    if (op == "shl" || op == "shr") {
      if (b2 < 0 || b2 > 63)
        throw RuntimeError("shift-out-of-range", "shift count outside [0,63]", n.id);
      if (op == "shr") return {Value::integer(a >> b2)};
      std::int64_t r2 =
          static_cast<std::int64_t>(static_cast<std::uint64_t>(a) << b2);
      if ((r2 >> b2) != a)
        throw RuntimeError("integer-overflow", "left shift overflows", n.id);
      return {Value::integer(r2)};
    }
    throw RuntimeError("internal", "unknown int op '" + op + "'", n.id);
  }

  std::vector<Value> eval_float(const Node& n, std::vector<Value> ins) {
    const std::string& op = n.payload.name;
    if (op == "neg") return {Value::real(-ins[0].f)};
    if (op == "int_to_float") return {Value::real(static_cast<double>(ins[0].i))};
    double a = ins[0].f, b2 = ins[1].f;
    if (op == "add") return {Value::real(a + b2)};
    if (op == "sub") return {Value::real(a - b2)};
    if (op == "mul") return {Value::real(a * b2)};
    if (op == "div") {
      if (b2 == 0.0) throw RuntimeError("division-by-zero", "float division by zero", n.id);
      return {Value::real(a / b2)};
    }
    throw RuntimeError("internal", "unknown float op '" + op + "'", n.id);
  }

  std::vector<Value> eval_cmp(const Node& n, std::vector<Value> ins) {
    const std::string& op = n.payload.name;
    auto decide = [&](int c) {  // c: -1/0/+1
      if (op == "eq") return c == 0;
      if (op == "ne") return c != 0;
      if (op == "lt") return c < 0;
      if (op == "le") return c <= 0;
      if (op == "gt") return c > 0;
      return c >= 0;  // ge
    };
    int c;
    if (ins[0].kind == Value::Kind::Float) {
      c = ins[0].f < ins[1].f ? -1 : ins[0].f > ins[1].f ? 1 : 0;
      if (std::isnan(ins[0].f) || std::isnan(ins[1].f)) return {Value::boolean(op == "ne")};
    } else if (ins[0].kind == Value::Kind::Bool) {
      c = static_cast<int>(ins[0].b) - static_cast<int>(ins[1].b);
    } else {
      c = ins[0].i < ins[1].i ? -1 : ins[0].i > ins[1].i ? 1 : 0;
    }
    return {Value::boolean(decide(c))};
  }

  std::vector<Value> eval_list(const Node& n, std::vector<Value> ins) {
    const std::string& op = n.payload.name;
    if (op == "nil") return {Value::list({})};
    if (op == "cons") {
      Value lst = std::move(ins[1]);
      lst.elems.insert(lst.elems.begin(), std::move(ins[0]));
      return {lst};
    }
    if (op == "len") {
      Value len = Value::integer(static_cast<std::int64_t>(ins[0].elems.size()));
      if (n.out_ports.size() == 2) return {len, std::move(ins[0])};
      return {len};
    }
    if (op == "get") {
      std::int64_t idx = ins[1].i;
      auto& elems = ins[0].elems;
      if (idx < 0 || static_cast<std::size_t>(idx) >= elems.size())
        throw RuntimeError("index-out-of-range", "list index out of range", n.id);
      Value v = elems[static_cast<std::size_t>(idx)];
      if (n.out_ports.size() == 2) {  // linear get removes the element
        elems.erase(elems.begin() + static_cast<std::ptrdiff_t>(idx));
        return {std::move(v), std::move(ins[0])};
      }
      return {std::move(v)};
    }
    if (op == "apply_idx") {
      Value lst = std::move(ins[0]);
      const Value& fn = ins[1];
      const std::vector<Value>& idxs = ins[2].elems;
      std::vector<std::int64_t> is;
      for (const Value& iv : idxs) {
        if (iv.i < 0 || static_cast<std::size_t>(iv.i) >= lst.elems.size())
          throw RuntimeError("index-out-of-range", "apply index out of range", n.id);
        if (std::find(is.begin(), is.end(), iv.i) != is.end())
          throw RuntimeError("apply-duplicate-index", "apply called with duplicate indices",
                             n.id);
        is.push_back(iv.i);
      }
      std::vector<Value> args;
      for (std::int64_t ix : is) args.push_back(lst.elems[static_cast<std::size_t>(ix)]);
      std::vector<Value> row = exec_function(fn.target, args);
      if (is.size() == 1) {
        lst.elems[static_cast<std::size_t>(is[0])] = std::move(row.at(0));
      } else {
        Value& tup = row.at(0);
        for (std::size_t k = 0; k < is.size(); ++k)
          lst.elems[static_cast<std::size_t>(is[k])] = std::move(tup.elems.at(k));
      }
      return {std::move(lst)};
    }
    if (op == "drop") {
      if (!ins[0].elems.empty())
        throw RuntimeError("internal", "drop of a non-empty linear list", n.id);
      return {};
    }
    throw RuntimeError("internal", "unknown list op '" + op + "'", n.id);
  }

  // Allocates fresh qubits for every qubit-valued argument, in argument order.
  void prepare_args(std::vector<Value>& vs) {
    for (Value& v : vs) {
      if (v.kind == Value::Kind::Qubit) {
        v.qubit = next_handle++;
        st.alloc(v.qubit, v.amp0, v.amp1);
      } else if (!v.elems.empty()) {
        prepare_args(v.elems);
      }
    }
  }
};

void collect_qubits(const Value& v, std::vector<std::uint64_t>& out) {
  if (v.kind == Value::Kind::Qubit) {
    out.push_back(v.qubit);
    return;
  }
  for (const Value& e : v.elems) collect_qubits(e, out);
}

}  // namespace

bool Value::operator==(const Value& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::Bool: return b == o.b;
    case Kind::Int: return i == o.i;
    case Kind::Float: return f == o.f;
    case Kind::Unit: return true;
    case Kind::Qubit: return qubit == o.qubit;
    case Kind::Func: return target == o.target && elems == o.elems;
    case Kind::Sum: return variant == o.variant && elems == o.elems;
    case Kind::Tuple:
    case Kind::List: return elems == o.elems;
  }
  return false;
}

Value const_to_value(const Type& t, const nlohmann::json& j) {
  switch (t.kind()) {
    case Type::Kind::Bool: return Value::boolean(j.get<bool>());
    case Type::Kind::Int: return Value::integer(j.get<std::int64_t>());
    case Type::Kind::Float: return Value::real(j.get<double>());
    case Type::Kind::None: return Value::unit();
    case Type::Kind::Tuple: {
      std::vector<Value> vs;
      for (std::size_t i = 0; i < t.elems().size(); ++i)
        vs.push_back(const_to_value(t.elems()[i], j.at(i)));
      return Value::tuple(std::move(vs));
    }
    case Type::Kind::List: {
      std::vector<Value> vs;
      for (const auto& e : j) vs.push_back(const_to_value(t.list_elem(), e));
      return Value::list(std::move(vs));
    }
    default:
      throw RuntimeError("internal", "constant of non-constant type " + t.tag());
  }
}

nlohmann::json value_to_json(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Bool: return v.b;
    case Value::Kind::Int: return v.i;
    case Value::Kind::Float: return v.f;
    case Value::Kind::Unit: return nullptr;
    case Value::Kind::Qubit: return nlohmann::json{{"qubit", v.qubit}};
    case Value::Kind::Func: return nlohmann::json{{"function", v.target}};
    case Value::Kind::Sum: {
      nlohmann::json vals = nlohmann::json::array();
      for (const Value& e : v.elems) vals.push_back(value_to_json(e));
      return nlohmann::json{{"variant", v.variant}, {"values", vals}};
    }
    case Value::Kind::Tuple: {
      nlohmann::json vals = nlohmann::json::array();
      for (const Value& e : v.elems) vals.push_back(value_to_json(e));
      return nlohmann::json{{"tuple", vals}};
    }
    case Value::Kind::List: {
      nlohmann::json vals = nlohmann::json::array();
      for (const Value& e : v.elems) vals.push_back(value_to_json(e));
      return vals;
    }
  }
  return nullptr;
}

Value value_from_json(const nlohmann::json& j, const Type& expected) {
  switch (expected.kind()) {
    case Type::Kind::Qubit:
      if (j.is_string() && j.get<std::string>() == "qubit")
        return Value::qubit_arg({1.0, 0.0}, {0.0, 0.0});
      break;
    case Type::Kind::Bool:
      if (j.is_boolean()) return Value::boolean(j.get<bool>());
      break;
    case Type::Kind::Int:
      if (j.is_number_integer()) return Value::integer(j.get<std::int64_t>());
      break;
    case Type::Kind::Float:
      if (j.is_number()) return Value::real(j.get<double>());
      break;
    case Type::Kind::None:
      if (j.is_null()) return Value::unit();
      break;
    case Type::Kind::Tuple:
      if (j.is_array() && j.size() == expected.elems().size()) {
        std::vector<Value> vs;
        for (std::size_t i = 0; i < j.size(); ++i)
          vs.push_back(value_from_json(j.at(i), expected.elems()[i]));
        return Value::tuple(std::move(vs));
      }
      break;
    case Type::Kind::List:
      if (j.is_array()) {
        std::vector<Value> vs;
        for (const auto& e : j) vs.push_back(value_from_json(e, expected.list_elem()));
        return Value::list(std::move(vs));
      }
      break;
    default:
      break;
  }
  throw RuntimeError("bad-argument",
                     "argument " + j.dump() + " does not match type " + expected.tag());
}

RunReport run(const Graph& g, const std::string& entry, const std::vector<Value>& args,
              const RunOptions& opts) {
  auto fid = g.find_function(entry);
  if (!fid) throw RuntimeError("entry-not-found", "no function named '" + entry + "'");
  Interp in(g, opts);
  std::vector<Value> prepared = args;
  in.prepare_args(prepared);
  std::vector<Value> row = in.exec_container(*fid, prepared);
  in.rep.result = row.empty() ? Value::unit() : std::move(row[0]);
  std::vector<std::uint64_t> returned;
  collect_qubits(in.rep.result, returned);
  in.rep.qubits_leaked = in.st.live() - returned.size();
  in.rep.norm_deviation = std::max(in.rep.norm_deviation, in.st.norm_deviation());
  return in.rep;
}

StateReport final_statevector(const Graph& g, const std::string& entry,
                              const std::vector<Value>& args, const RunOptions& opts) {
  auto fid = g.find_function(entry);
  if (!fid) throw RuntimeError("entry-not-found", "no function named '" + entry + "'");
  Interp in(g, opts);
  std::vector<Value> prepared = args;
  in.prepare_args(prepared);
  std::vector<Value> row = in.exec_container(*fid, prepared);
  StateReport out;
  out.report.result = row.empty() ? Value::unit() : std::move(row[0]);
  out.report.measurements = in.rep.measurements;
  out.report.steps = in.rep.steps;
  std::vector<std::uint64_t> returned;
  collect_qubits(out.report.result, returned);
  out.report.qubits_leaked = in.st.live() - returned.size();
  out.report.norm_deviation = std::max(in.rep.norm_deviation, in.st.norm_deviation());
  if (out.report.qubits_leaked != 0)
    throw RuntimeError("internal", "statevector requested with leaked qubits");
  std::size_t m = returned.size();
  out.amplitudes.assign(std::size_t{1} << m, {0.0, 0.0});
  for (std::size_t i = 0; i < out.amplitudes.size(); ++i) {
    std::size_t src = 0;
    for (std::size_t k = 0; k < m; ++k) {
      std::size_t bit = (i >> (m - 1 - k)) & 1;
      src |= bit << in.st.position(returned[k]);
    }
    out.amplitudes[i] = in.st.amplitudes()[src];
  }
  return out;
}

}  // namespace guppy
