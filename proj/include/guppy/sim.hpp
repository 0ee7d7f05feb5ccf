#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "guppy/ir.hpp"

namespace guppy {

// Execution failure with a stable machine-readable kind:
// integer-overflow, division-by-zero, index-out-of-range,
// apply-duplicate-index, step-limit-exceeded, shift-out-of-range.
struct RuntimeError : std::runtime_error {
  std::string kind;
  NodeId node;
  RuntimeError(std::string k, const std::string& msg, NodeId n = kInvalidNode)
      : std::runtime_error(msg), kind(std::move(k)), node(n) {}
};

// Runtime value. `Qubit` holds a live handle during execution; in an
// *argument* position the amplitudes describe the state the harness prepares
// the fresh qubit in (default |0>).
struct Value {
  enum class Kind { Bool, Int, Float, Unit, Tuple, List, Qubit, Func, Sum };
  Kind kind = Kind::Unit;
  bool b = false;
  std::int64_t i = 0;
  double f = 0.0;
  std::vector<Value> elems;          // Tuple / List / Sum payload / Func env
  std::uint64_t qubit = 0;           // Qubit: handle id
  std::complex<double> amp0{1.0, 0.0}, amp1{0.0, 0.0};  // Qubit argument prep
  NodeId target = kInvalidNode;      // Func
  int variant = -1;                  // Sum

  static Value boolean(bool v) { Value x; x.kind = Kind::Bool; x.b = v; return x; }
  static Value integer(std::int64_t v) { Value x; x.kind = Kind::Int; x.i = v; return x; }
  static Value real(double v) { Value x; x.kind = Kind::Float; x.f = v; return x; }
  static Value unit() { return Value{}; }
  static Value tuple(std::vector<Value> vs) {
    Value x; x.kind = Kind::Tuple; x.elems = std::move(vs); return x;
  }
  static Value list(std::vector<Value> vs) {
    Value x; x.kind = Kind::List; x.elems = std::move(vs); return x;
  }
  static Value qubit_arg(std::complex<double> a0, std::complex<double> a1) {
    Value x; x.kind = Kind::Qubit; x.amp0 = a0; x.amp1 = a1; return x;
  }
  static Value function(NodeId t) { Value x; x.kind = Kind::Func; x.target = t; return x; }
  static Value sum(int variant, std::vector<Value> payload) {
    Value x; x.kind = Kind::Sum; x.variant = variant; x.elems = std::move(payload); return x;
  }

  bool operator==(const Value& o) const;
};

// JSON rendering used by the CLI report (qubits appear as {"qubit": id}).
nlohmann::json value_to_json(const Value& v);

// Decodes a CLI argument against the expected parameter type; the string
// "qubit" allocates a fresh |0> qubit. Throws RuntimeError("bad-argument")
// on mismatch.
Value value_from_json(const nlohmann::json& j, const Type& expected);

// Converts a typed compile-time constant into a runtime value.
Value const_to_value(const Type& t, const nlohmann::json& j);

struct RunReport {
  Value result;
  std::vector<std::pair<std::uint64_t, bool>> measurements;  // (handle id, bit)
  std::uint64_t qubits_leaked = 0;
  std::uint64_t steps = 0;
  double norm_deviation = 0.0;  // max | ||amps|| - 1 | observed
};

struct RunOptions {
  std::uint64_t seed = 0;
  std::uint64_t max_steps = 10'000'000;
};

// Executes `entry` on a validated graph. Deterministic in (graph, args, seed).
RunReport run(const Graph& g, const std::string& entry, const std::vector<Value>& args,
              const RunOptions& opts = {});

struct StateReport {
  RunReport report;
  // amplitudes over the returned qubits in return-position order; the first
  // returned qubit is the most significant bit of the index
  std::vector<std::complex<double>> amplitudes;
};

// As run, but additionally extracts the final state over exactly the qubits
// contained in the result value (in result order).
StateReport final_statevector(const Graph& g, const std::string& entry,
                              const std::vector<Value>& args, const RunOptions& opts = {});

}  // namespace guppy
