#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "guppy/compile.hpp"
#include "guppy/rewrite.hpp"
#include "guppy/sim.hpp"

namespace py = pybind11;

namespace {

guppy::ConstBindings parse_bindings_or_throw(const std::string& bindings_json) {
  std::string err;
  auto b = guppy::parse_bindings(bindings_json, err);
  if (!b) throw py::value_error("bad bindings: " + err);
  return std::move(*b);
}

guppy::LoweringMode parse_mode(const std::string& mode) {
  if (mode == "structured") return guppy::LoweringMode::Structured;
  if (mode == "cfg") return guppy::LoweringMode::Cfg;
  throw py::value_error("mode must be 'structured' or 'cfg'");
}

std::string render_all(const std::vector<guppy::Diagnostic>& ds) {
  std::string out;
  for (const auto& d : ds) {
    out += guppy::render_diagnostic(d, "<source>");
    out += "\n";
  }
  return out;
}

std::string compile_str(const std::string& source, const std::string& bindings_json,
                        const std::string& mode) {
  auto res = guppy::compile_source(source, parse_bindings_or_throw(bindings_json),
                                   parse_mode(mode));
  if (!res.ok()) throw py::value_error(render_all(res.diagnostics));
  return guppy::serialize(*res.graph);
}

py::dict validate_str(const std::string& ir) {
  guppy::Graph g = guppy::deserialize(ir);
  py::dict out;
  out["nodes"] = g.nodes().size();
  out["edges"] = g.edges().size();
  return out;
}

std::string optimize_str(const std::string& ir, const std::vector<std::string>& rule_names,
                         int max_passes) {
  guppy::Graph g = guppy::deserialize(ir);
  std::vector<const guppy::RewritePattern*> rules;
  if (rule_names.empty()) {
    for (const auto& p : guppy::builtin_rules()) rules.push_back(&p);
  } else {
    for (const auto& name : rule_names) {
      auto named = guppy::rules_named(name);
      if (named.empty()) throw py::value_error("unknown rule '" + name + "'");
      rules.insert(rules.end(), named.begin(), named.end());
    }
  }
  return guppy::serialize(guppy::run_pipeline(g, rules, max_passes));
}

std::string run_str(const std::string& ir, const std::string& entry,
                    const std::string& args_json, std::uint64_t seed,
                    std::uint64_t max_steps) {
  guppy::Graph g = guppy::deserialize(ir);
  auto fid = g.find_function(entry);
  if (!fid) throw py::value_error("no function named '" + entry + "'");
  const auto& sig = g.node(*fid).payload.sig;
  nlohmann::json ja = nlohmann::json::parse(args_json);
  if (!ja.is_array() || ja.size() != sig->params.size())
    throw py::value_error("args must be a JSON array matching the entry signature");
  std::vector<guppy::Value> args;
  for (std::size_t i = 0; i < ja.size(); ++i)
    args.push_back(guppy::value_from_json(ja[i], sig->params[i]));
  guppy::RunOptions opts;
  opts.seed = seed;
  opts.max_steps = max_steps;
  guppy::RunReport rep = guppy::run(g, entry, args, opts);
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& [h, bit] : rep.measurements) ms.push_back({h, bit ? 1 : 0});
  nlohmann::json out = {{"result", guppy::value_to_json(rep.result)},
                        {"measurements", ms},
                        {"qubits_leaked", rep.qubits_leaked},
                        {"steps", rep.steps}};
  return out.dump();
}

}  // namespace

PYBIND11_MODULE(_guppyc, m) {
  m.doc() = "Guppy-dialect compiler and reference executor";

  py::register_exception<guppy::RuntimeError>(m, "ExecutionError");
  py::register_exception<guppy::DeserializeError>(m, "GraphFormatError");

  m.def("compile", &compile_str, py::arg("source"), py::arg("bindings") = "{}",
        py::arg("mode") = "structured",
        "Compile source text to canonical IR JSON; raises ValueError with "
        "rendered diagnostics on error.");
  m.def("validate", &validate_str, py::arg("ir"),
        "Parse and validate IR JSON; returns {'nodes': n, 'edges': m}.");
  m.def("optimize", &optimize_str, py::arg("ir"),
        py::arg("rules") = std::vector<std::string>{}, py::arg("max_passes") = 10,
        "Apply peephole rules (default: all built-ins) and return new IR JSON.");
  m.def("run", &run_str, py::arg("ir"), py::arg("entry") = "main", py::arg("args") = "[]",
        py::arg("seed") = 0, py::arg("max_steps") = 10'000'000,
        "Execute a function in an IR graph; returns the run report as a JSON "
        "string.");
}
