#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "guppy/compile.hpp"
#include "guppy/rewrite.hpp"
#include "guppy/sim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDiagnostics = 1;
constexpr int kExitIo = 2;
constexpr int kExitRuntime = 3;

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << data;
  return bool(out);
}

nlohmann::json diag_to_json(const guppy::Diagnostic& d) {
  nlohmann::json notes = nlohmann::json::array();
  for (const auto& n : d.notes)
    notes.push_back({{"line", n.span.line}, {"col", n.span.col}, {"text", n.text}});
  return {{"code", guppy::diag_code(d.category)},
          {"message", d.message},
          {"line", d.span.line},
          {"col", d.span.col},
          {"start", d.span.start},
          {"end", d.span.end},
          {"notes", notes}};
}

void print_diagnostics(const std::vector<guppy::Diagnostic>& ds, const std::string& file,
                       const std::string& format) {
  if (format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& d : ds) arr.push_back(diag_to_json(d));
    std::cerr << arr.dump(2) << "\n";
  } else {
    for (const auto& d : ds) std::cerr << guppy::render_diagnostic(d, file) << "\n";
  }
}

// Loads bindings if a path was given; empty bindings otherwise. Returns an
// exit code on failure.
std::optional<int> load_bindings(const std::string& path, guppy::ConstBindings& out) {
  if (path.empty()) return std::nullopt;
  auto text = read_file(path);
  if (!text) {
    std::cerr << "error: cannot read bindings file '" << path << "'\n";
    return kExitIo;
  }
  std::string err;
  auto parsed = guppy::parse_bindings(*text, err);
  if (!parsed) {
    std::cerr << "error: bad bindings file: " << err << "\n";
    return kExitDiagnostics;
  }
  out = std::move(*parsed);
  return std::nullopt;
}

// A graph file is JSON starting with '{'; anything else is source text.
bool looks_like_ir(const std::string& text) {
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
    return c == '{';
  }
  return false;
}

nlohmann::json report_to_json(const guppy::RunReport& rep) {
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& [h, bit] : rep.measurements) ms.push_back({h, bit ? 1 : 0});
  return {{"result", guppy::value_to_json(rep.result)},
          {"measurements", ms},
          {"qubits_leaked", rep.qubits_leaked},
          {"steps", rep.steps}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guppy-dialect compiler and reference executor"};
  app.require_subcommand(1);

  std::string input, output, bindings_path, entry = "main", args_json = "[]";
  std::string lowering = "structured", format = "human", rules_csv;
  std::uint64_t seed = 0, max_steps = 10'000'000;
  int max_passes = 10;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("input", input, "input file")->required();
    cmd->add_option("--format", format, "diagnostic format: human|json")
        ->check(CLI::IsMember({"human", "json"}));
  };

  CLI::App* c_compile = app.add_subcommand("compile", "compile source to IR");
  add_common(c_compile);
  c_compile->add_option("-o,--output", output, "IR output path")->required();
  c_compile->add_option("--bindings", bindings_path, "py(...) bindings JSON");
  c_compile->add_option("--lowering", lowering, "structured|cfg")
      ->check(CLI::IsMember({"structured", "cfg"}));

  CLI::App* c_validate = app.add_subcommand("validate", "validate an IR file");
  add_common(c_validate);

  CLI::App* c_opt = app.add_subcommand("opt", "apply peephole rewrites to IR");
  add_common(c_opt);
  c_opt->add_option("-o,--output", output, "IR output path")->required();
  c_opt->add_option("--rule", rules_csv, "comma-separated rule names (default: all)");
  c_opt->add_option("--max-passes", max_passes, "rewrite pass limit");

  CLI::App* c_run = app.add_subcommand("run", "execute a source or IR file");
  add_common(c_run);
  c_run->add_option("--entry", entry, "entry function (default main)");
  c_run->add_option("--args", args_json, "JSON array of arguments");
  c_run->add_option("--seed", seed, "rng seed");
  c_run->add_option("--max-steps", max_steps, "step limit");
  c_run->add_option("--bindings", bindings_path, "py(...) bindings JSON");
  c_run->add_option("--lowering", lowering, "structured|cfg")
      ->check(CLI::IsMember({"structured", "cfg"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitIo;
  }

  auto text = read_file(input);
  if (!text) {
    std::cerr << "error: cannot read '" << input << "'\n";
    return kExitIo;
  }
  guppy::LoweringMode mode =
      lowering == "cfg" ? guppy::LoweringMode::Cfg : guppy::LoweringMode::Structured;

  if (c_compile->parsed()) {
    guppy::ConstBindings bindings;
    if (auto rc = load_bindings(bindings_path, bindings)) return *rc;
    guppy::CompileResult res = guppy::compile_source(*text, bindings, mode);
    if (!res.ok()) {
      print_diagnostics(res.diagnostics, input, format);
      return kExitDiagnostics;
    }
    if (!write_file(output, guppy::serialize(*res.graph))) {
      std::cerr << "error: cannot write '" << output << "'\n";
      return kExitIo;
    }
    return kExitOk;
  }

  if (c_validate->parsed()) {
    try {
      guppy::Graph g = guppy::deserialize(*text);
      std::cout << "ok: " << g.nodes().size() << " nodes, " << g.edges().size()
                << " edges\n";
      return kExitOk;
    } catch (const guppy::DeserializeError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitDiagnostics;
    }
  }

  if (c_opt->parsed()) {
    std::vector<const guppy::RewritePattern*> rules;
    if (rules_csv.empty()) {
      for (const auto& p : guppy::builtin_rules()) rules.push_back(&p);
    } else {
      std::stringstream ss(rules_csv);
      std::string name;
      while (std::getline(ss, name, ',')) {
        auto named = guppy::rules_named(name);
        if (named.empty()) {
          std::cerr << "error: unknown rule '" << name
                    << "' (known: hh, xx, zz, tdgt, cxcx, rzfuse)\n";
          return kExitDiagnostics;
        }
        rules.insert(rules.end(), named.begin(), named.end());
      }
    }
    try {
      guppy::Graph g = guppy::deserialize(*text);
      std::size_t before = g.nodes().size();
      guppy::Graph out = guppy::run_pipeline(g, rules, max_passes);
      if (!write_file(output, guppy::serialize(out))) {
        std::cerr << "error: cannot write '" << output << "'\n";
        return kExitIo;
      }
      std::cout << "nodes: " << before << " -> " << out.nodes().size() << "\n";
      return kExitOk;
    } catch (const guppy::DeserializeError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitDiagnostics;
    }
  }

  // run
  guppy::Graph graph;
  if (looks_like_ir(*text)) {
    try {
      graph = guppy::deserialize(*text);
    } catch (const guppy::DeserializeError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitDiagnostics;
    }
  } else {
    guppy::ConstBindings bindings;
    if (auto rc = load_bindings(bindings_path, bindings)) return *rc;
    guppy::CompileResult res = guppy::compile_source(*text, bindings, mode);
    if (!res.ok()) {
      print_diagnostics(res.diagnostics, input, format);
      return kExitDiagnostics;
    }
    graph = std::move(*res.graph);
  }

  auto fid = graph.find_function(entry);
  if (!fid) {
    std::cerr << "error: no function named '" << entry << "'\n";
    return kExitDiagnostics;
  }
  const auto& sig = graph.node(*fid).payload.sig;
  nlohmann::json ja;
  try {
    ja = nlohmann::json::parse(args_json);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: bad --args JSON: " << e.what() << "\n";
    return kExitIo;
  }
  if (!ja.is_array() || ja.size() != sig->params.size()) {
    std::cerr << "error: --args must be a JSON array of " << sig->params.size()
              << " values\n";
    return kExitDiagnostics;
  }
  std::vector<guppy::Value> args;
  try {
    for (std::size_t i = 0; i < ja.size(); ++i)
      args.push_back(guppy::value_from_json(ja[i], sig->params[i]));
    guppy::RunOptions opts;
    opts.seed = seed;
    opts.max_steps = max_steps;
    guppy::RunReport rep = guppy::run(graph, entry, args, opts);
    std::cout << report_to_json(rep).dump(2) << "\n";
    return kExitOk;
  } catch (const guppy::RuntimeError& e) {
    if (e.kind == "bad-argument") {
      std::cerr << "error: " << e.what() << "\n";
      return kExitDiagnostics;
    }
    nlohmann::json err = {{"error", e.kind}, {"message", e.what()}};
    if (e.node != guppy::kInvalidNode) err["node"] = e.node;
    std::cerr << err.dump(2) << "\n";
    return kExitRuntime;
  }
}
