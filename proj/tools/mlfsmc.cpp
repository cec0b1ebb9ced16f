// mlfsmc: validate, graph, generate, simulate and audit multi-level FSM contracts.
//
// Exit status: 0 success, 1 validation/audit/script failure, 2 usage error,
// 3 internal error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <unistd.h>

#include <CLI11.hpp>

#include "mlfsm/audit.hpp"
#include "mlfsm/codegen.hpp"
#include "mlfsm/depgraph.hpp"
#include "mlfsm/interpreter.hpp"
#include "mlfsm/loader.hpp"
#include "mlfsm/validator.hpp"

namespace fs = std::filesystem;
using namespace mlfsm;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;
constexpr int kInternal = 3;

// Thrown for anything the user should fix on the command line.
struct UsageError : Error {
  using Error::Error;
};

bool use_color() {
  const char* env = std::getenv("MLFSM_COLOR");
  const std::string mode = env ? env : "auto";
  if (mode == "always") return true;
  if (mode == "never") return false;
  return ::isatty(STDERR_FILENO) != 0;
}

std::string read_input(const std::string& path, const char* what) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw UsageError(std::string(what) + " '" + path + "' does not exist");
  return read_text_file(path);
}

ContractSpec load_spec(const std::string& path) { return load_contract_spec(read_input(path, "spec"), path); }

PackageSet load_packages(const std::string& dir) {
  if (dir.empty()) return {};
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw UsageError("package directory '" + dir + "' does not exist");
  return load_package_dir(dir);
}

// Writes via a sibling temporary so a failed run never leaves half a file.
void write_file_atomically(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("cannot write '" + path.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot write '" + path.string() + "': " + ec.message());
  }
}

void print_diagnostics(const std::vector<Diagnostic>& diags) {
  const bool color = use_color();
  for (const auto& d : diags) std::cerr << format_diagnostic(d, color) << "\n";
}

void print_summary(const std::vector<Diagnostic>& diags) {
  std::cerr << count_severity(diags, Severity::Error) << " error(s), " << count_severity(diags, Severity::Warning)
            << " warning(s)\n";
}

bool fails(const std::vector<Diagnostic>& diags, bool strict) {
  return has_errors(diags) || (strict && count_severity(diags, Severity::Warning) > 0);
}

void print_findings(const std::vector<AuditFinding>& findings, bool json) {
  if (json) {
    std::cout << findings_to_json(findings);
    return;
  }
  for (const auto& f : findings) std::cout << format_finding(f) << "\n";
}

struct Options {
  std::string spec;
  std::string packages;
  std::string out;
  std::string dot;
  std::string focus;
  std::string script;
  std::string trace;
  std::string target;
  bool json = false;
  bool strict = false;
};

int cmd_validate(const Options& o) {
  const auto spec = load_spec(o.spec);
  const auto packages = load_packages(o.packages);
  const auto diags = validate(spec, packages);
  if (o.json) std::cout << diagnostics_to_json(diags);
  else print_diagnostics(diags);
  print_summary(diags);
  return fails(diags, o.strict) ? kFailed : kOk;
}

int cmd_graph(const Options& o) {
  const auto spec = load_spec(o.spec);
  const auto graph = build_graph(spec);
  std::string dot;
  try {
    dot = to_dot(graph, spec, o.focus.empty() ? std::nullopt : std::optional<std::string>(o.focus));
  } catch (const UnknownFocus& e) {
    throw UsageError(e.what());
  }
  if (o.dot.empty()) std::cout << dot;
  else write_file_atomically(o.dot, dot);
  return kOk;
}

int cmd_gen(const Options& o) {
  const auto spec = load_spec(o.spec);
  const auto packages = load_packages(o.packages);
  const auto diags = validate(spec, packages);
  print_diagnostics(diags);
  if (fails(diags, o.strict)) {
    print_summary(diags);
    std::cerr << "nothing written\n";
    return kFailed;
  }

  GeneratedBundle bundle;
  try {
    bundle = generate(spec, packages);
  } catch (const GenerationError& e) {
    print_diagnostics(e.diagnostics());
    std::cerr << "error: " << e.what() << "\nnothing written\n";
    return kFailed;
  }

  const auto findings = audit_generated(bundle);
  if (has_failures(findings)) {
    for (const auto& f : findings) std::cerr << format_finding(f) << "\n";
    std::cerr << "audit failed; nothing written\n";
    return kFailed;
  }

  write_bundle(bundle, o.out);
  for (const auto& u : bundle.units) {
    std::cout << to_string(u.kind) << "\t" << u.id << "\t" << u.file_name;
    if (!u.dependencies.empty()) {
      std::cout << "\t(";
      for (std::size_t i = 0; i < u.dependencies.size(); ++i) std::cout << (i ? ", " : "") << u.dependencies[i];
      std::cout << ")";
    }
    std::cout << "\n";
  }
  std::cout << "wrote " << bundle.units.size() << " unit(s) and manifest.json to " << o.out << "\n";
  return kOk;
}

int cmd_simulate(const Options& o) {
  const auto spec = load_spec(o.spec);
  const auto packages = load_packages(o.packages);

  std::vector<ScriptStep> script;
  try {
    script = parse_script(read_input(o.script, "script"), o.script);
  } catch (const SyntaxError& e) {
    throw UsageError(e.what());
  } catch (const SchemaError& e) {
    throw UsageError(e.what());
  }

  std::optional<ExecutionEnv> env;
  try {
    env.emplace(spec, packages);
  } catch (const SpecNotValidated& e) {
    print_diagnostics(e.diagnostics());
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }

  try {
    run_script(*env, script);
  } catch (const ScriptAssertionFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  } catch (const UnknownClause& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  } catch (const UnknownTrigger& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  } catch (const UnknownVariable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  } catch (const TypeMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }

  const std::string trace = trace_to_jsonl(env->trace());
  if (o.trace.empty()) std::cout << trace;
  else write_file_atomically(o.trace, trace);
  std::cerr << script.size() << " step(s) passed, " << env->trace().size() << " trace event(s)\n";
  return kOk;
}

int cmd_audit(const Options& o) {
  std::error_code ec;
  std::vector<AuditFinding> findings;
  if (fs::is_directory(o.target, ec)) {
    const auto units = load_source_dir(o.target);
    if (units.empty()) {
      std::cerr << "info: no units found in '" << o.target << "'\n";
      if (o.json) std::cout << findings_to_json({});
      return kOk;
    }
    findings = audit_sources(units);
  } else if (fs::is_regular_file(o.target, ec)) {
    const auto spec = load_spec(o.target);
    const auto packages = load_packages(o.packages);
    findings = audit_spec(spec, packages);
    const auto diags = validate(spec, packages);
    if (has_errors(diags)) {
      print_diagnostics(diags);
      std::cerr << "spec does not validate; generated code not audited\n";
      print_findings(findings, o.json);
      return kFailed;
    }
    const auto generated = audit_generated(generate(spec, packages));
    findings.insert(findings.end(), generated.begin(), generated.end());
  } else {
    throw UsageError("audit target '" + o.target + "' does not exist");
  }
  print_findings(findings, o.json);
  return has_failures(findings) ? kFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-level FSM contract compiler"};
  app.require_subcommand(1);
  Options o;

  auto* validate_cmd = app.add_subcommand("validate", "Check a contract spec and report diagnostics");
  validate_cmd->add_option("spec", o.spec, "Contract spec (JSON)")->required();
  validate_cmd->add_option("--packages", o.packages, "Directory of *.pkg.json package libraries");
  validate_cmd->add_flag("--json", o.json, "Print diagnostics as JSON on stdout");
  validate_cmd->add_flag("--strict", o.strict, "Treat warnings as errors");

  auto* graph_cmd = app.add_subcommand("graph", "Emit the clause dependency graph as DOT");
  graph_cmd->add_option("spec", o.spec, "Contract spec (JSON)")->required();
  graph_cmd->add_option("--dot", o.dot, "Output file (default: stdout)");
  graph_cmd->add_option("--focus", o.focus, "Expand one clause into its states and transitions");

  auto* gen_cmd = app.add_subcommand("gen", "Generate, format and audit Solidity sources");
  gen_cmd->add_option("spec", o.spec, "Contract spec (JSON)")->required();
  gen_cmd->add_option("--packages", o.packages, "Directory of *.pkg.json package libraries")->required();
  gen_cmd->add_option("--out", o.out, "Output directory")->required();
  gen_cmd->add_flag("--strict", o.strict, "Treat warnings as errors");

  auto* sim_cmd = app.add_subcommand("simulate", "Run a script against the interpreter");
  sim_cmd->add_option("spec", o.spec, "Contract spec (JSON)")->required();
  sim_cmd->add_option("--packages", o.packages, "Directory of *.pkg.json package libraries")->required();
  sim_cmd->add_option("--script", o.script, "Script (JSON array of steps)")->required();
  sim_cmd->add_option("--trace", o.trace, "Trace output, JSON lines (default: stdout)");

  auto* audit_cmd = app.add_subcommand("audit", "Audit a source directory or a contract spec");
  audit_cmd->add_option("target", o.target, "Directory of .sol files, or a contract spec")->required();
  audit_cmd->add_option("--packages", o.packages, "Directory of *.pkg.json package libraries");
  audit_cmd->add_flag("--json", o.json, "Print findings as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(o);
    if (*graph_cmd) return cmd_graph(o);
    if (*gen_cmd) return cmd_gen(o);
    if (*sim_cmd) return cmd_simulate(o);
    if (*audit_cmd) return cmd_audit(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
