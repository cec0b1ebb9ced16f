#include "mlfsm/codegen.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "mlfsm/depgraph.hpp"

namespace mlfsm {

std::string_view to_string(UnitKind kind) {
  switch (kind) {
    case UnitKind::Package: return "package";
    case UnitKind::Clause: return "clause";
    case UnitKind::Orchestrator: return "orchestrator";
  }
  return "?";
}

const GeneratedUnit* GeneratedBundle::find(std::string_view id) const {
  for (const auto& u : units)
    if (u.id == id) return &u;
  return nullptr;
}

std::vector<std::string> GeneratedBundle::deployment_order() const {
  std::vector<std::string> out;
  for (const auto& u : units) out.push_back(u.id);
  return out;
}

std::string GeneratedBundle::manifest_json() const {
  nlohmann::ordered_json j;
  j["order"] = deployment_order();
  nlohmann::ordered_json units_json = nlohmann::ordered_json::object();
  for (const auto& u : units) {
    units_json[u.id] = {{"file", u.file_name}, {"constructor_args", u.dependencies}};
  }
  j["units"] = std::move(units_json);
  return j.dump(2) + "\n";
}

GenerationError::GenerationError(const std::string& message, std::vector<Diagnostic> diagnostics)
    : Error(message), diagnostics_(std::move(diagnostics)) {}

namespace {

constexpr std::array<std::string_view, 7> kForbidden = {
    "tx.origin", "delegatecall", "selfdestruct", "assembly", ".call(", "block.timestamp", "block.number",
};

const std::set<std::string_view>& reserved_words() {
  static const std::set<std::string_view> words = {
      // keywords
      "abstract", "address", "after", "alias", "anonymous", "apply", "as", "assembly", "auto", "bool", "break",
      "byte", "bytes", "calldata", "case", "catch", "constant", "constructor", "continue", "contract", "copyof",
      "default", "define", "delete", "do", "else", "emit", "enum", "error", "event", "external", "fallback", "false",
      "final", "fixed", "for", "function", "gwei", "hex", "if", "immutable", "implements", "import", "in", "indexed",
      "inline", "interface", "internal", "is", "let", "library", "macro", "mapping", "match", "memory", "modifier",
      "mutable", "new", "null", "of", "override", "partial", "payable", "pragma", "private", "promise", "public",
      "pure", "receive", "reference", "relocatable", "return", "returns", "revert", "sealed", "sizeof", "static",
      "storage", "string", "struct", "super", "supports", "switch", "this", "throw", "true", "try", "type",
      "typedef", "typeof", "ufixed", "unchecked", "using", "var", "view", "virtual", "while", "wei", "ether",
      "seconds", "minutes", "hours", "days", "weeks", "years", "transient", "unicode", "global",
      // globals
      "abi", "block", "msg", "tx", "now", "gasleft", "blockhash", "blobhash", "require", "assert", "keccak256",
      "sha256", "ripemd160", "ecrecover", "addmod", "mulmod", "selfdestruct", "suicide", "int", "uint",
  };
  return words;
}

// Names the generator itself introduces inside clause and package contracts.
const std::set<std::string_view>& generated_member_names() {
  static const std::set<std::string_view> names = {
      "state", "State", "isCompleted", "TransitionFired", "ClauseCompleted", "owner", "onlyOwner",
  };
  return names;
}

void require_name(const std::string& name, const std::string& what) {
  if (!is_identifier(name)) throw GenerationError(what + " '" + name + "' is not a valid identifier");
  if (is_reserved_word(name)) throw GenerationError(what + " '" + name + "' collides with a reserved word");
}

std::string sol_type(ValueType t) { return t == ValueType::Int ? "int256" : "bool"; }

std::string sol_string(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string package_unit_id(const std::string& pkg) { return "Package_" + pkg; }
std::string clause_unit_id(const std::string& clause) { return "Clause_" + clause; }
std::string package_member(const std::string& pkg) { return "package_" + pkg; }
std::string clause_member(const std::string& clause) { return "clause_" + clause; }

class Source {
 public:
  Source& line(const std::string& text = {}) {
    out_ << text << "\n";
    return *this;
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

void header(Source& src, const std::string& what) {
  src.line("// SPDX-License-Identifier: UNLICENSED");
  src.line("// Generated by mlfsmc (" + what + "). Do not edit.");
  src.line("pragma solidity ^0.8.0;");
  src.line();
}

GeneratedUnit emit_package(const PackageLibrary& pkg) {
  const std::string name = package_unit_id(pkg.id);
  std::set<std::string> members;
  for (const auto& v : pkg.variables) {
    require_name(v.name, "variable");
    members.insert(v.name);
  }
  for (const auto& f : pkg.functions) {
    require_name(f.name, "function");
    members.insert(f.name);
    for (const auto& p : f.params) require_name(p.name, "parameter");
  }
  for (const auto& s : pkg.structures) {
    require_name(s.name, "structure");
    members.insert(s.name);
    for (const auto& fld : s.fields) require_name(fld.name, "field");
  }
  for (const auto& m : members) {
    if (generated_member_names().contains(m) || (m.starts_with("set_") && members.contains(m.substr(4))))
      throw GenerationError("package '" + pkg.id + "': member '" + m + "' collides with a generated member");
  }

  Source src;
  header(src, "package " + pkg.id);
  src.line("contract " + name + " {");
  src.line("address public immutable owner;");
  if (!pkg.variables.empty()) {
    src.line();
    for (const auto& v : pkg.variables) src.line(sol_type(v.type) + " public " + v.name + ";");
  }
  for (const auto& s : pkg.structures) {
    src.line();
    src.line("struct " + s.name + " {");
    for (const auto& f : s.fields) src.line(sol_type(f.type) + " " + f.name + ";");
    src.line("}");
  }
  src.line();
  src.line("modifier onlyOwner() {");
  src.line("require(msg.sender == owner, " + sol_string(name + ": caller is not the owner") + ");");
  src.line("_;");
  src.line("}");
  src.line();
  src.line("constructor() {");
  src.line("owner = msg.sender;");
  for (const auto& v : pkg.variables) src.line(v.name + " = " + v.initial.to_string() + ";");
  src.line("}");
  for (const auto& v : pkg.variables) {
    src.line();
    src.line("function set_" + v.name + "(" + sol_type(v.type) + " " + v.name + "_) external onlyOwner {");
    src.line(v.name + " = " + v.name + "_;");
    src.line("}");
  }
  for (const auto& f : pkg.functions) {
    std::string params;
    for (std::size_t i = 0; i < f.params.size(); ++i) {
      if (i) params += ", ";
      params += sol_type(f.params[i].type) + " " + f.params[i].name;
    }
    const bool reads_state = !referenced_variables(*f.body).empty();
    src.line();
    src.line("function " + f.name + "(" + params + ") external " + (reads_state ? "view" : "pure") + " returns (" +
             sol_type(f.returns) + ") {");
    src.line("return " + translate_expr(*f.body, {.typed_int_literals = true}) + ";");
    src.line("}");
  }
  src.line("}");
  return {UnitKind::Package, name, name + ".sol", src.str(), {}};
}

GeneratedUnit emit_clause(const ClauseAutomaton& c, const std::vector<std::string>& package_deps,
                          const std::vector<std::string>& clause_deps) {
  const std::string name = clause_unit_id(c.id);
  for (const auto& s : c.states) require_name(s, "state");
  std::set<std::string> members;
  for (const auto& p : package_deps) members.insert(package_member(p));
  for (const auto& d : clause_deps) members.insert(clause_member(d));
  for (const auto& trig : c.triggers()) {
    require_name(trig, "trigger");
    if (generated_member_names().contains(trig) || members.contains(trig))
      throw GenerationError("clause '" + c.id + "': trigger '" + trig + "' collides with a generated member");
  }

  Source src;
  header(src, "clause " + c.id);
  for (const auto& p : package_deps) src.line("import \"./" + package_unit_id(p) + ".sol\";");
  for (const auto& d : clause_deps) src.line("import \"./" + clause_unit_id(d) + ".sol\";");
  if (!package_deps.empty() || !clause_deps.empty()) src.line();

  std::string states;
  for (std::size_t i = 0; i < c.states.size(); ++i) states += (i ? ", " : "") + c.states[i];

  src.line("contract " + name + " {");
  src.line("enum State { " + states + " }");
  src.line();
  src.line("event TransitionFired(string clause, string trigger, string source, string destination);");
  src.line("event ClauseCompleted(string clause);");
  src.line();
  src.line("State public state;");

  std::vector<std::pair<std::string, std::string>> refs;  // (type, member)
  for (const auto& p : package_deps) refs.emplace_back(package_unit_id(p), package_member(p));
  for (const auto& d : clause_deps) refs.emplace_back(clause_unit_id(d), clause_member(d));
  if (!refs.empty()) {
    src.line();
    for (const auto& [type, member] : refs) src.line(type + " public immutable " + member + ";");
  }

  std::string ctor_params;
  for (std::size_t i = 0; i < refs.size(); ++i)
    ctor_params += (i ? ", " : "") + refs[i].first + " " + refs[i].second + "_";
  src.line();
  src.line("constructor(" + ctor_params + ") {");
  for (const auto& [type, member] : refs) src.line(member + " = " + member + "_;");
  src.line("state = State." + c.initial + ";");
  src.line("}");

  for (const auto& trig : c.triggers()) {
    src.line();
    src.line("function " + trig + "() external {");
    for (const auto& t : c.transitions) {
      if (t.trigger != trig) continue;
      src.line("if (state == State." + t.source + ") {");
      for (const auto& cond : t.conditions) {
        std::string check;
        if (const auto* dep = std::get_if<AutomatonCompleted>(&*cond.ref)) {
          check = clause_member(dep->automaton) + ".isCompleted()";
        } else {
          const auto& call = std::get<PackageCall>(*cond.ref);
          check = package_member(call.package) + "." + call.function + "()";
        }
        src.line("require(" + check + ", " + sol_string("GuardFailed: " + cond.token) + ");");
      }
      src.line("state = State." + t.destination + ";");
      src.line("emit TransitionFired(" + sol_string(c.id) + ", " + sol_string(trig) + ", " + sol_string(t.source) +
               ", " + sol_string(t.destination) + ");");
      if (c.is_final(t.destination)) src.line("emit ClauseCompleted(" + sol_string(c.id) + ");");
      src.line("return;");
      src.line("}");
    }
    src.line("revert(\"NoSuchTransition\");");
    src.line("}");
  }

  std::string completed;
  for (const auto& f : c.finals) completed += (completed.empty() ? "" : " || ") + ("state == State." + f);
  src.line();
  src.line("function isCompleted() external view returns (bool) {");
  src.line("return " + (completed.empty() ? std::string("false") : completed) + ";");
  src.line("}");
  src.line("}");

  std::vector<std::string> deps;
  for (const auto& [type, member] : refs) deps.push_back(type);
  return {UnitKind::Clause, name, name + ".sol", src.str(), deps};
}

GeneratedUnit emit_orchestrator(const std::vector<std::string>& order) {
  Source src;
  header(src, "orchestrator");
  for (const auto& id : order) src.line("import \"./" + clause_unit_id(id) + ".sol\";");
  src.line();
  src.line("contract Orchestrator {");
  for (const auto& id : order) src.line(clause_unit_id(id) + " public immutable " + clause_member(id) + ";");
  std::string params;
  for (std::size_t i = 0; i < order.size(); ++i)
    params += (i ? ", " : "") + clause_unit_id(order[i]) + " " + clause_member(order[i]) + "_";
  src.line();
  src.line("constructor(" + params + ") {");
  for (const auto& id : order) src.line(clause_member(id) + " = " + clause_member(id) + "_;");
  src.line("}");
  std::string all;
  for (const auto& id : order) all += (all.empty() ? "" : " && ") + clause_member(id) + ".isCompleted()";
  src.line();
  src.line("function isCompleted() external view returns (bool) {");
  src.line("return " + all + ";");
  src.line("}");
  src.line("}");

  std::vector<std::string> deps;
  for (const auto& id : order) deps.push_back(clause_unit_id(id));
  return {UnitKind::Orchestrator, "Orchestrator", "Orchestrator.sol", src.str(), deps};
}

bool contains_forbidden(const std::string& source, std::string_view token) {
  return source.find(token) != std::string::npos;
}

}  // namespace

std::span<const std::string_view> forbidden_tokens() { return kForbidden; }

bool is_reserved_word(std::string_view word) {
  if (reserved_words().contains(word)) return true;
  static const std::regex sized_type("(u?int|bytes|u?fixed)[0-9x]+");
  return std::regex_match(word.begin(), word.end(), sized_type);
}

GeneratedBundle generate(const ContractSpec& spec, const PackageSet& packages) {
  auto diags = validate(spec, packages);
  if (has_errors(diags))
    throw GenerationError("spec has " + std::to_string(count_severity(diags, Severity::Error)) +
                              " validation error(s); nothing generated",
                          std::move(diags));

  const auto order = topo_order(build_graph(spec));

  std::set<std::string> used_packages;
  std::map<std::string, std::set<std::string>> clause_packages;
  std::map<std::string, std::set<std::string>> clause_clauses;
  for (const auto& c : spec.clauses) {
    for (const auto& t : c.transitions) {
      for (const auto& cond : t.conditions) {
        if (const auto* call = std::get_if<PackageCall>(&*cond.ref)) {
          used_packages.insert(call->package);
          clause_packages[c.id].insert(call->package);
        } else {
          clause_clauses[c.id].insert(std::get<AutomatonCompleted>(*cond.ref).automaton);
        }
      }
    }
  }

  GeneratedBundle bundle;
  for (const auto& pkg : used_packages) bundle.units.push_back(emit_package(packages.at(pkg)));
  for (const auto& id : order) {
    const auto& c = *spec.find(id);
    std::vector<std::string> pkg_deps(clause_packages[id].begin(), clause_packages[id].end());
    std::vector<std::string> clause_deps;
    for (const auto& other : order)
      if (clause_clauses[id].contains(other)) clause_deps.push_back(other);
    bundle.units.push_back(emit_clause(c, pkg_deps, clause_deps));
  }
  bundle.units.push_back(emit_orchestrator(order));

  for (auto& unit : bundle.units) {
    unit.source = format_source(unit.source);
    for (auto token : forbidden_tokens())
      if (contains_forbidden(unit.source, token))
        throw GenerationError("internal: generated unit " + unit.id + " contains forbidden token '" +
                              std::string(token) + "'");
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// Formatting

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

// Brace balance of one line, ignoring string literals and comments.
// `in_block_comment` carries /* ... */ state across lines.
int brace_delta(std::string_view line, bool& in_block_comment) {
  int delta = 0;
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_block_comment) {
      if (c == '*' && i + 1 < line.size() && line[i + 1] == '/') {
        in_block_comment = false;
        ++i;
      }
      continue;
    }
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || c == '\'') quote = c;
    else if (c == '/' && i + 1 < line.size() && line[i + 1] == '/') break;
    else if (c == '/' && i + 1 < line.size() && line[i + 1] == '*') {
      in_block_comment = true;
      ++i;
    } else if (c == '{') ++delta;
    else if (c == '}') --delta;
  }
  return delta;
}

}  // namespace

std::string format_source(std::string_view source) {
  std::vector<std::string> out;
  int depth = 0;
  bool in_block_comment = false;
  bool pending_blank = false;
  bool force_blank = false;

  std::size_t pos = 0;
  while (pos <= source.size()) {
    auto nl = source.find('\n', pos);
    if (nl == std::string_view::npos) nl = source.size();
    const auto line = trim(source.substr(pos, nl - pos));
    pos = nl + 1;

    if (line.empty()) {
      pending_blank = pending_blank || !out.empty();
      continue;
    }
    const bool was_comment = in_block_comment;
    const bool closes = !was_comment && line.front() == '}';
    if ((pending_blank || force_blank) && !out.empty() && !closes && !out.back().ends_with('{')) out.emplace_back();
    pending_blank = force_blank = false;

    const int indent = std::max(0, depth - (closes ? 1 : 0));
    out.push_back(std::string(static_cast<std::size_t>(indent) * 4, ' ') + std::string(line));

    const int before = depth;
    depth = std::max(0, depth + brace_delta(line, in_block_comment));
    if (closes && depth < before && depth <= 1) force_blank = true;
  }

  std::string result;
  for (const auto& l : out) result += l + "\n";
  if (result.empty()) result = "\n";
  return result;
}

// ---------------------------------------------------------------------------
// Writing

void write_bundle(const GeneratedBundle& bundle, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path target = out_dir.empty() ? fs::path(".") : out_dir;
  const fs::path parent = target.has_parent_path() ? target.parent_path() : fs::path(".");
  const fs::path staging = parent / ("." + target.filename().string() + ".staging-" + std::to_string(::getpid()));

  auto fail = [&](const std::string& what) {
    fs::remove_all(staging, ec);
    throw IoError(what);
  };

  fs::remove_all(staging, ec);
  if (!fs::create_directories(staging, ec) || ec) fail("cannot create staging directory '" + staging.string() + "'");

  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& u : bundle.units) files.emplace_back(u.file_name, u.source);
  files.emplace_back("manifest.json", bundle.manifest_json());

  for (const auto& [name, content] : files) {
    std::ofstream f(staging / name, std::ios::binary | std::ios::trunc);
    f << content;
    f.close();
    if (!f) fail("cannot write '" + (staging / name).string() + "'");
  }

  const bool existed = fs::exists(target, ec);
  if (!existed) {
    fs::create_directories(target, ec);
    if (ec) fail("cannot create output directory '" + target.string() + "'");
  } else if (!fs::is_directory(target, ec)) {
    fail("'" + target.string() + "' is not a directory");
  }
  for (const auto& [name, content] : files) {
    fs::rename(staging / name, target / name, ec);
    if (ec) fail("cannot move '" + name + "' into '" + target.string() + "': " + ec.message());
  }
  fs::remove_all(staging, ec);
}

}  // namespace mlfsm
