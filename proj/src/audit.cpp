#include "mlfsm/audit.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mlfsm/depgraph.hpp"
#include "mlfsm/loader.hpp"
#include "mlfsm/validator.hpp"

namespace mlfsm {

std::string_view to_string(AuditSeverity s) {
  switch (s) {
    case AuditSeverity::Info: return "info";
    case AuditSeverity::Warn: return "warn";
    case AuditSeverity::Fail: return "fail";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Spec level

std::vector<AuditFinding> audit_spec(const ContractSpec& spec, const PackageSet& packages) {
  std::vector<AuditFinding> out;
  const auto graph = build_graph(spec);

  for (const auto& c : spec.clauses) {
    if (c.has_state(c.initial)) {
      const auto reach = reachable_states(c);
      const bool any_final = std::any_of(c.finals.begin(), c.finals.end(),
                                         [&](const std::string& f) { return reach.contains(f); });
      if (!any_final)
        out.push_back({"S1", AuditSeverity::Warn, c.id,
                       "no final state is reachable from initial state '" + c.initial + "'", std::nullopt});
    }

    std::set<std::string> seen;
    for (const auto& t : c.transitions) {
      for (const auto& cond : t.conditions) {
        if (!cond.ref || !seen.insert(cond.token).second) continue;
        const auto* call = std::get_if<PackageCall>(&*cond.ref);
        if (!call) continue;
        auto pkg = packages.find(call->package);
        if (pkg == packages.end()) continue;
        const auto* fn = pkg->second.find_function(call->function);
        if (fn && fn->body && referenced_variables(*fn->body).empty())
          out.push_back({"S2", AuditSeverity::Warn, c.id,
                         "guard '" + cond.token + "' reads no variable, so it is constant", std::nullopt});
      }
    }

    if (spec.clauses.size() > 1 && graph.dependencies_of(c.id).empty() && graph.dependents_of(c.id).empty())
      out.push_back({"S3", AuditSeverity::Info, c.id, "clause neither depends on nor is depended on by another clause",
                     std::nullopt});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Source level

std::string strip_comments_and_strings(std::string_view src) {
  std::string out(src);
  enum { Code, Line, Block, Str } mode = Code;
  char quote = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const char c = src[i];
    const char next = i + 1 < src.size() ? src[i + 1] : '\0';
    switch (mode) {
      case Code:
        if (c == '/' && next == '/') {
          mode = Line;
          out[i] = out[i + 1] = ' ';
          ++i;
        } else if (c == '/' && next == '*') {
          mode = Block;
          out[i] = out[i + 1] = ' ';
          ++i;
        } else if (c == '"' || c == '\'') {
          mode = Str;
          quote = c;
        }
        break;
      case Line:
        if (c == '\n') mode = Code;
        else out[i] = ' ';
        break;
      case Block:
        if (c == '*' && next == '/') {
          mode = Code;
          out[i] = out[i + 1] = ' ';
          ++i;
        } else if (c != '\n') {
          out[i] = ' ';
        }
        break;
      case Str:
        if (c == '\\' && next != '\0') {
          out[i] = ' ';
          if (next != '\n') out[i + 1] = ' ';
          ++i;
        } else if (c == quote || c == '\n') {
          mode = Code;
        } else {
          out[i] = ' ';
        }
        break;
    }
  }
  return out;
}

namespace {

std::size_t line_at(const std::string& text, std::size_t pos) {
  return static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n')) + 1;
}

struct PatternRule {
  const char* id;
  std::regex pattern;
  const char* detail;
};

const std::vector<PatternRule>& pattern_rules() {
  static const std::vector<PatternRule> rules = {
      {"A1", std::regex(R"(\btx\s*\.\s*origin\b)"), "authorization through tx.origin"},
      {"A2", std::regex(R"(\bdelegatecall\b)"), "delegatecall executes foreign code in this contract's storage"},
      {"A3", std::regex(R"(\b(selfdestruct|suicide)\b)"), "contract can be destroyed"},
      {"A4", std::regex(R"(\bassembly\b)"), "inline assembly bypasses compiler checks"},
      {"A5", std::regex(R"(\.\s*(call|send|transfer)\s*[({])"), "low-level call or ether transfer"},
  };
  return rules;
}

// 0.8-series constraints: ^0.8.x, ~0.8.x, =0.8.x, 0.8.x, >=0.8.x <0.9.0
bool pinned_to_08(std::string constraint) {
  static const std::regex single(R"(^(\^|~|=)?\s*0\.8(\.\d+)?$)");
  static const std::regex range(R"(^>=\s*0\.8(\.\d+)?\s+<\s*0\.9(\.0)?$)");
  constraint = std::regex_replace(constraint, std::regex(R"(^\s+|\s+$)"), "");
  return std::regex_match(constraint, single) || std::regex_match(constraint, range);
}

struct FunctionBody {
  std::size_t begin;  // just after '{'
  std::size_t end;    // position of matching '}'
};

std::size_t match_brace(const std::string& code, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < code.size(); ++i) {
    if (code[i] == '{') ++depth;
    else if (code[i] == '}' && --depth == 0) return i;
  }
  return code.size();
}

// Position of a declaration's `=` initializer, skipping `=>`, `==`, `<=`, `>=`, `!=`.
std::size_t initializer_start(const std::string& decl) {
  for (std::size_t i = 0; i < decl.size(); ++i) {
    if (decl[i] != '=') continue;
    const char prev = i ? decl[i - 1] : '\0';
    const char next = i + 1 < decl.size() ? decl[i + 1] : '\0';
    if (next == '>' || next == '=' || prev == '=' || prev == '<' || prev == '>' || prev == '!') continue;
    return i;
  }
  return decl.size();
}

struct ContractShape {
  std::set<std::string> state_vars;
  std::vector<FunctionBody> functions;
};

// Splits a contract body (depth 1 only) into state variable declarations and
// function/constructor/modifier bodies.
void scan_contract(const std::string& code, std::size_t begin, std::size_t end, ContractShape& shape) {
  static const std::regex callable(R"(^\s*(function|constructor|modifier|fallback|receive)\b)");
  static const std::regex non_var(R"(^\s*(event|error|using|struct|enum|function|constructor|modifier)\b)");
  static const std::regex ident(R"([A-Za-z_$][A-Za-z0-9_$]*)");

  std::size_t stmt = begin;
  for (std::size_t i = begin; i < end; ++i) {
    const char c = code[i];
    if (c == '{') {
      const std::string head = code.substr(stmt, i - stmt);
      const std::size_t close = match_brace(code, i);
      if (std::regex_search(head, callable)) shape.functions.push_back({i + 1, close});
      i = close;
      stmt = i + 1;
    } else if (c == ';') {
      std::string decl = code.substr(stmt, i - stmt);
      stmt = i + 1;
      if (std::regex_search(decl, non_var)) continue;
      decl.resize(initializer_start(decl));
      std::string last;
      for (std::sregex_iterator it(decl.begin(), decl.end(), ident), e; it != e; ++it) last = it->str();
      if (!last.empty()) shape.state_vars.insert(last);
    }
  }
}

std::vector<ContractShape> contracts_of(const std::string& code) {
  static const std::regex header(R"(\b(contract|library)\s+[A-Za-z_$][A-Za-z0-9_$]*[^{;]*\{)");
  std::vector<ContractShape> out;
  for (std::sregex_iterator it(code.begin(), code.end(), header), e; it != e; ++it) {
    const std::size_t open = static_cast<std::size_t>(it->position() + it->length() - 1);
    ContractShape shape;
    scan_contract(code, open + 1, match_brace(code, open), shape);
    out.push_back(std::move(shape));
  }
  return out;
}

// Functions known not to modify state: view/pure functions and public state
// variable getters of any unit in the set.
std::set<std::string> read_only_members(const std::vector<std::string>& codes) {
  static const std::regex view_fn(R"(\bfunction\s+([A-Za-z_$][A-Za-z0-9_$]*)\s*\([^)]*\)[^{;]*\b(view|pure)\b)");
  static const std::regex public_var(R"(\bpublic\b[^;(){}]*?\b([A-Za-z_$][A-Za-z0-9_$]*)\s*(=[^;]*)?;)");
  std::set<std::string> names;
  for (const auto& code : codes) {
    for (std::sregex_iterator it(code.begin(), code.end(), view_fn), e; it != e; ++it) names.insert((*it)[1]);
    for (std::sregex_iterator it(code.begin(), code.end(), public_var), e; it != e; ++it) names.insert((*it)[1]);
  }
  return names;
}

void check_ordering(const std::string& code, const ContractShape& shape, const std::set<std::string>& read_only,
                    const std::string& unit, std::vector<AuditFinding>& out) {
  static const std::regex member_call(R"(([A-Za-z_$][A-Za-z0-9_$]*)\s*\.\s*([A-Za-z_$][A-Za-z0-9_$]*)\s*[({])");
  static const std::set<std::string> builtin_receivers = {"abi", "msg", "block", "tx", "type", "string", "bytes"};

  for (const auto& fn : shape.functions) {
    const std::string body = code.substr(fn.begin, fn.end - fn.begin);
    std::optional<std::size_t> first_call;
    std::string callee;
    for (std::sregex_iterator it(body.begin(), body.end(), member_call), e; it != e; ++it) {
      if (builtin_receivers.contains((*it)[1]) || read_only.contains((*it)[2])) continue;
      first_call = static_cast<std::size_t>(it->position());
      callee = (*it)[1].str() + "." + (*it)[2].str();
      break;
    }
    if (!first_call) continue;

    for (const auto& var : shape.state_vars) {
      const std::regex write("(^|[^A-Za-z0-9_$.])(" + var +
                             R"(\s*(\[[^\]]*\]\s*)*(=(?!=)|\+=|-=|\*=|/=|%=|\|=|&=|\+\+|--)|(\+\+|--|\bdelete\s+))" + var +
                             R"(\b))");
      for (std::sregex_iterator it(body.begin() + static_cast<std::ptrdiff_t>(*first_call), body.end(), write), e;
           it != e; ++it) {
        const std::size_t pos = fn.begin + *first_call + static_cast<std::size_t>(it->position(2));
        out.push_back({"A7", AuditSeverity::Fail, unit,
                       "state variable '" + var + "' written after external call " + callee + "(...)",
                       line_at(code, pos)});
        break;
      }
    }
  }
}

std::vector<AuditFinding> audit_one(const SourceUnit& unit, const std::string& code,
                                    const std::set<std::string>& read_only) {
  std::vector<AuditFinding> out;
  for (const auto& rule : pattern_rules()) {
    for (std::sregex_iterator it(code.begin(), code.end(), rule.pattern), e; it != e; ++it)
      out.push_back({rule.id, AuditSeverity::Fail, unit.id, std::string(rule.detail) + ": '" + it->str() + "'",
                     line_at(code, static_cast<std::size_t>(it->position()))});
  }

  static const std::regex pragma(R"(\bpragma\s+solidity\s+([^;]*);)");
  bool any_pragma = false;
  for (std::sregex_iterator it(code.begin(), code.end(), pragma), e; it != e; ++it) {
    any_pragma = true;
    if (!pinned_to_08((*it)[1]))
      out.push_back({"A6", AuditSeverity::Fail, unit.id,
                     "pragma 'solidity " + (*it)[1].str() + "' is not pinned to the 0.8 series",
                     line_at(code, static_cast<std::size_t>(it->position()))});
  }
  if (!any_pragma) out.push_back({"A6", AuditSeverity::Fail, unit.id, "missing solidity version pragma", std::nullopt});

  for (const auto& shape : contracts_of(code)) check_ordering(code, shape, read_only, unit.id, out);

  std::stable_sort(out.begin(), out.end(), [](const AuditFinding& a, const AuditFinding& b) {
    return std::make_pair(a.line.value_or(0), a.rule) < std::make_pair(b.line.value_or(0), b.rule);
  });
  return out;
}

}  // namespace

std::vector<AuditFinding> audit_sources(const std::vector<SourceUnit>& units, Exec exec) {
  std::vector<std::string> codes;
  codes.reserve(units.size());
  for (const auto& u : units) codes.push_back(strip_comments_and_strings(u.source));
  const auto read_only = read_only_members(codes);

  std::vector<std::vector<AuditFinding>> per_unit(units.size());
  const auto n = static_cast<std::ptrdiff_t>(units.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) per_unit[i] = audit_one(units[i], codes[i], read_only);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) per_unit[i] = audit_one(units[i], codes[i], read_only);
  }

  std::vector<AuditFinding> out;
  for (auto& f : per_unit) out.insert(out.end(), f.begin(), f.end());
  return out;
}

std::vector<AuditFinding> audit_generated(const GeneratedBundle& bundle, Exec exec) {
  std::vector<SourceUnit> units;
  for (const auto& u : bundle.units) units.push_back({u.id, u.source});
  return audit_sources(units, exec);
}

std::vector<SourceUnit> load_source_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir, ec))
    if (entry.is_regular_file() && entry.path().extension() == ".sol") files.push_back(entry.path());
  if (ec) throw IoError("cannot list '" + dir.string() + "': " + ec.message());
  std::sort(files.begin(), files.end());
  std::vector<SourceUnit> units;
  for (const auto& f : files) units.push_back({f.stem().string(), read_text_file(f)});
  return units;
}

bool has_failures(const std::vector<AuditFinding>& findings) {
  return std::any_of(findings.begin(), findings.end(),
                     [](const AuditFinding& f) { return f.severity == AuditSeverity::Fail; });
}

std::string findings_to_json(const std::vector<AuditFinding>& findings) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& f : findings) {
    nlohmann::ordered_json j;
    j["rule"] = f.rule;
    j["severity"] = to_string(f.severity);
    j["subject"] = f.subject;
    j["detail"] = f.detail;
    j["line"] = f.line ? nlohmann::ordered_json(*f.line) : nlohmann::ordered_json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::string format_finding(const AuditFinding& f) {
  std::string out = f.subject;
  if (f.line) out += ":" + std::to_string(*f.line);
  out += ": " + std::string(to_string(f.severity)) + "[" + f.rule + "]: " + f.detail;
  return out;
}

}  // namespace mlfsm
