#include "mlfsm/validator.hpp"

#include <algorithm>
#include <deque>
#include <map>

#include <nlohmann/json.hpp>

#include "mlfsm/depgraph.hpp"

namespace mlfsm {

std::string_view to_string(Severity severity) { return severity == Severity::Error ? "error" : "warning"; }

Severity severity_of(std::string_view code) { return code == "V8" ? Severity::Warning : Severity::Error; }

std::set<std::string> reachable_states(const ClauseAutomaton& clause) {
  std::set<std::string> seen{clause.initial};
  std::deque<std::string> queue{clause.initial};
  while (!queue.empty()) {
    const std::string cur = queue.front();
    queue.pop_front();
    for (const auto& t : clause.transitions)
      if (t.source == cur && seen.insert(t.destination).second) queue.push_back(t.destination);
  }
  return seen;
}

namespace {

class ClauseChecker {
 public:
  ClauseChecker(const ContractSpec& spec, const PackageSet& packages, std::size_t index)
      : spec_(spec), packages_(packages), clause_(spec.clauses[index]),
        base_("/" + escape_pointer_token(clause_.name)) {}

  std::vector<Diagnostic> run() {
    const bool states_ok = check_states();
    const bool endpoints_ok = check_endpoints();
    check_triggers();
    check_conditions();
    check_determinism();
    if (states_ok && endpoints_ok) check_reachability();
    return std::move(out_);
  }

 private:
  void report(std::string code, std::string message, const std::string& pointer) {
    Severity sev = severity_of(code);
    out_.push_back({std::move(code), sev, std::move(message), clause_.id, SourceLocation{spec_.origin, base_ + pointer}});
  }

  std::string where() const { return "clause '" + clause_.name + "' (" + clause_.id + ")"; }

  bool check_states() {
    bool ok = true;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < clause_.states.size(); ++i) {
      const auto& s = clause_.states[i];
      if (s.empty()) {
        report("V1", where() + ": empty state name", "/states/" + std::to_string(i));
        ok = false;
      } else if (!seen.insert(s).second) {
        report("V1", where() + ": duplicate state '" + s + "'", "/states/" + std::to_string(i));
        ok = false;
      }
    }
    return ok;
  }

  bool check_endpoints() {
    bool ok = true;
    auto need = [&](const std::string& state, const std::string& role, const std::string& pointer) {
      if (clause_.has_state(state)) return;
      report("V2", where() + ": " + role + " '" + state + "' is not a declared state", pointer);
      ok = false;
    };
    need(clause_.initial, "initial state", "/initial");
    for (std::size_t i = 0; i < clause_.finals.size(); ++i) need(clause_.finals[i], "final state", "/finals");
    for (std::size_t i = 0; i < clause_.transitions.size(); ++i) {
      const auto& t = clause_.transitions[i];
      const std::string p = "/transitions/" + std::to_string(i);
      need(t.source, "transition source", p + "/source");
      need(t.destination, "transition destination", p + "/destination");
    }
    return ok;
  }

  void check_triggers() {
    for (std::size_t i = 0; i < clause_.transitions.size(); ++i) {
      const auto& t = clause_.transitions[i];
      if (!is_identifier(t.trigger))
        report("V3", where() + ": trigger '" + t.trigger + "' is not a valid identifier",
               "/transitions/" + std::to_string(i) + "/trigger");
    }
  }

  void check_conditions() {
    for (std::size_t i = 0; i < clause_.transitions.size(); ++i) {
      const auto& t = clause_.transitions[i];
      for (std::size_t k = 0; k < t.conditions.size(); ++k) {
        const auto& cond = t.conditions[k];
        const std::string p = "/transitions/" + std::to_string(i) + "/conditions/" + std::to_string(k);
        if (!cond.ref) {
          std::string reason;
          try {
            parse_condition_token(cond.token);
          } catch (const MalformedToken& e) {
            reason = e.what();
          }
          report("V4", where() + ": " + reason, p);
          continue;
        }
        if (const auto* dep = std::get_if<AutomatonCompleted>(&*cond.ref)) {
          if (dep->automaton == clause_.id)
            report("V5", where() + ": guard '" + cond.token + "' depends on the clause's own completion", p);
          else if (!spec_.find(dep->automaton))
            report("V5", where() + ": guard '" + cond.token + "' references unknown automaton '" + dep->automaton + "'",
                   p);
          continue;
        }
        const auto& call = std::get<PackageCall>(*cond.ref);
        auto pkg = packages_.find(call.package);
        if (pkg == packages_.end()) {
          report("V6", where() + ": guard '" + cond.token + "' references unknown package '" + call.package + "'", p);
          continue;
        }
        const auto* fn = pkg->second.find_function(call.function);
        if (!fn) {
          report("V6",
                 where() + ": guard '" + cond.token + "': package '" + call.package + "' has no function '" +
                     call.function + "'",
                 p);
        } else if (fn->returns != ValueType::Bool) {
          report("V6", where() + ": guard '" + cond.token + "': function '" + call.function + "' does not return bool",
                 p);
        } else if (!fn->params.empty()) {
          report("V6", where() + ": guard '" + cond.token + "': function '" + call.function + "' takes parameters",
                 p);
        }
      }
    }
  }

  void check_determinism() {
    std::map<std::pair<std::string, std::string>, std::size_t> first;
    for (std::size_t i = 0; i < clause_.transitions.size(); ++i) {
      const auto& t = clause_.transitions[i];
      auto [it, inserted] = first.emplace(std::pair(t.source, t.trigger), i);
      if (!inserted)
        report("V7",
               where() + ": transitions " + std::to_string(it->second) + " and " + std::to_string(i) +
                   " share source '" + t.source + "' and trigger '" + t.trigger + "'",
               "/transitions/" + std::to_string(i));
    }
  }

  void check_reachability() {
    const auto reachable = reachable_states(clause_);
    for (std::size_t i = 0; i < clause_.states.size(); ++i) {
      const auto& s = clause_.states[i];
      if (!reachable.contains(s))
        report("V8", where() + ": state '" + s + "' is unreachable from initial state '" + clause_.initial + "'",
               "/states/" + std::to_string(i));
    }
    const bool completes =
        std::any_of(clause_.finals.begin(), clause_.finals.end(), [&](const auto& f) { return reachable.contains(f); });
    if (!completes)
      report("V8", where() + ": W_NO_COMPLETION: no final state is reachable from initial state '" + clause_.initial + "'",
             "");
    if (clause_.explicit_finals) {
      for (const auto& f : clause_.finals) {
        const bool leaves = std::any_of(clause_.transitions.begin(), clause_.transitions.end(),
                                        [&](const Transition& t) { return t.source == f; });
        if (leaves)
          report("V8", where() + ": final state '" + f + "' has outgoing transitions; completion can be revoked",
                 "/finals");
      }
    }
  }

  const ContractSpec& spec_;
  const PackageSet& packages_;
  const ClauseAutomaton& clause_;
  std::string base_;
  std::vector<Diagnostic> out_;
};

}  // namespace

std::vector<Diagnostic> validate(const ContractSpec& spec, const PackageSet& packages, Exec exec) {
  const std::size_t n = spec.clauses.size();
  std::vector<std::vector<Diagnostic>> per_clause(n);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < n; ++i) per_clause[i] = ClauseChecker(spec, packages, i).run();
  } else {
    for (std::size_t i = 0; i < n; ++i) per_clause[i] = ClauseChecker(spec, packages, i).run();
  }

  std::vector<Diagnostic> out;
  for (auto& diags : per_clause) {
    std::stable_sort(diags.begin(), diags.end(), [](const Diagnostic& a, const Diagnostic& b) { return a.code < b.code; });
    out.insert(out.end(), std::make_move_iterator(diags.begin()), std::make_move_iterator(diags.end()));
  }

  try {
    topo_order(build_graph(spec));
  } catch (const CycleError& e) {
    out.push_back({"V9", severity_of("V9"), std::string("clauses form a dependency cycle: ") + format_witness(e.witness()),
                   std::nullopt, SourceLocation{spec.origin, ""}});
  }
  return out;
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
  return count_severity(diagnostics, Severity::Error) > 0;
}

std::size_t count_severity(const std::vector<Diagnostic>& diagnostics, Severity severity) {
  return static_cast<std::size_t>(std::count_if(diagnostics.begin(), diagnostics.end(),
                                                [&](const Diagnostic& d) { return d.severity == severity; }));
}

std::string diagnostics_to_json(const std::vector<Diagnostic>& diagnostics) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& d : diagnostics) {
    nlohmann::ordered_json j;
    j["code"] = d.code;
    j["severity"] = to_string(d.severity);
    j["message"] = d.message;
    j["clause"] = d.clause ? nlohmann::ordered_json(*d.clause) : nlohmann::ordered_json(nullptr);
    if (d.location)
      j["location"] = {{"file", d.location->file}, {"pointer", d.location->json_pointer}};
    else
      j["location"] = nullptr;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::string format_diagnostic(const Diagnostic& d, bool color) {
  std::string sev(to_string(d.severity));
  if (color) sev = (d.severity == Severity::Error ? "\x1b[1;31m" : "\x1b[1;33m") + sev + "\x1b[0m";
  std::string out;
  if (d.location) out += d.location->to_string() + ": ";
  out += sev + "[" + d.code + "]: " + d.message;
  return out;
}

}  // namespace mlfsm
