#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mlfsm/errors.hpp"
#include "mlfsm/exec.hpp"
#include "mlfsm/model.hpp"
#include "mlfsm/package.hpp"

namespace mlfsm {

enum class Severity { Error, Warning };

std::string_view to_string(Severity severity);

/// Rule table:
///   V1 error    duplicate or empty state name
///   V2 error    initial, final or transition endpoint is not a declared state
///   V3 error    trigger is not an identifier
///   V4 error    malformed condition token
///   V5 error    completion guard on an unknown automaton or on the clause itself
///   V6 error    package guard on an unknown package/function, a non-boolean
///               function, or a function with parameters
///   V7 error    two transitions share (source, trigger)
///   V8 warning  unreachable state, no reachable final state (W_NO_COMPLETION),
///               or an explicit final state with outgoing transitions
///   V9 error    dependency cycle between clauses
struct Diagnostic {
  std::string code;
  Severity severity = Severity::Error;
  std::string message;
  std::optional<std::string> clause;
  std::optional<SourceLocation> location;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

/// Fixed code -> severity table.
Severity severity_of(std::string_view code);

/// Runs every rule and returns all findings, ordered by clause declaration
/// index (spec-wide findings last), then rule code, then location.
std::vector<Diagnostic> validate(const ContractSpec& spec, const PackageSet& packages, Exec exec = Exec::parallel);

/// Forward closure from the initial state, treating every guard as passable.
std::set<std::string> reachable_states(const ClauseAutomaton& clause);

bool has_errors(const std::vector<Diagnostic>& diagnostics);
std::size_t count_severity(const std::vector<Diagnostic>& diagnostics, Severity severity);

/// JSON array of {code, severity, message, clause, location}.
std::string diagnostics_to_json(const std::vector<Diagnostic>& diagnostics);

/// One line: `<location>: <severity>[<code>]: <message>`.
std::string format_diagnostic(const Diagnostic& diagnostic, bool color = false);

}  // namespace mlfsm
