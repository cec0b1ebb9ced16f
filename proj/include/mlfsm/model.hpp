#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mlfsm/errors.hpp"

namespace mlfsm {

/// Guard satisfied when a package function evaluates to true.
struct PackageCall {
  std::string package;
  std::string function;
  friend bool operator==(const PackageCall&, const PackageCall&) = default;
};

/// Guard satisfied when another clause automaton sits in one of its final states.
struct AutomatonCompleted {
  std::string automaton;
  friend bool operator==(const AutomatonCompleted&, const AutomatonCompleted&) = default;
};

using ConditionRef = std::variant<PackageCall, AutomatonCompleted>;

class MalformedToken : public Error {
 public:
  MalformedToken(const std::string& token, const std::string& reason);
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

/// Grammar:
///   package__<pkg>_<fn>          <pkg> has no underscore, <fn> is everything after it
///   automata__<aid>_iscompleted  <aid> has no underscore
ConditionRef parse_condition_token(std::string_view token);
std::string render_condition_token(const ConditionRef& ref);

/// Letters, digits and underscore, starting with a letter.
bool is_identifier(std::string_view text);

/// Condition as written in the spec file. `ref` is empty when the token is malformed;
/// the validator reports those (V4).
struct Condition {
  std::string token;
  std::optional<ConditionRef> ref;

  static Condition from_token(std::string token);
};

struct Transition {
  std::string source;
  std::string destination;
  std::string trigger;
  std::vector<Condition> conditions;
};

struct ClauseAutomaton {
  std::string id;
  std::string name;
  std::vector<std::string> states;
  std::string initial;
  /// In state-declaration order.
  std::vector<std::string> finals;
  bool explicit_finals = false;
  std::vector<Transition> transitions;

  std::optional<std::size_t> state_index(std::string_view state) const;
  bool has_state(std::string_view state) const { return state_index(state).has_value(); }
  bool is_final(std::string_view state) const;
  /// Distinct triggers in first-appearance order.
  std::vector<std::string> triggers() const;
};

struct ContractSpec {
  std::string name;
  /// Path the spec was loaded from; used for diagnostics.
  std::string origin;
  std::vector<ClauseAutomaton> clauses;

  const ClauseAutomaton* find(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;
};

/// `a<i>` for the i-th declared clause.
std::string default_automaton_id(std::size_t index);

/// States without outgoing transitions, in declaration order.
std::vector<std::string> sink_states(const ClauseAutomaton& clause);

}  // namespace mlfsm
