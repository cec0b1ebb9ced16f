#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlfsm/errors.hpp"
#include "mlfsm/expr.hpp"
#include "mlfsm/model.hpp"
#include "mlfsm/package.hpp"
#include "mlfsm/validator.hpp"

namespace mlfsm {

enum class TraceKind { Fired, Rejected, VarSet, Completed };

std::string_view to_string(TraceKind kind);

struct TraceEvent {
  std::uint64_t seq = 0;
  TraceKind kind = TraceKind::Fired;
  std::string clause;
  std::string trigger;
  // fired
  std::string source;
  std::string destination;
  // rejected
  std::string reason;
  std::string condition;
  std::string detail;
  // var_set
  std::string package;
  std::string variable;
  std::optional<Value> value;
};

using Trace = std::vector<TraceEvent>;

std::string trace_event_to_json(const TraceEvent& event);
/// One JSON object per line.
std::string trace_to_jsonl(const Trace& trace);

enum class RejectReason { NoSuchTransition, GuardFailed };

struct TransitionResult {
  bool fired = false;
  RejectReason reason = RejectReason::NoSuchTransition;
  /// Token of the first failing guard when reason is GuardFailed.
  std::string condition;

  static TransitionResult ok() { return {true, RejectReason::NoSuchTransition, {}}; }
  static TransitionResult no_transition() { return {false, RejectReason::NoSuchTransition, {}}; }
  static TransitionResult guard_failed(std::string token) { return {false, RejectReason::GuardFailed, std::move(token)}; }

  friend bool operator==(const TransitionResult&, const TransitionResult&) = default;
};

class SpecNotValidated : public Error {
 public:
  explicit SpecNotValidated(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

class UnknownClause : public Error {
 public:
  using Error::Error;
};

/// The trigger labels no transition of the clause at all.
class UnknownTrigger : public Error {
 public:
  using Error::Error;
};

class UnknownVariable : public Error {
 public:
  using Error::Error;
};

class TypeMismatch : public Error {
 public:
  using Error::Error;
};

/// Clause states plus package stores; the observable part of an environment.
struct EnvSnapshot {
  std::vector<std::string> states;
  std::map<std::string, Bindings, std::less<>> stores;
  friend bool operator==(const EnvSnapshot&, const EnvSnapshot&) = default;
};

/// Executes a contract spec as interconnected clause automata. Package
/// variables change only through set_var; transitions never write them.
/// Not thread-safe; distinct environments are independent.
class ExecutionEnv {
 public:
  /// Throws SpecNotValidated when validation reports any error.
  ExecutionEnv(const ContractSpec& spec, const PackageSet& packages);

  TransitionResult fire(std::string_view clause, std::string_view trigger);
  void set_var(std::string_view package, std::string_view variable, Value value);

  bool is_completed(std::string_view clause) const;
  /// All clauses completed: the synthesized top-level machine.
  bool contract_completed() const;

  const std::string& current_state(std::string_view clause) const;
  Value value(std::string_view package, std::string_view variable) const;

  const Trace& trace() const { return trace_; }
  const ContractSpec& spec() const { return *spec_; }
  EnvSnapshot snapshot() const;

 private:
  std::size_t clause_index(std::string_view clause) const;
  bool guard_holds(const Condition& cond) const;
  void append(TraceEvent event);

  std::shared_ptr<const ContractSpec> spec_;
  std::shared_ptr<const PackageSet> packages_;
  std::vector<std::size_t> current_;
  std::vector<bool> completion_logged_;
  std::map<std::string, Bindings, std::less<>> stores_;
  Trace trace_;
  std::uint64_t next_seq_ = 1;
};

ExecutionEnv new_env(const ContractSpec& spec, const PackageSet& packages);

/// Evaluates a zero-parameter package function against a store. Evaluation
/// errors count as a failed guard.
bool package_guard_holds(const PackageFunction& fn, const Bindings& store);

// ---------------------------------------------------------------------------
// Scripts

struct ScriptStep {
  enum class Cmd { Set, Fire, AssertState, AssertCompleted, AssertRejected };
  Cmd cmd = Cmd::Fire;
  std::string clause;
  std::string trigger;
  std::string package;
  std::string variable;
  std::string state;
  Value value;
  bool expected = true;

  static ScriptStep set(std::string package, std::string variable, Value value);
  static ScriptStep fire(std::string clause, std::string trigger);
  static ScriptStep assert_state(std::string clause, std::string state);
  static ScriptStep assert_completed(std::string clause, bool expected);
  static ScriptStep assert_rejected(std::string clause, std::string trigger);
};

class ScriptAssertionFailed : public Error {
 public:
  ScriptAssertionFailed(std::size_t step, const std::string& message);
  /// Zero-based index of the failing step.
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// JSON array of {"cmd": set|fire|assert_state|assert_completed|assert_rejected, ...}.
/// Throws SyntaxError or SchemaError on malformed input.
std::vector<ScriptStep> parse_script(std::string_view document, const std::string& origin);

std::string script_to_json(const std::vector<ScriptStep>& script);

/// Runs the steps in order and returns the environment's full trace.
/// `assert_rejected` fires the trigger and requires a rejection.
Trace run_script(ExecutionEnv& env, const std::vector<ScriptStep>& script);

}  // namespace mlfsm
