#include "mlfsm/interpreter.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "mlfsm/loader.hpp"

namespace mlfsm {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::Fired: return "fired";
    case TraceKind::Rejected: return "rejected";
    case TraceKind::VarSet: return "var_set";
    case TraceKind::Completed: return "completed";
  }
  return "?";
}

namespace {

ordered_json value_json(const Value& v) {
  if (v.is_bool()) return v.as_bool();
  return v.as_int();
}

}  // namespace

std::string trace_event_to_json(const TraceEvent& e) {
  ordered_json j;
  j["seq"] = e.seq;
  j["kind"] = to_string(e.kind);
  switch (e.kind) {
    case TraceKind::Fired:
      j["clause"] = e.clause;
      j["trigger"] = e.trigger;
      j["source"] = e.source;
      j["destination"] = e.destination;
      break;
    case TraceKind::Rejected:
      j["clause"] = e.clause;
      j["trigger"] = e.trigger;
      j["reason"] = e.reason;
      if (!e.condition.empty()) j["condition"] = e.condition;
      if (!e.detail.empty()) j["detail"] = e.detail;
      break;
    case TraceKind::VarSet:
      j["package"] = e.package;
      j["var"] = e.variable;
      j["value"] = e.value ? value_json(*e.value) : ordered_json(nullptr);
      break;
    case TraceKind::Completed: j["clause"] = e.clause; break;
  }
  return j.dump();
}

std::string trace_to_jsonl(const Trace& trace) {
  std::string out;
  for (const auto& e : trace) out += trace_event_to_json(e) + "\n";
  return out;
}

SpecNotValidated::SpecNotValidated(std::vector<Diagnostic> diagnostics)
    : Error("spec has " + std::to_string(count_severity(diagnostics, Severity::Error)) + " validation error(s)"),
      diagnostics_(std::move(diagnostics)) {}

bool package_guard_holds(const PackageFunction& fn, const Bindings& store) {
  try {
    return eval_expr(*fn.body, store).as_bool();
  } catch (const EvalError&) {
    return false;
  }
}

ExecutionEnv::ExecutionEnv(const ContractSpec& spec, const PackageSet& packages)
    : spec_(std::make_shared<const ContractSpec>(spec)), packages_(std::make_shared<const PackageSet>(packages)) {
  auto diags = validate(*spec_, *packages_);
  if (has_errors(diags)) throw SpecNotValidated(std::move(diags));
  for (const auto& c : spec_->clauses) {
    current_.push_back(*c.state_index(c.initial));
    completion_logged_.push_back(false);
  }
  for (const auto& [id, pkg] : *packages_) {
    auto& store = stores_[id];
    for (const auto& v : pkg.variables) store[v.name] = v.initial;
  }
}

ExecutionEnv new_env(const ContractSpec& spec, const PackageSet& packages) { return ExecutionEnv(spec, packages); }

std::size_t ExecutionEnv::clause_index(std::string_view clause) const {
  auto idx = spec_->index_of(clause);
  if (!idx) throw UnknownClause("unknown clause '" + std::string(clause) + "'");
  return *idx;
}

void ExecutionEnv::append(TraceEvent event) {
  event.seq = next_seq_++;
  trace_.push_back(std::move(event));
}

bool ExecutionEnv::guard_holds(const Condition& cond) const {
  if (const auto* dep = std::get_if<AutomatonCompleted>(&*cond.ref)) return is_completed(dep->automaton);
  const auto& call = std::get<PackageCall>(*cond.ref);
  const auto& fn = *packages_->at(call.package).find_function(call.function);
  return package_guard_holds(fn, stores_.find(call.package)->second);
}

TransitionResult ExecutionEnv::fire(std::string_view clause, std::string_view trigger) {
  const std::size_t ci = clause_index(clause);
  const auto& c = spec_->clauses[ci];
  const auto& state = c.states[current_[ci]];

  const Transition* match = nullptr;
  bool trigger_known = false;
  for (const auto& t : c.transitions) {
    if (t.trigger != trigger) continue;
    trigger_known = true;
    if (t.source == state) {
      match = &t;
      break;
    }
  }
  if (!trigger_known)
    throw UnknownTrigger("clause '" + c.id + "' has no transition with trigger '" + std::string(trigger) + "'");

  TraceEvent ev;
  ev.clause = c.id;
  ev.trigger = std::string(trigger);
  if (!match) {
    ev.kind = TraceKind::Rejected;
    ev.reason = "NoSuchTransition";
    ev.detail = "no '" + ev.trigger + "' transition from state '" + state + "'";
    append(std::move(ev));
    return TransitionResult::no_transition();
  }
  for (const auto& cond : match->conditions) {
    if (!guard_holds(cond)) {
      ev.kind = TraceKind::Rejected;
      ev.reason = "GuardFailed";
      ev.condition = cond.token;
      append(std::move(ev));
      return TransitionResult::guard_failed(cond.token);
    }
  }
  ev.kind = TraceKind::Fired;
  ev.source = match->source;
  ev.destination = match->destination;
  append(std::move(ev));
  current_[ci] = *c.state_index(match->destination);
  if (c.is_final(match->destination) && !completion_logged_[ci]) {
    completion_logged_[ci] = true;
    TraceEvent done;
    done.kind = TraceKind::Completed;
    done.clause = c.id;
    append(std::move(done));
  }
  return TransitionResult::ok();
}

void ExecutionEnv::set_var(std::string_view package, std::string_view variable, Value value) {
  auto pkg = packages_->find(package);
  if (pkg == packages_->end()) throw UnknownVariable("unknown package '" + std::string(package) + "'");
  const auto* decl = pkg->second.find_variable(variable);
  if (!decl)
    throw UnknownVariable("package '" + std::string(package) + "' has no variable '" + std::string(variable) + "'");
  if (decl->type != value.type())
    throw TypeMismatch("variable '" + std::string(package) + "." + std::string(variable) + "' has type " +
                       std::string(to_string(decl->type)) + ", got " + std::string(to_string(value.type())));
  stores_.find(package)->second[std::string(variable)] = value;
  TraceEvent ev;
  ev.kind = TraceKind::VarSet;
  ev.package = std::string(package);
  ev.variable = std::string(variable);
  ev.value = value;
  append(std::move(ev));
}

bool ExecutionEnv::is_completed(std::string_view clause) const {
  const std::size_t ci = clause_index(clause);
  const auto& c = spec_->clauses[ci];
  return c.is_final(c.states[current_[ci]]);
}

bool ExecutionEnv::contract_completed() const {
  return std::all_of(spec_->clauses.begin(), spec_->clauses.end(),
                     [&](const ClauseAutomaton& c) { return is_completed(c.id); });
}

const std::string& ExecutionEnv::current_state(std::string_view clause) const {
  const std::size_t ci = clause_index(clause);
  return spec_->clauses[ci].states[current_[ci]];
}

Value ExecutionEnv::value(std::string_view package, std::string_view variable) const {
  auto store = stores_.find(package);
  if (store == stores_.end()) throw UnknownVariable("unknown package '" + std::string(package) + "'");
  auto it = store->second.find(variable);
  if (it == store->second.end())
    throw UnknownVariable("package '" + std::string(package) + "' has no variable '" + std::string(variable) + "'");
  return it->second;
}

EnvSnapshot ExecutionEnv::snapshot() const {
  EnvSnapshot snap;
  for (std::size_t i = 0; i < current_.size(); ++i) snap.states.push_back(spec_->clauses[i].states[current_[i]]);
  snap.stores = stores_;
  return snap;
}

// ---------------------------------------------------------------------------
// Scripts

ScriptStep ScriptStep::set(std::string package, std::string variable, Value value) {
  ScriptStep s;
  s.cmd = Cmd::Set;
  s.package = std::move(package);
  s.variable = std::move(variable);
  s.value = value;
  return s;
}

ScriptStep ScriptStep::fire(std::string clause, std::string trigger) {
  ScriptStep s;
  s.cmd = Cmd::Fire;
  s.clause = std::move(clause);
  s.trigger = std::move(trigger);
  return s;
}

ScriptStep ScriptStep::assert_state(std::string clause, std::string state) {
  ScriptStep s;
  s.cmd = Cmd::AssertState;
  s.clause = std::move(clause);
  s.state = std::move(state);
  return s;
}

ScriptStep ScriptStep::assert_completed(std::string clause, bool expected) {
  ScriptStep s;
  s.cmd = Cmd::AssertCompleted;
  s.clause = std::move(clause);
  s.expected = expected;
  return s;
}

ScriptStep ScriptStep::assert_rejected(std::string clause, std::string trigger) {
  ScriptStep s;
  s.cmd = Cmd::AssertRejected;
  s.clause = std::move(clause);
  s.trigger = std::move(trigger);
  return s;
}

ScriptAssertionFailed::ScriptAssertionFailed(std::size_t step, const std::string& message)
    : Error("script step " + std::to_string(step) + ": " + message), step_(step) {}

namespace {

std::string required_string(const ordered_json& obj, const char* key, const SourceLocation& loc) {
  if (!obj.contains(key) || !obj.at(key).is_string())
    throw SchemaError(std::string("missing or non-string '") + key + "'", loc);
  return obj.at(key).get<std::string>();
}

void expect_keys(const ordered_json& obj, std::initializer_list<std::string_view> keys, const SourceLocation& loc) {
  for (const auto& [k, _] : obj.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw SchemaError("unknown key '" + k + "'", {loc.file, loc.json_pointer + "/" + escape_pointer_token(k)});
}

}  // namespace

std::vector<ScriptStep> parse_script(std::string_view document, const std::string& origin) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(document.begin(), document.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw SyntaxError(e.what(), {origin, ""});
  }
  if (!doc.is_array()) throw SchemaError("script must be a JSON array of steps", {origin, ""});
  std::vector<ScriptStep> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& obj = doc[i];
    const SourceLocation loc{origin, "/" + std::to_string(i)};
    if (!obj.is_object()) throw SchemaError("step must be an object", loc);
    const std::string cmd = required_string(obj, "cmd", loc);
    if (cmd == "set") {
      expect_keys(obj, {"cmd", "package", "var", "value"}, loc);
      if (!obj.contains("value")) throw SchemaError("missing 'value'", loc);
      const auto& v = obj.at("value");
      Value value;
      if (v.is_boolean()) value = Value::boolean(v.get<bool>());
      else if (v.is_number_integer() && !(v.is_number_unsigned() && v.get<std::uint64_t>() > INT64_MAX))
        value = Value::integer(v.get<std::int64_t>());
      else throw SchemaError("'value' must be a boolean or a signed 64-bit integer", loc);
      out.push_back(ScriptStep::set(required_string(obj, "package", loc), required_string(obj, "var", loc), value));
    } else if (cmd == "fire") {
      expect_keys(obj, {"cmd", "clause", "trigger"}, loc);
      out.push_back(ScriptStep::fire(required_string(obj, "clause", loc), required_string(obj, "trigger", loc)));
    } else if (cmd == "assert_state") {
      expect_keys(obj, {"cmd", "clause", "state"}, loc);
      out.push_back(ScriptStep::assert_state(required_string(obj, "clause", loc), required_string(obj, "state", loc)));
    } else if (cmd == "assert_completed") {
      expect_keys(obj, {"cmd", "clause", "value"}, loc);
      if (!obj.contains("value") || !obj.at("value").is_boolean()) throw SchemaError("'value' must be a boolean", loc);
      out.push_back(ScriptStep::assert_completed(required_string(obj, "clause", loc), obj.at("value").get<bool>()));
    } else if (cmd == "assert_rejected") {
      expect_keys(obj, {"cmd", "clause", "trigger"}, loc);
      out.push_back(
          ScriptStep::assert_rejected(required_string(obj, "clause", loc), required_string(obj, "trigger", loc)));
    } else {
      throw SchemaError("unknown command '" + cmd + "'", loc);
    }
  }
  return out;
}

std::string script_to_json(const std::vector<ScriptStep>& script) {
  ordered_json arr = ordered_json::array();
  for (const auto& s : script) {
    ordered_json j;
    switch (s.cmd) {
      case ScriptStep::Cmd::Set:
        j = {{"cmd", "set"}, {"package", s.package}, {"var", s.variable}, {"value", value_json(s.value)}};
        break;
      case ScriptStep::Cmd::Fire: j = {{"cmd", "fire"}, {"clause", s.clause}, {"trigger", s.trigger}}; break;
      case ScriptStep::Cmd::AssertState: j = {{"cmd", "assert_state"}, {"clause", s.clause}, {"state", s.state}}; break;
      case ScriptStep::Cmd::AssertCompleted:
        j = {{"cmd", "assert_completed"}, {"clause", s.clause}, {"value", s.expected}};
        break;
      case ScriptStep::Cmd::AssertRejected:
        j = {{"cmd", "assert_rejected"}, {"clause", s.clause}, {"trigger", s.trigger}};
        break;
    }
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

Trace run_script(ExecutionEnv& env, const std::vector<ScriptStep>& script) {
  for (std::size_t i = 0; i < script.size(); ++i) {
    const auto& s = script[i];
    switch (s.cmd) {
      case ScriptStep::Cmd::Set: env.set_var(s.package, s.variable, s.value); break;
      case ScriptStep::Cmd::Fire: env.fire(s.clause, s.trigger); break;
      case ScriptStep::Cmd::AssertState: {
        const auto& actual = env.current_state(s.clause);
        if (actual != s.state)
          throw ScriptAssertionFailed(i, "expected clause '" + s.clause + "' in state '" + s.state + "', found '" +
                                             actual + "'");
        break;
      }
      case ScriptStep::Cmd::AssertCompleted: {
        const bool actual = env.is_completed(s.clause);
        if (actual != s.expected)
          throw ScriptAssertionFailed(i, "expected clause '" + s.clause + "' completed=" +
                                             (s.expected ? "true" : "false") + ", found " +
                                             (actual ? "true" : "false"));
        break;
      }
      case ScriptStep::Cmd::AssertRejected: {
        auto result = env.fire(s.clause, s.trigger);
        if (result.fired)
          throw ScriptAssertionFailed(i, "expected '" + s.trigger + "' on clause '" + s.clause + "' to be rejected");
        break;
      }
    }
  }
  return env.trace();
}

}  // namespace mlfsm
