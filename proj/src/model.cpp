#include "mlfsm/model.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace mlfsm {

std::string SourceLocation::to_string() const {
  if (json_pointer.empty()) return file;
  return file + ":" + json_pointer;
}

std::string escape_pointer_token(const std::string& token) {
  std::string out;
  for (char c : token) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

namespace {

constexpr std::string_view kPackagePrefix = "package__";
constexpr std::string_view kAutomataPrefix = "automata__";
constexpr std::string_view kCompletedSuffix = "_iscompleted";

}  // namespace

MalformedToken::MalformedToken(const std::string& token, const std::string& reason)
    : Error("malformed condition token '" + token + "': " + reason), token_(token) {}

ConditionRef parse_condition_token(std::string_view token) {
  const std::string tok(token);
  if (token.starts_with(kPackagePrefix)) {
    auto rest = token.substr(kPackagePrefix.size());
    auto sep = rest.find('_');
    if (sep == std::string_view::npos) throw MalformedToken(tok, "missing '_' between package and function");
    auto pkg = rest.substr(0, sep);
    auto fn = rest.substr(sep + 1);
    if (pkg.empty()) throw MalformedToken(tok, "empty package id");
    if (fn.empty()) throw MalformedToken(tok, "empty function name");
    return PackageCall{std::string(pkg), std::string(fn)};
  }
  if (token.starts_with(kAutomataPrefix)) {
    auto rest = token.substr(kAutomataPrefix.size());
    if (!rest.ends_with(kCompletedSuffix)) throw MalformedToken(tok, "automata condition must end in '_iscompleted'");
    auto aid = rest.substr(0, rest.size() - kCompletedSuffix.size());
    if (aid.empty()) throw MalformedToken(tok, "empty automaton id");
    if (aid.find('_') != std::string_view::npos) throw MalformedToken(tok, "automaton id contains '_'");
    return AutomatonCompleted{std::string(aid)};
  }
  throw MalformedToken(tok, "unknown prefix (expected 'package__' or 'automata__')");
}

std::string render_condition_token(const ConditionRef& ref) {
  if (const auto* call = std::get_if<PackageCall>(&ref))
    return std::string(kPackagePrefix) + call->package + "_" + call->function;
  return std::string(kAutomataPrefix) + std::get<AutomatonCompleted>(ref).automaton + std::string(kCompletedSuffix);
}

bool is_identifier(std::string_view text) {
  if (text.empty() || !std::isalpha(static_cast<unsigned char>(text.front()))) return false;
  return std::all_of(text.begin(), text.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

Condition Condition::from_token(std::string token) {
  Condition c{std::move(token), std::nullopt};
  try {
    c.ref = parse_condition_token(c.token);
  } catch (const MalformedToken&) {
  }
  return c;
}

std::optional<std::size_t> ClauseAutomaton::state_index(std::string_view state) const {
  auto it = std::find(states.begin(), states.end(), state);
  if (it == states.end()) return std::nullopt;
  return static_cast<std::size_t>(it - states.begin());
}

bool ClauseAutomaton::is_final(std::string_view state) const {
  return std::find(finals.begin(), finals.end(), state) != finals.end();
}

std::vector<std::string> ClauseAutomaton::triggers() const {
  std::vector<std::string> out;
  for (const auto& t : transitions)
    if (std::find(out.begin(), out.end(), t.trigger) == out.end()) out.push_back(t.trigger);
  return out;
}

const ClauseAutomaton* ContractSpec::find(std::string_view id) const {
  for (const auto& c : clauses)
    if (c.id == id) return &c;
  return nullptr;
}

std::optional<std::size_t> ContractSpec::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < clauses.size(); ++i)
    if (clauses[i].id == id) return i;
  return std::nullopt;
}

std::string default_automaton_id(std::size_t index) { return "a" + std::to_string(index); }

std::vector<std::string> sink_states(const ClauseAutomaton& clause) {
  std::set<std::string_view> has_outgoing;
  for (const auto& t : clause.transitions) has_outgoing.insert(t.source);
  std::vector<std::string> out;
  for (const auto& s : clause.states)
    if (!has_outgoing.contains(s)) out.push_back(s);
  return out;
}

}  // namespace mlfsm
