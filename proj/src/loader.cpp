#include "mlfsm/loader.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

namespace mlfsm {

using ordered_json = nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const PackageFunction* PackageLibrary::find_function(std::string_view fn) const {
  for (const auto& f : functions)
    if (f.name == fn) return &f;
  return nullptr;
}

const Variable* PackageLibrary::find_variable(std::string_view var) const {
  for (const auto& v : variables)
    if (v.name == var) return &v;
  return nullptr;
}

namespace {

// Tracks the JSON pointer of the element being parsed so that duplicate object
// keys, which nlohmann silently merges, can be reported with a location.
class DuplicateKeyGuard {
 public:
  DuplicateKeyGuard(std::string origin, bool clause_document)
      : origin_(std::move(origin)), clause_document_(clause_document) {}

  bool on_event(nlohmann::json::parse_event_t event, const ordered_json& parsed) {
    using Ev = nlohmann::json::parse_event_t;
    switch (event) {
      case Ev::object_start: frames_.push_back({false, 0, {}, {}}); break;
      case Ev::array_start: frames_.push_back({true, 0, {}, {}}); break;
      case Ev::key: {
        auto& top = frames_.back();
        top.key = parsed.get<std::string>();
        if (!top.keys.insert(top.key).second) {
          if (frames_.size() == 1 && clause_document_) throw DuplicateClause(origin_ + ": duplicate clause '" + top.key + "'");
          throw SchemaError("duplicate key '" + top.key + "'", {origin_, pointer()});
        }
        break;
      }
      case Ev::object_end:
      case Ev::array_end:
        frames_.pop_back();
        element_done();
        break;
      case Ev::value: element_done(); break;
    }
    return true;
  }

 private:
  struct Frame {
    bool array;
    std::size_t index;
    std::string key;
    std::set<std::string> keys;
  };

  void element_done() {
    if (!frames_.empty() && frames_.back().array) ++frames_.back().index;
  }

  std::string pointer() const {
    std::string out;
    for (const auto& f : frames_)
      out += "/" + (f.array ? std::to_string(f.index) : escape_pointer_token(f.key));
    return out;
  }

  std::string origin_;
  bool clause_document_;
  std::vector<Frame> frames_;
};

ordered_json parse_document(std::string_view document, const std::string& origin, bool clause_document) {
  DuplicateKeyGuard guard(origin, clause_document);
  try {
    return ordered_json::parse(document.begin(), document.end(),
                               [&](int, nlohmann::json::parse_event_t ev, ordered_json& parsed) {
                                 return guard.on_event(ev, parsed);
                               });
  } catch (const nlohmann::json::parse_error& e) {
    throw SyntaxError(e.what(), {origin, ""});
  }
}

// Shape checks for one JSON value with its pointer.
class Node {
 public:
  Node(const ordered_json& value, std::string origin, std::string pointer)
      : value_(value), origin_(std::move(origin)), pointer_(std::move(pointer)) {}

  const ordered_json& value() const { return value_; }
  const std::string& pointer() const { return pointer_; }
  SourceLocation location() const { return {origin_, pointer_}; }

  [[noreturn]] void fail(const std::string& message) const { throw SchemaError(message, location()); }

  Node child(const std::string& key) const {
    return Node(value_.at(key), origin_, pointer_ + "/" + escape_pointer_token(key));
  }
  Node element(std::size_t i) const { return Node(value_.at(i), origin_, pointer_ + "/" + std::to_string(i)); }

  const Node& expect_object(std::string_view what) const {
    if (!value_.is_object()) fail(std::string(what) + " must be an object");
    return *this;
  }

  const Node& expect_array(std::string_view what) const {
    if (!value_.is_array()) fail(std::string(what) + " must be an array");
    return *this;
  }

  std::string as_string(std::string_view what) const {
    if (!value_.is_string()) fail(std::string(what) + " must be a string");
    return value_.get<std::string>();
  }

  /// Rejects keys outside `allowed` and reports the first missing `required` key.
  void check_keys(std::initializer_list<std::string_view> allowed,
                  std::initializer_list<std::string_view> required) const {
    for (const auto& [key, _] : value_.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        Node(value_.at(key), origin_, pointer_ + "/" + escape_pointer_token(key)).fail("unknown key '" + key + "'");
    }
    for (auto key : required)
      if (!value_.contains(std::string(key))) fail("missing required key '" + std::string(key) + "'");
  }

  bool has(std::string_view key) const { return value_.contains(std::string(key)); }
  std::size_t size() const { return value_.size(); }

 private:
  const ordered_json& value_;
  std::string origin_;
  std::string pointer_;
};

std::vector<std::string> string_array(const Node& node, std::string_view what) {
  node.expect_array(what);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(node.element(i).as_string(std::string(what) + " entry"));
  return out;
}

// Package and automaton ids: identifier without underscore.
bool is_plain_id(std::string_view text) {
  return is_identifier(text) && text.find('_') == std::string_view::npos;
}

Transition load_transition(const Node& node) {
  node.expect_object("transition");
  node.check_keys({"source", "destination", "trigger", "conditions"}, {"source", "destination", "trigger", "conditions"});
  Transition t;
  t.source = node.child("source").as_string("'source'");
  t.destination = node.child("destination").as_string("'destination'");
  t.trigger = node.child("trigger").as_string("'trigger'");
  for (auto& token : string_array(node.child("conditions"), "'conditions'"))
    t.conditions.push_back(Condition::from_token(std::move(token)));
  return t;
}

ClauseAutomaton load_clause(const Node& node, const std::string& name, std::size_t index) {
  node.expect_object("clause");
  node.check_keys({"states", "transitions", "id", "initial", "finals"}, {"states", "transitions"});
  ClauseAutomaton clause;
  clause.name = name;
  if (node.has("id")) {
    auto id_node = node.child("id");
    clause.id = id_node.as_string("'id'");
    if (!is_plain_id(clause.id)) id_node.fail("clause id must be letters and digits, starting with a letter");
  } else {
    clause.id = default_automaton_id(index);
  }

  auto states_node = node.child("states");
  clause.states = string_array(states_node, "'states'");
  if (clause.states.empty()) states_node.fail("a clause needs at least one state");

  auto transitions_node = node.child("transitions");
  transitions_node.expect_array("'transitions'");
  for (std::size_t i = 0; i < transitions_node.size(); ++i)
    clause.transitions.push_back(load_transition(transitions_node.element(i)));

  clause.initial = node.has("initial") ? node.child("initial").as_string("'initial'") : clause.states.front();

  if (node.has("finals")) {
    auto finals_node = node.child("finals");
    auto finals = string_array(finals_node, "'finals'");
    if (finals.empty()) finals_node.fail("'finals' must not be empty when given");
    // Keep declaration order; undeclared names are kept at the end for the validator.
    for (const auto& s : clause.states)
      if (std::find(finals.begin(), finals.end(), s) != finals.end() &&
          std::find(clause.finals.begin(), clause.finals.end(), s) == clause.finals.end())
        clause.finals.push_back(s);
    for (const auto& f : finals)
      if (std::find(clause.finals.begin(), clause.finals.end(), f) == clause.finals.end()) clause.finals.push_back(f);
    clause.explicit_finals = true;
  } else {
    clause.finals = sink_states(clause);
  }
  return clause;
}

std::string stem_of(const std::string& origin) {
  std::filesystem::path p(origin);
  std::string name = p.filename().string();
  auto dot = name.find('.');
  if (dot != std::string::npos && dot > 0) name = name.substr(0, dot);
  return name.empty() ? "contract" : name;
}

ValueType load_type(const Node& node) {
  auto name = node.as_string("'type'");
  auto type = parse_value_type(name);
  if (!type) node.fail("unknown type '" + name + "' (expected \"int\" or \"bool\")");
  return *type;
}

Value load_value(const Node& node, ValueType type) {
  const auto& v = node.value();
  if (type == ValueType::Bool) {
    if (!v.is_boolean()) node.fail("expected a boolean value");
    return Value::boolean(v.get<bool>());
  }
  if (v.is_number_unsigned()) {
    if (v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
      node.fail("integer value outside signed 64-bit range");
    return Value::integer(static_cast<std::int64_t>(v.get<std::uint64_t>()));
  }
  if (!v.is_number_integer()) node.fail("expected an integer value");
  return Value::integer(v.get<std::int64_t>());
}

std::string load_name(const Node& node, std::set<std::string>& taken, std::string_view what) {
  auto name_node = node.child("name");
  auto name = name_node.as_string("'name'");
  if (!is_identifier(name)) name_node.fail(std::string(what) + " name '" + name + "' is not an identifier");
  if (!taken.insert(name).second) name_node.fail("duplicate name '" + name + "'");
  return name;
}

}  // namespace

ContractSpec load_contract_spec(std::string_view document, const std::string& origin) {
  auto doc = parse_document(document, origin, true);
  Node root(doc, origin, "");
  root.expect_object("contract spec");
  if (root.size() == 0) root.fail("contract spec declares no clauses");

  ContractSpec spec;
  spec.name = stem_of(origin);
  spec.origin = origin;
  std::size_t index = 0;
  for (const auto& [name, _] : doc.items()) {
    auto node = root.child(name);
    if (name.empty()) node.fail("clause name must not be empty");
    spec.clauses.push_back(load_clause(node, name, index++));
  }

  std::set<std::string> ids;
  for (const auto& c : spec.clauses)
    if (!ids.insert(c.id).second)
      throw DuplicateClause(origin + ": automaton id '" + c.id + "' is used by more than one clause");
  return spec;
}

PackageLibrary load_package(std::string_view document, const std::string& origin) {
  auto doc = parse_document(document, origin, false);
  Node root(doc, origin, "");
  root.expect_object("package");
  root.check_keys({"id", "name", "version", "variables", "functions", "structures"}, {"id"});

  PackageLibrary pkg;
  pkg.origin = origin;
  auto id_node = root.child("id");
  pkg.id = id_node.as_string("'id'");
  if (!is_plain_id(pkg.id)) id_node.fail("package id '" + pkg.id + "' must be letters and digits (no underscore)");
  if (root.has("name")) pkg.name = root.child("name").as_string("'name'");
  if (root.has("version")) pkg.version = root.child("version").as_string("'version'");

  std::set<std::string> member_names;
  TypeEnv var_types;

  if (root.has("variables")) {
    auto vars = root.child("variables");
    vars.expect_array("'variables'");
    for (std::size_t i = 0; i < vars.size(); ++i) {
      auto node = vars.element(i);
      node.expect_object("variable");
      node.check_keys({"name", "type", "value", "test_domain"}, {"name", "type", "value"});
      Variable var;
      var.name = load_name(node, member_names, "variable");
      var.type = load_type(node.child("type"));
      var.initial = load_value(node.child("value"), var.type);
      if (node.has("test_domain")) {
        auto dom = node.child("test_domain");
        dom.expect_array("'test_domain'");
        if (dom.size() == 0) dom.fail("'test_domain' must not be empty");
        std::vector<Value> values;
        for (std::size_t k = 0; k < dom.size(); ++k) {
          auto v = load_value(dom.element(k), var.type);
          if (std::find(values.begin(), values.end(), v) == values.end()) values.push_back(v);
        }
        var.test_domain = std::move(values);
      }
      var_types[var.name] = var.type;
      pkg.variables.push_back(std::move(var));
    }
  }

  if (root.has("structures")) {
    auto structs = root.child("structures");
    structs.expect_array("'structures'");
    for (std::size_t i = 0; i < structs.size(); ++i) {
      auto node = structs.element(i);
      node.expect_object("structure");
      node.check_keys({"name", "fields"}, {"name", "fields"});
      Structure s;
      s.name = load_name(node, member_names, "structure");
      auto fields = node.child("fields");
      fields.expect_array("'fields'");
      if (fields.size() == 0) fields.fail("a structure needs at least one field");
      std::set<std::string> field_names;
      for (std::size_t k = 0; k < fields.size(); ++k) {
        auto f = fields.element(k);
        f.expect_object("field");
        f.check_keys({"name", "type"}, {"name", "type"});
        StructField field;
        field.name = load_name(f, field_names, "field");
        field.type = load_type(f.child("type"));
        s.fields.push_back(std::move(field));
      }
      pkg.structures.push_back(std::move(s));
    }
  }

  if (root.has("functions")) {
    auto fns = root.child("functions");
    fns.expect_array("'functions'");
    for (std::size_t i = 0; i < fns.size(); ++i) {
      auto node = fns.element(i);
      node.expect_object("function");
      node.check_keys({"name", "params", "returns", "body"}, {"name", "returns", "body"});
      PackageFunction fn;
      fn.name = load_name(node, member_names, "function");
      fn.returns = load_type(node.child("returns"));
      TypeEnv env = var_types;
      std::set<std::string, std::less<>> param_names;
      if (node.has("params")) {
        auto params = node.child("params");
        params.expect_array("'params'");
        std::set<std::string> taken;
        for (std::size_t k = 0; k < params.size(); ++k) {
          auto p = params.element(k);
          p.expect_object("parameter");
          p.check_keys({"name", "type"}, {"name", "type"});
          Param param;
          param.name = load_name(p, taken, "parameter");
          if (var_types.contains(param.name)) p.child("name").fail("parameter '" + param.name + "' shadows a variable");
          param.type = load_type(p.child("type"));
          env[param.name] = param.type;
          param_names.insert(param.name);
          fn.params.push_back(std::move(param));
        }
      }
      fn.body_text = node.child("body").as_string("'body'");
      try {
        fn.body = bind_params(parse_expr(fn.body_text), param_names);
      } catch (const ExprParseError& e) {
        throw ExprParseError(e.detail(), e.offset(), fn.name, origin);
      }
      const std::string context = origin + ": function '" + fn.name + "': ";
      ValueType body_type{};
      try {
        body_type = typecheck_expr(*fn.body, env);
      } catch (const TypeError& e) {
        throw TypeError(context + e.what());
      } catch (const UnboundName& e) {
        throw UnboundName(context + e.what(), e.name());
      }
      if (body_type != fn.returns)
        throw TypeError(context + "body has type " + std::string(to_string(body_type)) + " but returns " +
                        std::string(to_string(fn.returns)));
      pkg.functions.push_back(std::move(fn));
    }
  }
  return pkg;
}

PackageSet load_package_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("package directory '" + dir.string() + "' does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 9 && name.ends_with(".pkg.json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  PackageSet out;
  for (const auto& file : files) {
    auto pkg = load_package(read_text_file(file), file.string());
    auto it = out.find(pkg.id);
    if (it != out.end())
      throw DuplicatePackageId("package id '" + pkg.id + "' declared in both '" + it->second.origin + "' and '" +
                               file.string() + "'");
    out.emplace(pkg.id, std::move(pkg));
  }
  return out;
}

}  // namespace mlfsm
