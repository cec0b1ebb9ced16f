#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlfsm/expr.hpp"

namespace mlfsm {

struct Variable {
  std::string name;
  ValueType type = ValueType::Int;
  Value initial;
  /// Finite value set used by state-space exploration.
  std::optional<std::vector<Value>> test_domain;
};

struct Param {
  std::string name;
  ValueType type = ValueType::Int;
};

struct PackageFunction {
  std::string name;
  std::vector<Param> params;
  ValueType returns = ValueType::Bool;
  std::string body_text;
  ExprPtr body;
};

struct StructField {
  std::string name;
  ValueType type = ValueType::Int;
};

struct Structure {
  std::string name;
  std::vector<StructField> fields;
};

/// A reusable bundle of variables, condition functions and record types.
struct PackageLibrary {
  std::string id;
  std::string name;
  std::string version;
  std::vector<Variable> variables;
  std::vector<PackageFunction> functions;
  std::vector<Structure> structures;
  std::string origin;

  const PackageFunction* find_function(std::string_view fn) const;
  const Variable* find_variable(std::string_view var) const;
};

/// Packages keyed by id.
using PackageSet = std::map<std::string, PackageLibrary, std::less<>>;

}  // namespace mlfsm
