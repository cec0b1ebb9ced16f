#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>

#include "mlfsm/errors.hpp"

namespace mlfsm {

enum class ValueType { Int, Bool };

std::string_view to_string(ValueType type);
std::optional<ValueType> parse_value_type(std::string_view name);

/// Runtime value of the expression language: a signed 64-bit integer or a boolean.
class Value {
 public:
  Value() = default;

  static Value integer(std::int64_t v) { return Value(Repr{v}); }
  static Value boolean(bool v) { return Value(Repr{v}); }

  ValueType type() const { return std::holds_alternative<bool>(repr_) ? ValueType::Bool : ValueType::Int; }
  bool is_int() const { return type() == ValueType::Int; }
  bool is_bool() const { return type() == ValueType::Bool; }
  std::int64_t as_int() const { return std::get<std::int64_t>(repr_); }
  bool as_bool() const { return std::get<bool>(repr_); }

  std::string to_string() const;

  friend bool operator==(const Value&, const Value&) = default;
  friend auto operator<=>(const Value&, const Value&) = default;

 private:
  using Repr = std::variant<std::int64_t, bool>;
  explicit Value(Repr r) : repr_(r) {}
  Repr repr_{std::int64_t{0}};
};

enum class UnaryOp { Not, Neg };
enum class BinaryOp { Or, And, Eq, Ne, Lt, Le, Gt, Ge, Add, Sub, Mul, Div, Mod };

std::string_view symbol(UnaryOp op);
std::string_view symbol(BinaryOp op);

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct IntLiteral {
  std::int64_t value;
};
struct BoolLiteral {
  bool value;
};
struct VarRef {
  std::string name;
};
struct ParamRef {
  std::string name;
};
struct Unary {
  UnaryOp op;
  ExprPtr operand;
};
struct Binary {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};

/// Immutable expression tree node. Subtrees are shared, never mutated.
struct ExprNode {
  std::variant<IntLiteral, BoolLiteral, VarRef, ParamRef, Unary, Binary> node;
};

ExprPtr make_int(std::int64_t v);
ExprPtr make_bool(bool v);
ExprPtr make_var(std::string name);
ExprPtr make_param(std::string name);
ExprPtr make_unary(UnaryOp op, ExprPtr operand);
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);

bool structurally_equal(const ExprNode& a, const ExprNode& b);

/// S-expression dump, used in test failure messages.
std::string debug_string(const ExprNode& node);

// ---------------------------------------------------------------------------
// Errors

class ExprParseError : public Error {
 public:
  ExprParseError(const std::string& message, std::size_t offset, std::string function = {},
                 const std::string& origin = {});
  std::size_t offset() const { return offset_; }
  /// Name of the package function whose body failed, when known.
  const std::string& function() const { return function_; }
  /// Message without location or function context.
  const std::string& detail() const { return detail_; }

 private:
  std::size_t offset_;
  std::string function_;
  std::string detail_;
};

class TypeError : public Error {
 public:
  using Error::Error;
};

class UnboundName : public Error {
 public:
  UnboundName(const std::string& message, std::string name) : Error(message), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Raised during evaluation; never produced by parsing or typechecking.
class EvalError : public Error {
 public:
  using Error::Error;
};

class DivisionByZero : public EvalError {
 public:
  DivisionByZero() : EvalError("division by zero") {}
};

class Overflow : public EvalError {
 public:
  Overflow() : EvalError("integer overflow (outside signed 64-bit range)") {}
};

// ---------------------------------------------------------------------------
// Operations

/// Parses an expression. Identifiers become VarRef nodes; see bind_params.
ExprPtr parse_expr(std::string_view text);

/// Rewrites VarRef nodes naming one of `params` into ParamRef nodes.
ExprPtr bind_params(const ExprPtr& node, const std::set<std::string, std::less<>>& params);

using TypeEnv = std::map<std::string, ValueType, std::less<>>;

ValueType typecheck_expr(const ExprNode& node, const TypeEnv& env);

using Bindings = std::map<std::string, Value, std::less<>>;
using BindingLookup = std::function<std::optional<Value>(std::string_view)>;

/// Strict evaluation except for short-circuiting `&&` and `||`.
Value eval_expr(const ExprNode& node, const Bindings& bindings);
Value eval_expr(const ExprNode& node, const BindingLookup& lookup);

struct TranslateOptions {
  /// Wrap integer literals that are operands of arithmetic operators as
  /// `int256(N)` so the target compiler does not fold them as rationals.
  bool typed_int_literals = false;
};

/// Target-contract expression text; every unary and binary node is parenthesized.
std::string translate_expr(const ExprNode& node, TranslateOptions options = {});

/// Names of all VarRef nodes in the tree.
std::set<std::string> referenced_variables(const ExprNode& node);

}  // namespace mlfsm
