#include "mlfsm/expr.hpp"

#include <cctype>
#include <charconv>
#include <limits>
#include <sstream>
#include <vector>

namespace mlfsm {

std::string_view to_string(ValueType type) { return type == ValueType::Int ? "int" : "bool"; }

std::optional<ValueType> parse_value_type(std::string_view name) {
  if (name == "int") return ValueType::Int;
  if (name == "bool") return ValueType::Bool;
  return std::nullopt;
}

std::string Value::to_string() const {
  if (is_bool()) return as_bool() ? "true" : "false";
  return std::to_string(as_int());
}

std::string_view symbol(UnaryOp op) { return op == UnaryOp::Not ? "!" : "-"; }

std::string_view symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return "||";
    case BinaryOp::And: return "&&";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Mod: return "%";
  }
  return "?";
}

ExprPtr make_int(std::int64_t v) { return std::make_shared<const ExprNode>(ExprNode{IntLiteral{v}}); }
ExprPtr make_bool(bool v) { return std::make_shared<const ExprNode>(ExprNode{BoolLiteral{v}}); }
ExprPtr make_var(std::string name) { return std::make_shared<const ExprNode>(ExprNode{VarRef{std::move(name)}}); }
ExprPtr make_param(std::string name) {
  return std::make_shared<const ExprNode>(ExprNode{ParamRef{std::move(name)}});
}
ExprPtr make_unary(UnaryOp op, ExprPtr operand) {
  return std::make_shared<const ExprNode>(ExprNode{Unary{op, std::move(operand)}});
}
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  return std::make_shared<const ExprNode>(ExprNode{Binary{op, std::move(lhs), std::move(rhs)}});
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

bool structurally_equal(const ExprNode& a, const ExprNode& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      overloaded{
          [&](const IntLiteral& x) { return x.value == std::get<IntLiteral>(b.node).value; },
          [&](const BoolLiteral& x) { return x.value == std::get<BoolLiteral>(b.node).value; },
          [&](const VarRef& x) { return x.name == std::get<VarRef>(b.node).name; },
          [&](const ParamRef& x) { return x.name == std::get<ParamRef>(b.node).name; },
          [&](const Unary& x) {
            const auto& y = std::get<Unary>(b.node);
            return x.op == y.op && structurally_equal(*x.operand, *y.operand);
          },
          [&](const Binary& x) {
            const auto& y = std::get<Binary>(b.node);
            return x.op == y.op && structurally_equal(*x.lhs, *y.lhs) && structurally_equal(*x.rhs, *y.rhs);
          },
      },
      a.node);
}

std::string debug_string(const ExprNode& node) {
  return std::visit(overloaded{
                        [](const IntLiteral& x) { return std::to_string(x.value); },
                        [](const BoolLiteral& x) { return std::string(x.value ? "true" : "false"); },
                        [](const VarRef& x) { return "var:" + x.name; },
                        [](const ParamRef& x) { return "param:" + x.name; },
                        [](const Unary& x) {
                          return "(" + std::string(symbol(x.op)) + " " + debug_string(*x.operand) + ")";
                        },
                        [](const Binary& x) {
                          return "(" + std::string(symbol(x.op)) + " " + debug_string(*x.lhs) + " " +
                                 debug_string(*x.rhs) + ")";
                        },
                    },
                    node.node);
}

ExprParseError::ExprParseError(const std::string& message, std::size_t offset, std::string function,
                               const std::string& origin)
    : Error((origin.empty() ? std::string() : origin + ": ") +
            (function.empty() ? std::string() : "function '" + function + "': ") + message + " at offset " +
            std::to_string(offset)),
      offset_(offset),
      function_(std::move(function)),
      detail_(message) {}

// ---------------------------------------------------------------------------
// Lexer + recursive-descent parser

namespace {

enum class Tok {
  Int,
  Ident,
  True,
  False,
  OrOr,
  AndAnd,
  EqEq,
  NotEq,
  Lt,
  Le,
  Gt,
  Ge,
  Plus,
  Minus,
  Star,
  Slash,
  Percent,
  Bang,
  LParen,
  RParen,
  End,
};

struct Token {
  Tok kind;
  std::size_t offset;
  std::string_view text;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      if (i < src.size() && is_ident_char(src[i])) throw ExprParseError("malformed integer literal", start);
      out.push_back({Tok::Int, start, src.substr(start, i - start)});
      continue;
    }
    if (is_ident_start(c)) {
      while (i < src.size() && is_ident_char(src[i])) ++i;
      auto word = src.substr(start, i - start);
      Tok kind = word == "true" ? Tok::True : word == "false" ? Tok::False : Tok::Ident;
      out.push_back({kind, start, word});
      continue;
    }
    auto two = src.substr(i, 2);
    auto push2 = [&](Tok k) {
      out.push_back({k, start, two});
      i += 2;
    };
    auto push1 = [&](Tok k) {
      out.push_back({k, start, src.substr(i, 1)});
      i += 1;
    };
    if (two == "||") push2(Tok::OrOr);
    else if (two == "&&") push2(Tok::AndAnd);
    else if (two == "==") push2(Tok::EqEq);
    else if (two == "!=") push2(Tok::NotEq);
    else if (two == "<=") push2(Tok::Le);
    else if (two == ">=") push2(Tok::Ge);
    else if (c == '<') push1(Tok::Lt);
    else if (c == '>') push1(Tok::Gt);
    else if (c == '+') push1(Tok::Plus);
    else if (c == '-') push1(Tok::Minus);
    else if (c == '*') push1(Tok::Star);
    else if (c == '/') push1(Tok::Slash);
    else if (c == '%') push1(Tok::Percent);
    else if (c == '!') push1(Tok::Bang);
    else if (c == '(') push1(Tok::LParen);
    else if (c == ')') push1(Tok::RParen);
    else throw ExprParseError(std::string("unexpected character '") + c + "'", start);
  }
  out.push_back({Tok::End, src.size(), {}});
  return out;
}

std::optional<BinaryOp> comparison_op(Tok t) {
  switch (t) {
    case Tok::EqEq: return BinaryOp::Eq;
    case Tok::NotEq: return BinaryOp::Ne;
    case Tok::Lt: return BinaryOp::Lt;
    case Tok::Le: return BinaryOp::Le;
    case Tok::Gt: return BinaryOp::Gt;
    case Tok::Ge: return BinaryOp::Ge;
    default: return std::nullopt;
  }
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  ExprPtr parse() {
    auto e = parse_or();
    if (peek().kind != Tok::End) fail("unexpected token '" + std::string(peek().text) + "'");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& advance() { return toks_[pos_++]; }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    ++pos_;
    return true;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ExprParseError(msg, peek().offset); }

  ExprPtr parse_or() {
    auto lhs = parse_and();
    while (accept(Tok::OrOr)) lhs = make_binary(BinaryOp::Or, lhs, parse_and());
    return lhs;
  }

  ExprPtr parse_and() {
    auto lhs = parse_cmp();
    while (accept(Tok::AndAnd)) lhs = make_binary(BinaryOp::And, lhs, parse_cmp());
    return lhs;
  }

  ExprPtr parse_cmp() {
    auto lhs = parse_add();
    if (auto op = comparison_op(peek().kind)) {
      advance();
      auto rhs = parse_add();
      if (comparison_op(peek().kind)) fail("comparison operators are non-associative");
      return make_binary(*op, lhs, rhs);
    }
    return lhs;
  }

  ExprPtr parse_add() {
    auto lhs = parse_mul();
    for (;;) {
      if (accept(Tok::Plus)) lhs = make_binary(BinaryOp::Add, lhs, parse_mul());
      else if (accept(Tok::Minus)) lhs = make_binary(BinaryOp::Sub, lhs, parse_mul());
      else return lhs;
    }
  }

  ExprPtr parse_mul() {
    auto lhs = parse_unary();
    for (;;) {
      if (accept(Tok::Star)) lhs = make_binary(BinaryOp::Mul, lhs, parse_unary());
      else if (accept(Tok::Slash)) lhs = make_binary(BinaryOp::Div, lhs, parse_unary());
      else if (accept(Tok::Percent)) lhs = make_binary(BinaryOp::Mod, lhs, parse_unary());
      else return lhs;
    }
  }

  ExprPtr parse_unary() {
    if (accept(Tok::Bang)) return make_unary(UnaryOp::Not, parse_unary());
    if (accept(Tok::Minus)) return make_unary(UnaryOp::Neg, parse_unary());
    return parse_primary();
  }

  ExprPtr parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Int: {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{} || ptr != t.text.data() + t.text.size())
          fail("integer literal out of signed 64-bit range");
        advance();
        return make_int(v);
      }
      case Tok::True: advance(); return make_bool(true);
      case Tok::False: advance(); return make_bool(false);
      case Tok::Ident: advance(); return make_var(std::string(t.text));
      case Tok::LParen: {
        advance();
        auto e = parse_or();
        if (!accept(Tok::RParen)) fail("expected ')'");
        return e;
      }
      case Tok::End: fail("unexpected end of expression");
      default: fail("unexpected token '" + std::string(t.text) + "'");
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

ExprPtr parse_expr(std::string_view text) { return Parser(lex(text)).parse(); }

ExprPtr bind_params(const ExprPtr& node, const std::set<std::string, std::less<>>& params) {
  return std::visit(overloaded{
                        [&](const VarRef& x) { return params.contains(x.name) ? make_param(x.name) : node; },
                        [&](const Unary& x) { return make_unary(x.op, bind_params(x.operand, params)); },
                        [&](const Binary& x) {
                          return make_binary(x.op, bind_params(x.lhs, params), bind_params(x.rhs, params));
                        },
                        [&](const auto&) { return node; },
                    },
                    node->node);
}

// ---------------------------------------------------------------------------
// Typechecking

namespace {

ValueType lookup_type(const TypeEnv& env, const std::string& name) {
  auto it = env.find(name);
  if (it == env.end()) throw UnboundName("unbound name '" + name + "'", name);
  return it->second;
}

}  // namespace

ValueType typecheck_expr(const ExprNode& node, const TypeEnv& env) {
  return std::visit(
      overloaded{
          [](const IntLiteral&) { return ValueType::Int; },
          [](const BoolLiteral&) { return ValueType::Bool; },
          [&](const VarRef& x) { return lookup_type(env, x.name); },
          [&](const ParamRef& x) { return lookup_type(env, x.name); },
          [&](const Unary& x) {
            const ValueType want = x.op == UnaryOp::Not ? ValueType::Bool : ValueType::Int;
            const ValueType got = typecheck_expr(*x.operand, env);
            if (got != want)
              throw TypeError("operator '" + std::string(symbol(x.op)) + "' expects " + std::string(to_string(want)) +
                              ", got " + std::string(to_string(got)));
            return want;
          },
          [&](const Binary& x) {
            const ValueType l = typecheck_expr(*x.lhs, env);
            const ValueType r = typecheck_expr(*x.rhs, env);
            auto mismatch = [&]() {
              return TypeError("operator '" + std::string(symbol(x.op)) + "' cannot combine " +
                               std::string(to_string(l)) + " and " + std::string(to_string(r)));
            };
            switch (x.op) {
              case BinaryOp::Or:
              case BinaryOp::And:
                if (l != ValueType::Bool || r != ValueType::Bool) throw mismatch();
                return ValueType::Bool;
              case BinaryOp::Eq:
              case BinaryOp::Ne:
                if (l != r) throw mismatch();
                return ValueType::Bool;
              case BinaryOp::Lt:
              case BinaryOp::Le:
              case BinaryOp::Gt:
              case BinaryOp::Ge:
                if (l != ValueType::Int || r != ValueType::Int) throw mismatch();
                return ValueType::Bool;
              default:
                if (l != ValueType::Int || r != ValueType::Int) throw mismatch();
                return ValueType::Int;
            }
          },
      },
      node.node);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

std::int64_t checked_arith(BinaryOp op, std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  switch (op) {
    case BinaryOp::Add:
      if (__builtin_add_overflow(a, b, &out)) throw Overflow();
      return out;
    case BinaryOp::Sub:
      if (__builtin_sub_overflow(a, b, &out)) throw Overflow();
      return out;
    case BinaryOp::Mul:
      if (__builtin_mul_overflow(a, b, &out)) throw Overflow();
      return out;
    case BinaryOp::Div:
      if (b == 0) throw DivisionByZero();
      if (a == std::numeric_limits<std::int64_t>::min() && b == -1) throw Overflow();
      return a / b;
    case BinaryOp::Mod:
      if (b == 0) throw DivisionByZero();
      if (b == -1) return 0;
      return a % b;
    default:
      break;
  }
  throw TypeError("not an arithmetic operator");
}

class Evaluator {
 public:
  explicit Evaluator(const BindingLookup& lookup) : lookup_(lookup) {}

  Value eval(const ExprNode& node) const {
    return std::visit(overloaded{
                          [](const IntLiteral& x) { return Value::integer(x.value); },
                          [](const BoolLiteral& x) { return Value::boolean(x.value); },
                          [&](const VarRef& x) { return fetch(x.name); },
                          [&](const ParamRef& x) { return fetch(x.name); },
                          [&](const Unary& x) { return eval_unary(x); },
                          [&](const Binary& x) { return eval_binary(x); },
                      },
                      node.node);
  }

 private:
  Value fetch(const std::string& name) const {
    auto v = lookup_(name);
    if (!v) throw UnboundName("unbound name '" + name + "'", name);
    return *v;
  }

  Value eval_unary(const Unary& x) const {
    Value v = eval(*x.operand);
    if (x.op == UnaryOp::Not) return Value::boolean(!v.as_bool());
    if (v.as_int() == std::numeric_limits<std::int64_t>::min()) throw Overflow();
    return Value::integer(-v.as_int());
  }

  Value eval_binary(const Binary& x) const {
    if (x.op == BinaryOp::And) {
      if (!eval(*x.lhs).as_bool()) return Value::boolean(false);
      return Value::boolean(eval(*x.rhs).as_bool());
    }
    if (x.op == BinaryOp::Or) {
      if (eval(*x.lhs).as_bool()) return Value::boolean(true);
      return Value::boolean(eval(*x.rhs).as_bool());
    }
    const Value l = eval(*x.lhs);
    const Value r = eval(*x.rhs);
    switch (x.op) {
      case BinaryOp::Eq: return Value::boolean(l == r);
      case BinaryOp::Ne: return Value::boolean(l != r);
      case BinaryOp::Lt: return Value::boolean(l.as_int() < r.as_int());
      case BinaryOp::Le: return Value::boolean(l.as_int() <= r.as_int());
      case BinaryOp::Gt: return Value::boolean(l.as_int() > r.as_int());
      case BinaryOp::Ge: return Value::boolean(l.as_int() >= r.as_int());
      default: return Value::integer(checked_arith(x.op, l.as_int(), r.as_int()));
    }
  }

  const BindingLookup& lookup_;
};

}  // namespace

Value eval_expr(const ExprNode& node, const BindingLookup& lookup) { return Evaluator(lookup).eval(node); }

Value eval_expr(const ExprNode& node, const Bindings& bindings) {
  BindingLookup lookup = [&](std::string_view name) -> std::optional<Value> {
    auto it = bindings.find(name);
    if (it == bindings.end()) return std::nullopt;
    return it->second;
  };
  return eval_expr(node, lookup);
}

// ---------------------------------------------------------------------------
// Translation

namespace {

bool is_arithmetic(BinaryOp op) {
  return op == BinaryOp::Add || op == BinaryOp::Sub || op == BinaryOp::Mul || op == BinaryOp::Div ||
         op == BinaryOp::Mod;
}

void translate_into(std::ostringstream& out, const ExprNode& node, const TranslateOptions& opts, bool arith_operand) {
  std::visit(overloaded{
                 [&](const IntLiteral& x) {
                   if (opts.typed_int_literals && arith_operand) out << "int256(" << x.value << ")";
                   else out << x.value;
                 },
                 [&](const BoolLiteral& x) { out << (x.value ? "true" : "false"); },
                 [&](const VarRef& x) { out << x.name; },
                 [&](const ParamRef& x) { out << x.name; },
                 [&](const Unary& x) {
                   out << "(" << symbol(x.op);
                   translate_into(out, *x.operand, opts, x.op == UnaryOp::Neg);
                   out << ")";
                 },
                 [&](const Binary& x) {
                   const bool arith = is_arithmetic(x.op);
                   out << "(";
                   translate_into(out, *x.lhs, opts, arith);
                   out << " " << symbol(x.op) << " ";
                   translate_into(out, *x.rhs, opts, arith);
                   out << ")";
                 },
             },
             node.node);
}

void collect_vars(const ExprNode& node, std::set<std::string>& out) {
  std::visit(overloaded{
                 [&](const VarRef& x) { out.insert(x.name); },
                 [&](const Unary& x) { collect_vars(*x.operand, out); },
                 [&](const Binary& x) {
                   collect_vars(*x.lhs, out);
                   collect_vars(*x.rhs, out);
                 },
                 [](const auto&) {},
             },
             node.node);
}

}  // namespace

std::string translate_expr(const ExprNode& node, TranslateOptions options) {
  std::ostringstream out;
  translate_into(out, node, options, false);
  return out.str();
}

std::set<std::string> referenced_variables(const ExprNode& node) {
  std::set<std::string> out;
  collect_vars(node, out);
  return out;
}

}  // namespace mlfsm
