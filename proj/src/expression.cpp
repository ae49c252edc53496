#include "caldoe/expression.hpp"

#include "caldoe/common.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>

namespace caldoe {

namespace {

enum class TokenType { Number, Name, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
  TokenType type = TokenType::End;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

std::string describe(const Token& t) {
  switch (t.type) {
    case TokenType::End:
      return "end of input";
    case TokenType::Number:
      return "number '" + t.text + "'";
    case TokenType::Name:
      return "name '" + t.text + "'";
    default:
      return "'" + t.text + "'";
  }
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = column_;
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        lex_number(t);
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          advance();
        }
        t.type = TokenType::Name;
        t.text = std::string(src_.substr(start, pos_ - start));
      } else {
        switch (c) {
          case '+': t.type = TokenType::Plus; break;
          case '-': t.type = TokenType::Minus; break;
          case '*': t.type = TokenType::Star; break;
          case '/': t.type = TokenType::Slash; break;
          case '^': t.type = TokenType::Caret; break;
          case '(': t.type = TokenType::LParen; break;
          case ')': t.type = TokenType::RParen; break;
          case ',': t.type = TokenType::Comma; break;
          default:
            throw ParseError(std::string("unexpected character '") + c + "'", line_, column_);
        }
        t.text = std::string(1, c);
        advance();
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
  }

  bool digit_at(std::size_t i) const {
    return i < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i]));
  }

  void lex_number(Token& t) {
    const std::size_t start = pos_;
    while (digit_at(pos_)) advance();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      advance();
      while (digit_at(pos_)) advance();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (digit_at(look)) {
        while (pos_ < look) advance();
        while (digit_at(pos_)) advance();
      }
    }
    t.type = TokenType::Number;
    t.text = std::string(src_.substr(start, pos_ - start));
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    auto [ptr, ec] = std::from_chars(first, last, t.number);
    if (ec != std::errc() || ptr != last) {
      throw ParseError("malformed number '" + t.text + "'", t.line, t.column);
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

std::optional<std::pair<UnaryFunction, int>> lookup_function(const std::string& name) {
  if (name == "exp") return std::pair{UnaryFunction::Exp, 1};
  if (name == "log") return std::pair{UnaryFunction::Log, 1};
  if (name == "sqrt") return std::pair{UnaryFunction::Sqrt, 1};
  if (name == "abs") return std::pair{UnaryFunction::Abs, 1};
  if (name == "sin") return std::pair{UnaryFunction::Sin, 1};
  if (name == "cos") return std::pair{UnaryFunction::Cos, 1};
  return std::nullopt;
}

const char* function_name(UnaryFunction f) {
  switch (f) {
    case UnaryFunction::Exp: return "exp";
    case UnaryFunction::Log: return "log";
    case UnaryFunction::Sqrt: return "sqrt";
    case UnaryFunction::Abs: return "abs";
    case UnaryFunction::Sin: return "sin";
    case UnaryFunction::Cos: return "cos";
  }
  return "?";
}

// Parses "x<k>" / "eta<k>" into a 1-based index.
std::optional<int> indexed_name(const std::string& name, std::string_view prefix) {
  if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
  int value = 0;
  const char* first = name.data() + prefix.size();
  const char* last = name.data() + name.size();
  if (*first == '0') return std::nullopt;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

int precedence(Expression::Kind k) {
  using K = Expression::Kind;
  switch (k) {
    case K::Add:
    case K::Subtract: return 1;
    case K::Multiply:
    case K::Divide: return 2;
    case K::Negate: return 3;
    case K::Power: return 4;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

class ExpressionParser {
 public:
  ExpressionParser(std::string_view src, const ExpressionSignature& sig)
      : tokens_(Lexer(src).run()), sig_(sig) {}

  Expression run() {
    if (sig_.p < 1 || sig_.q < 1) throw ValidationError("expression signature needs p >= 1 and q >= 1");
    for (const auto& [name, value] : sig_.constants) {
      if (indexed_name(name, "x") || indexed_name(name, "eta") || lookup_function(name)) {
        throw ValidationError("constant name '" + name + "' collides with a reserved name");
      }
      if (!std::isfinite(value)) throw ValidationError("constant '" + name + "' is not finite");
    }
    out_.variable_count_ = sig_.p + sig_.q;
    out_.root_ = parse_expr();
    if (peek().type != TokenType::End) fail("expected operator or end of input, found " + describe(peek()));
    return std::move(out_);
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& take() { return tokens_[pos_++]; }
  [[noreturn]] void fail(const std::string& msg) const { fail_at(peek(), msg); }
  [[noreturn]] static void fail_at(const Token& t, const std::string& msg) {
    throw ParseError(msg, t.line, t.column);
  }

  int push(Expression::Node node) {
    out_.nodes_.push_back(std::move(node));
    return static_cast<int>(out_.nodes_.size()) - 1;
  }

  int binary(Expression::Kind kind, int lhs, int rhs) {
    Expression::Node n;
    n.kind = kind;
    n.lhs = lhs;
    n.rhs = rhs;
    return push(std::move(n));
  }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      const auto t = peek().type;
      if (t == TokenType::Plus || t == TokenType::Minus) {
        take();
        const int rhs = parse_term();
        lhs = binary(t == TokenType::Plus ? Expression::Kind::Add : Expression::Kind::Subtract, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      const auto t = peek().type;
      if (t == TokenType::Star || t == TokenType::Slash) {
        take();
        const int rhs = parse_unary();
        lhs = binary(t == TokenType::Star ? Expression::Kind::Multiply : Expression::Kind::Divide, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    const auto t = peek().type;
    if (t == TokenType::Plus) {
      take();
      return parse_unary();
    }
    if (t == TokenType::Minus) {
      take();
      Expression::Node n;
      n.kind = Expression::Kind::Negate;
      n.lhs = parse_unary();
      return push(std::move(n));
    }
    return parse_power();
  }

  int parse_power() {
    const int base = parse_primary();
    if (peek().type == TokenType::Caret) {
      take();
      const int exponent = parse_unary();
      return binary(Expression::Kind::Power, base, exponent);
    }
    return base;
  }

  int parse_primary() {
    const Token& t = peek();
    switch (t.type) {
      case TokenType::Number: {
        take();
        Expression::Node n;
        n.kind = Expression::Kind::Number;
        n.value = t.number;
        return push(std::move(n));
      }
      case TokenType::LParen: {
        take();
        const int inner = parse_expr();
        if (peek().type != TokenType::RParen) fail("expected ')', found " + describe(peek()));
        take();
        return inner;
      }
      case TokenType::Name:
        return parse_name();
      default:
        fail("expected a number, name or '(', found " + describe(t));
    }
  }

  int parse_name() {
    const Token name = take();
    if (peek().type == TokenType::LParen) {
      const auto fn = lookup_function(name.text);
      if (!fn) fail_at(name, "unknown function '" + name.text + "'");
      take();
      std::vector<int> args;
      if (peek().type != TokenType::RParen) {
        args.push_back(parse_expr());
        while (peek().type == TokenType::Comma) {
          take();
          args.push_back(parse_expr());
        }
      }
      if (peek().type != TokenType::RParen) fail("expected ')' or ',', found " + describe(peek()));
      take();
      if (static_cast<int>(args.size()) != fn->second) {
        fail_at(name, "function '" + name.text + "' expects " + std::to_string(fn->second) +
                          " argument(s), got " + std::to_string(args.size()));
      }
      Expression::Node n;
      n.kind = Expression::Kind::Call;
      n.function = fn->first;
      n.name = name.text;
      n.lhs = args[0];
      return push(std::move(n));
    }
    Expression::Node n;
    n.name = name.text;
    if (auto k = indexed_name(name.text, "x"); k && *k <= sig_.p) {
      n.kind = Expression::Kind::Variable;
      n.slot = *k - 1;
    } else if (auto e = indexed_name(name.text, "eta"); e && *e <= sig_.q) {
      n.kind = Expression::Kind::Variable;
      n.slot = sig_.p + *e - 1;
    } else if (auto c = sig_.constants.find(name.text); c != sig_.constants.end()) {
      n.kind = Expression::Kind::Constant;
      n.value = c->second;
    } else {
      fail_at(name, "undeclared variable '" + name.text + "'");
    }
    return push(std::move(n));
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const ExpressionSignature& sig_;
  Expression out_;
};

Expression Expression::parse(std::string_view source, const ExpressionSignature& signature) {
  return ExpressionParser(source, signature).run();
}

double Expression::evaluate(std::span<const double> vars) const {
  if (static_cast<int>(vars.size()) != variable_count_) {
    throw ValidationError("expression expects " + std::to_string(variable_count_) + " variables, got " +
                          std::to_string(vars.size()));
  }
  return eval_node(root_, vars);
}

double Expression::eval_node(int index, std::span<const double> vars) const {
  const Node& n = nodes_[index];
  double v = 0.0;
  switch (n.kind) {
    case Kind::Number:
    case Kind::Constant:
      return n.value;
    case Kind::Variable:
      v = vars[n.slot];
      break;
    case Kind::Negate:
      v = -eval_node(n.lhs, vars);
      break;
    case Kind::Add:
      v = eval_node(n.lhs, vars) + eval_node(n.rhs, vars);
      break;
    case Kind::Subtract:
      v = eval_node(n.lhs, vars) - eval_node(n.rhs, vars);
      break;
    case Kind::Multiply:
      v = eval_node(n.lhs, vars) * eval_node(n.rhs, vars);
      break;
    case Kind::Divide:
      v = eval_node(n.lhs, vars) / eval_node(n.rhs, vars);
      break;
    case Kind::Power: {
      const double base = eval_node(n.lhs, vars);
      const double exponent = eval_node(n.rhs, vars);
      v = exponent == 2.0 ? base * base : std::pow(base, exponent);
      break;
    }
    case Kind::Call: {
      const double a = eval_node(n.lhs, vars);
      switch (n.function) {
        case UnaryFunction::Exp: v = std::exp(a); break;
        case UnaryFunction::Log: v = a > 0.0 ? std::log(a) : std::nan(""); break;
        case UnaryFunction::Sqrt: v = std::sqrt(a); break;
        case UnaryFunction::Abs: v = std::abs(a); break;
        case UnaryFunction::Sin: v = std::sin(a); break;
        case UnaryFunction::Cos: v = std::cos(a); break;
      }
      break;
    }
  }
  if (!std::isfinite(v)) {
    throw NumericalError("non-finite value in subexpression '" + unparse(index) + "'");
  }
  return v;
}

std::string Expression::unparse() const { return unparse(root_); }

std::string Expression::unparse(int index) const {
  const Node& n = nodes_[index];
  const int prec = precedence(n.kind);
  auto wrap = [&](int child, bool parens) {
    std::string s = unparse(child);
    return parens ? "(" + s + ")" : s;
  };
  switch (n.kind) {
    case Kind::Number:
      return format_number(n.value);
    case Kind::Constant:
    case Kind::Variable:
      return n.name;
    case Kind::Negate:
      return "-" + wrap(n.lhs, precedence(nodes_[n.lhs].kind) <= prec);
    case Kind::Call:
      return std::string(function_name(n.function)) + "(" + unparse(n.lhs) + ")";
    case Kind::Power:
      return wrap(n.lhs, precedence(nodes_[n.lhs].kind) <= prec) + "^" +
             wrap(n.rhs, precedence(nodes_[n.rhs].kind) < prec);
    default: {
      const char* op = n.kind == Kind::Add        ? " + "
                       : n.kind == Kind::Subtract ? " - "
                       : n.kind == Kind::Multiply ? " * "
                                                  : " / ";
      return wrap(n.lhs, precedence(nodes_[n.lhs].kind) < prec) + op +
             wrap(n.rhs, precedence(nodes_[n.rhs].kind) <= prec);
    }
  }
}

bool Expression::uses_slot(int slot) const {
  for (const auto& n : nodes_) {
    if (n.kind == Kind::Variable && n.slot == slot) return true;
  }
  return false;
}

}  // namespace caldoe
