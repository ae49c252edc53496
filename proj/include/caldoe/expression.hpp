#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace caldoe {

/// Names visible to an expression: x1..xp, eta1..etaq and user constants.
/// Constants are substituted at parse time but keep their names so that the
/// unparsed text still refers to them.
struct ExpressionSignature {
  int p = 1;
  int q = 1;
  std::map<std::string, double> constants;
};

enum class UnaryFunction { Exp, Log, Sqrt, Abs, Sin, Cos };

/// Parsed arithmetic expression over the variables of a signature.
///
/// Grammar (whitespace and newlines are insignificant):
///
///     expr    := term (('+' | '-') term)*
///     term    := unary (('*' | '/') unary)*
///     unary   := ('+' | '-') unary | power
///     power   := primary ('^' unary)?          right associative
///     primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
///
/// Juxtaposition is not multiplication: `2x1` and `2 x1` are syntax errors.
/// Variable slots are laid out as [x1..xp, eta1..etaq].
class Expression {
 public:
  enum class Kind { Number, Constant, Variable, Negate, Add, Subtract, Multiply, Divide, Power, Call };

  struct Node {
    Kind kind = Kind::Number;
    double value = 0.0;      // Number / Constant
    int slot = -1;           // Variable
    std::string name;        // Constant / Variable
    UnaryFunction function = UnaryFunction::Exp;
    int lhs = -1;            // operand of unary nodes, left operand of binary nodes
    int rhs = -1;

    bool operator==(const Node&) const = default;
  };

  static Expression parse(std::string_view source, const ExpressionSignature& signature);

  /// Evaluates with vars laid out as [x..., eta...]. Throws NumericalError
  /// naming the first subexpression that produced a non-finite value.
  double evaluate(std::span<const double> vars) const;

  /// Canonical text; parse(unparse()) reproduces the same tree.
  std::string unparse() const;
  std::string unparse(int node) const;

  /// True when the expression mentions the given variable slot.
  bool uses_slot(int slot) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return root_; }
  int variable_count() const { return variable_count_; }

  bool operator==(const Expression& other) const {
    return root_ == other.root_ && nodes_ == other.nodes_;
  }

 private:
  friend class ExpressionParser;
  double eval_node(int index, std::span<const double> vars) const;

  std::vector<Node> nodes_;
  int root_ = -1;
  int variable_count_ = 0;
};

}  // namespace caldoe
