#include <doctest.h>

#include "caldoe/expression.hpp"
#include "caldoe/common.hpp"
#include "caldoe/rng.hpp"

#include <cmath>
#include <string>
#include <vector>

using namespace caldoe;

namespace {

double eval(const std::string& src, std::vector<double> vars, int p = 2, int q = 1) {
  ExpressionSignature sig{p, q, {}};
  return Expression::parse(src, sig).evaluate(vars);
}

// Random expression generator for the round-trip property.
std::string random_expression(Rng& rng, int depth) {
  if (depth == 0 || rng.uniform() < 0.25) {
    switch (rng.below(4)) {
      case 0: return "x" + std::to_string(1 + rng.below(2));
      case 1: return "eta1";
      case 2: return "c1";
      default: return std::to_string(rng.below(100)) + "." + std::to_string(rng.below(1000));
    }
  }
  switch (rng.below(9)) {
    case 0: return random_expression(rng, depth - 1) + " + " + random_expression(rng, depth - 1);
    case 1: return random_expression(rng, depth - 1) + "-" + random_expression(rng, depth - 1);
    case 2: return "(" + random_expression(rng, depth - 1) + ")*" + random_expression(rng, depth - 1);
    case 3: return random_expression(rng, depth - 1) + "/(" + random_expression(rng, depth - 1) + ")";
    case 4: return random_expression(rng, depth - 1) + "^" + random_expression(rng, depth - 1);
    case 5: return "-" + random_expression(rng, depth - 1);
    case 6: return "exp(" + random_expression(rng, depth - 1) + ")";
    case 7: return "(" + random_expression(rng, depth - 1) + ")^-" + random_expression(rng, depth - 1);
    default: return "cos(" + random_expression(rng, depth - 1) + ")";
  }
}

}  // namespace

TEST_CASE("arithmetic precedence and associativity") {
  CHECK(eval("1 + 2 * 3", {0, 0, 0}) == 7.0);
  CHECK(eval("(1 + 2) * 3", {0, 0, 0}) == 9.0);
  CHECK(eval("2 ^ 3 ^ 2", {0, 0, 0}) == 512.0);
  CHECK(eval("-2 ^ 2", {0, 0, 0}) == -4.0);
  CHECK(eval("8 / 4 / 2", {0, 0, 0}) == 1.0);
  CHECK(eval("10 - 4 - 3", {0, 0, 0}) == 3.0);
  CHECK(eval("2 * -3", {0, 0, 0}) == -6.0);
  CHECK(eval("2 ^ -1", {0, 0, 0}) == 0.5);
  CHECK(eval("1.5e1 + .5", {0, 0, 0}) == 15.5);
  CHECK(eval("abs(-3) + sqrt(16) + log(1) + sin(0) + cos(0)", {0, 0, 0}) == 8.0);
}

TEST_CASE("linear expression over x and eta") {
  ExpressionSignature sig{1, 2, {}};
  const auto e = Expression::parse("eta1 + eta2*x1", sig);
  const std::vector<double> vars{3.0, 1.0, 2.0};
  CHECK(e.evaluate(vars) == 7.0);
}

TEST_CASE("named constants are bound at parse time") {
  ExpressionSignature sig{1, 1, {{"k1", 2.5}, {"A", 4.0}}};
  const auto e = Expression::parse("k1 * x1 + A*eta1", sig);
  const std::vector<double> vars{2.0, 0.5};
  CHECK(e.evaluate(vars) == doctest::Approx(7.0));
  CHECK(e.unparse() == "k1 * x1 + A * eta1");
}

TEST_CASE("undeclared variable is rejected with a position") {
  ExpressionSignature sig{2, 1, {}};
  try {
    Expression::parse("x1 + x3", sig);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 6);
    CHECK(std::string(e.what()).find("undeclared variable 'x3'") != std::string::npos);
  }
  CHECK_THROWS_AS(Expression::parse("eta2", sig), ParseError);
  CHECK_THROWS_AS(Expression::parse("x0", sig), ParseError);
}

TEST_CASE("syntax errors report line and column") {
  ExpressionSignature sig{2, 1, {}};
  try {
    Expression::parse("x1 +\n  * x2", sig);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 3);
  }
  CHECK_THROWS_AS(Expression::parse("2x1", sig), ParseError);
  CHECK_THROWS_AS(Expression::parse("2 x1", sig), ParseError);
  CHECK_THROWS_AS(Expression::parse("(x1 + x2", sig), ParseError);
  CHECK_THROWS_AS(Expression::parse("x1 $ x2", sig), ParseError);
  CHECK_THROWS_AS(Expression::parse("", sig), ParseError);
  CHECK_THROWS_AS(Expression::parse("foo(x1)", sig), ParseError);
}

TEST_CASE("function arity mismatch") {
  ExpressionSignature sig{2, 1, {}};
  try {
    Expression::parse("exp(x1, x2)", sig);
    FAIL("expected an arity error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("expects 1 argument") != std::string::npos);
  }
  CHECK_THROWS_AS(Expression::parse("sqrt()", sig), ParseError);
}

TEST_CASE("constants may not shadow reserved names") {
  ExpressionSignature sig{2, 1, {{"x1", 1.0}}};
  CHECK_THROWS_AS(Expression::parse("x1", sig), ValidationError);
  ExpressionSignature sig2{2, 1, {{"exp", 1.0}}};
  CHECK_THROWS_AS(Expression::parse("x1", sig2), ValidationError);
}

TEST_CASE("non-finite results name the offending subexpression") {
  ExpressionSignature sig{2, 1, {}};
  const auto e = Expression::parse("x2 + log(x1 - 1)", sig);
  const std::vector<double> vars{0.5, 1.0, 0.0};
  try {
    e.evaluate(vars);
    FAIL("expected a numerical error");
  } catch (const NumericalError& err) {
    CHECK(std::string(err.what()).find("log(x1 - 1)") != std::string::npos);
  }
  const auto d = Expression::parse("1 / (x1 - x2)", sig);
  const std::vector<double> same{0.3, 0.3, 0.0};
  CHECK_THROWS_AS(d.evaluate(same), NumericalError);
}

TEST_CASE("parse-unparse-parse round trip is structurally stable") {
  ExpressionSignature sig{2, 1, {{"c1", 0.75}}};
  Rng rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    const std::string src = random_expression(rng, 4);
    const Expression first = Expression::parse(src, sig);
    const std::string text = first.unparse();
    const Expression second = Expression::parse(text, sig);
    CHECK_MESSAGE(first == second, src, " -> ", text);
    CHECK(second.unparse() == text);
  }
}
