#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "deq/expression.hpp"

using deq::Expression;

TEST_CASE("arithmetic and precedence") {
    CHECK(Expression::parse("1+2*3")(0.0) == doctest::Approx(7.0));
    CHECK(Expression::parse("(1+2)*3")(0.0) == doctest::Approx(9.0));
    CHECK(Expression::parse("2-3-4")(0.0) == doctest::Approx(-5.0));
    CHECK(Expression::parse("8/4/2")(0.0) == doctest::Approx(1.0));
    CHECK(Expression::parse("-t*t")(3.0) == doctest::Approx(-9.0));
    CHECK(Expression::parse("1e-3+2.5E2")(0.0) == doctest::Approx(250.001));
}

TEST_CASE("functions") {
    CHECK(Expression::parse("sin(t)")(1.2) == doctest::Approx(std::sin(1.2)));
    CHECK(Expression::parse("cos(t)*cos(t)+sin(t)*sin(t)")(0.7) == doctest::Approx(1.0));
    CHECK(Expression::parse("exp(-t)")(2.0) == doctest::Approx(std::exp(-2.0)));
    CHECK(Expression::parse("abs(-t)")(3.5) == doctest::Approx(3.5));
    CHECK(Expression::parse("0.5+0.4*sin(t)*sin(t)")(0.0) == doctest::Approx(0.5));
}

TEST_CASE("custom variable name") {
    Expression g = Expression::parse("u/(1+abs(u))", "u");
    CHECK(g(3.0) == doctest::Approx(0.75));
    CHECK(g(0.0) == doctest::Approx(0.0));
}

TEST_CASE("two variables") {
    Expression f = Expression::parse("sin(x)*y+x", std::vector<std::string>{"x", "y"});
    CHECK(f(1.0, 2.0) == doctest::Approx(std::sin(1.0) * 2.0 + 1.0));
    // a 1D profile parsed with both variables just ignores the second
    Expression p = Expression::parse("x*x", std::vector<std::string>{"x", "y"});
    CHECK(p(3.0, 99.0) == doctest::Approx(9.0));
}

TEST_CASE("syntax errors carry position info") {
    CHECK_THROWS_AS(Expression::parse("1+"), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("sin 3"), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("bogus(t)"), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("1+2)"), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("x", "t"), std::invalid_argument);
    try {
        Expression::parse("1+*2");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("position") != std::string::npos);
    }
}

TEST_CASE("copy keeps the tree alive") {
    Expression a = Expression::parse("t*t");
    Expression b = a;
    CHECK(a(2.0) == doctest::Approx(4.0));
    CHECK(b(5.0) == doctest::Approx(25.0));
    CHECK(b.source() == "t*t");
}
