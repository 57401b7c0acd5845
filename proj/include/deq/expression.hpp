#ifndef DEQ_EXPRESSION_HPP
#define DEQ_EXPRESSION_HPP

#include <memory>
#include <string>
#include <vector>

namespace deq {

// Closed-form scalar expressions, used for time-dependent delays tau(t),
// gains k(t), componentwise nonlinearities g(u) and spatial profiles f(x, y).
//
// Grammar: + - * /, parentheses, functions sin cos exp abs, numeric
// literals, unary minus, and named free variables.
class Expression {
public:
    // Parses `src` with `var` as the free variable name.
    // Throws std::invalid_argument on syntax errors (message points at the
    // offending position).
    static Expression parse(const std::string& src, const std::string& var = "t");
    static Expression parse(const std::string& src,
                            const std::vector<std::string>& vars);

    double operator()(double x) const;
    double operator()(double x, double y) const;

    const std::string& source() const { return source_; }

    struct Node;

    Expression(const Expression&);
    Expression& operator=(const Expression&);
    Expression(Expression&&) noexcept;
    Expression& operator=(Expression&&) noexcept;
    ~Expression();

private:
    Expression(std::unique_ptr<Node> root, std::string source);
    std::unique_ptr<Node> root_;
    std::string source_;
};

} // namespace deq

#endif
