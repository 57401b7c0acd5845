#include "deq/expression.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace deq {

namespace {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Sin, Cos, Exp, Abs };

} // namespace

struct Expression::Node {
    Op op;
    double value = 0.0; // Op::Const only
    std::unique_ptr<Node> lhs, rhs;

    int var_index = 0;     // Op::Var only

    double eval(double x, double y) const {
        switch (op) {
        case Op::Const: return value;
        case Op::Var:   return var_index == 0 ? x : y;
        case Op::Add:   return lhs->eval(x, y) + rhs->eval(x, y);
        case Op::Sub:   return lhs->eval(x, y) - rhs->eval(x, y);
        case Op::Mul:   return lhs->eval(x, y) * rhs->eval(x, y);
        case Op::Div:   return lhs->eval(x, y) / rhs->eval(x, y);
        case Op::Neg:   return -lhs->eval(x, y);
        case Op::Sin:   return std::sin(lhs->eval(x, y));
        case Op::Cos:   return std::cos(lhs->eval(x, y));
        case Op::Exp:   return std::exp(lhs->eval(x, y));
        case Op::Abs:   return std::abs(lhs->eval(x, y));
        }
        return 0.0;
    }

    std::unique_ptr<Node> clone() const {
        auto n = std::make_unique<Node>();
        n->op = op;
        n->value = value;
        n->var_index = var_index;
        if (lhs) n->lhs = lhs->clone();
        if (rhs) n->rhs = rhs->clone();
        return n;
    }
};

namespace {

using NodePtr = std::unique_ptr<Expression::Node>;

class Parser {
public:
    Parser(const std::string& src, const std::vector<std::string>& vars)
        : src_(src), vars_(vars) {}

    NodePtr run() {
        auto e = expr();
        skip_ws();
        if (pos_ != src_.size())
            fail("unexpected trailing input");
        return e;
    }

private:
    const std::string& src_;
    const std::vector<std::string>& vars_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("expression error at position " +
                                    std::to_string(pos_) + " in \"" + src_ + "\": " + what);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) { ++pos_; return true; }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    static NodePtr make(Op op, NodePtr l = nullptr, NodePtr r = nullptr) {
        auto n = std::make_unique<Expression::Node>();
        n->op = op;
        n->lhs = std::move(l);
        n->rhs = std::move(r);
        return n;
    }

    NodePtr expr() {
        auto l = term();
        for (;;) {
            if (accept('+')) l = make(Op::Add, std::move(l), term());
            else if (accept('-')) l = make(Op::Sub, std::move(l), term());
            else return l;
        }
    }

    NodePtr term() {
        auto l = unary();
        for (;;) {
            if (accept('*')) l = make(Op::Mul, std::move(l), unary());
            else if (accept('/')) l = make(Op::Div, std::move(l), unary());
            else return l;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Op::Neg, unary());
        return primary();
    }

    NodePtr primary() {
        skip_ws();
        if (accept('(')) {
            auto e = expr();
            expect(')');
            return e;
        }
        if (pos_ >= src_.size()) fail("unexpected end of input");
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)))
            return ident();
        fail("unexpected character");
    }

    NodePtr number() {
        size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.' ||
                src_[pos_] == 'e' || src_[pos_] == 'E' ||
                ((src_[pos_] == '+' || src_[pos_] == '-') && pos_ > start &&
                 (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E'))))
            ++pos_;
        try {
            size_t used = 0;
            double v = std::stod(src_.substr(start, pos_ - start), &used);
            if (used != pos_ - start) { pos_ = start + used; fail("malformed number"); }
            auto n = make(Op::Const);
            n->value = v;
            return n;
        } catch (const std::logic_error&) {
            pos_ = start;
            fail("malformed number");
        }
    }

    NodePtr ident() {
        size_t start = pos_;
        while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        std::string name = src_.substr(start, pos_ - start);
        for (size_t v = 0; v < vars_.size(); ++v)
            if (name == vars_[v]) {
                auto n = make(Op::Var);
                n->var_index = static_cast<int>(v);
                return n;
            }
        Op op;
        if (name == "sin") op = Op::Sin;
        else if (name == "cos") op = Op::Cos;
        else if (name == "exp") op = Op::Exp;
        else if (name == "abs") op = Op::Abs;
        else { pos_ = start; fail("unknown identifier '" + name + "'"); }
        expect('(');
        auto arg = expr();
        expect(')');
        return make(op, std::move(arg));
    }
};

} // namespace

Expression Expression::parse(const std::string& src, const std::string& var) {
    std::vector<std::string> vars{var};
    return Expression(Parser(src, vars).run(), src);
}

Expression Expression::parse(const std::string& src,
                             const std::vector<std::string>& vars) {
    if (vars.size() > 2)
        throw std::invalid_argument("at most two free variables are supported");
    return Expression(Parser(src, vars).run(), src);
}

double Expression::operator()(double x) const { return root_->eval(x, 0.0); }

double Expression::operator()(double x, double y) const { return root_->eval(x, y); }

Expression::Expression(std::unique_ptr<Node> root, std::string source)
    : root_(std::move(root)), source_(std::move(source)) {}

Expression::Expression(const Expression& o)
    : root_(o.root_->clone()), source_(o.source_) {}

Expression& Expression::operator=(const Expression& o) {
    if (this != &o) {
        root_ = o.root_->clone();
        source_ = o.source_;
    }
    return *this;
}

Expression::Expression(Expression&&) noexcept = default;
Expression& Expression::operator=(Expression&&) noexcept = default;
Expression::~Expression() = default;

} // namespace deq
