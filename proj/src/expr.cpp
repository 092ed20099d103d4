#include "mrh/expr.hpp"

#include <cctype>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace mrh {

struct Expression::Node {
    enum class Op { Const, X1, X2, Add, Sub, Mul, Div, Max, Neg } op;
    double constant = 0.0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node::Op op, NodePtr l = nullptr, NodePtr r = nullptr, double c = 0.0) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->constant = c;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
}

class Parser {
  public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr run() {
        NodePtr e = expr();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        return e;
    }

  private:
    const std::string& s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("expression: " + what + " at position " + std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (consume('+')) {
                lhs = make(Node::Op::Add, lhs, term());
            } else if (consume('-')) {
                lhs = make(Node::Op::Sub, lhs, term());
            } else {
                return lhs;
            }
        }
    }

    NodePtr term() {
        NodePtr lhs = factor();
        for (;;) {
            if (consume('*')) {
                lhs = make(Node::Op::Mul, lhs, factor());
            } else if (consume('/')) {
                lhs = make(Node::Op::Div, lhs, factor());
            } else {
                return lhs;
            }
        }
    }

    NodePtr factor() {
        skip_ws();
        if (consume('-')) return make(Node::Op::Neg, factor());
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            char* end = nullptr;
            const double v = std::strtod(s_.c_str() + pos_, &end);
            if (end == s_.c_str() + pos_) fail("malformed number");
            pos_ = static_cast<std::size_t>(end - s_.c_str());
            return make(Node::Op::Const, nullptr, nullptr, v);
        }
        if (c == '(') {
            ++pos_;
            NodePtr inner = expr();
            if (!consume(')')) fail("missing ')'");
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
                ++pos_;
            }
            const std::string name = s_.substr(start, pos_ - start);
            if (name == "x1") return make(Node::Op::X1);
            if (name == "x2") return make(Node::Op::X2);
            if (name == "max") {
                if (!consume('(')) fail("max requires '('");
                NodePtr a = expr();
                if (!consume(',')) fail("max requires two arguments");
                NodePtr b = expr();
                if (!consume(')')) fail("missing ')'");
                return make(Node::Op::Max, a, b);
            }
            pos_ = start;
            fail("unknown identifier '" + name + "'");
        }
        fail(std::string("unexpected character '") + c + "'");
    }
};

ExprValue eval_node(const Node& n, double x1, double x2) {
    switch (n.op) {
        case Node::Op::Const:
            return {n.constant, 0.0, 0.0};
        case Node::Op::X1:
            return {x1, 1.0, 0.0};
        case Node::Op::X2:
            return {x2, 0.0, 1.0};
        case Node::Op::Neg: {
            const ExprValue a = eval_node(*n.lhs, x1, x2);
            return {-a.v, -a.d1, -a.d2};
        }
        case Node::Op::Add: {
            const ExprValue a = eval_node(*n.lhs, x1, x2);
            const ExprValue b = eval_node(*n.rhs, x1, x2);
            return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2};
        }
        case Node::Op::Sub: {
            const ExprValue a = eval_node(*n.lhs, x1, x2);
            const ExprValue b = eval_node(*n.rhs, x1, x2);
            return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2};
        }
        case Node::Op::Mul: {
            const ExprValue a = eval_node(*n.lhs, x1, x2);
            const ExprValue b = eval_node(*n.rhs, x1, x2);
            return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + a.v * b.d2};
        }
        case Node::Op::Div: {
            const ExprValue a = eval_node(*n.lhs, x1, x2);
            const ExprValue b = eval_node(*n.rhs, x1, x2);
            const double q = a.v / b.v;
            return {q, (a.d1 - q * b.d1) / b.v, (a.d2 - q * b.d2) / b.v};
        }
        case Node::Op::Max: {
            const ExprValue a = eval_node(*n.lhs, x1, x2);
            const ExprValue b = eval_node(*n.rhs, x1, x2);
            if (a.v > b.v) return a;
            if (b.v > a.v) return b;
            return {a.v, 0.0, 0.0};  // subgradient selection 0 on the kink set
        }
    }
    return {};
}

}  // namespace

Expression Expression::parse(const std::string& source) {
    Expression e;
    e.root_ = Parser(source).run();
    e.source_ = source;
    return e;
}

double Expression::value(double x1, double x2) const { return eval_node(*root_, x1, x2).v; }

ExprValue Expression::eval(double x1, double x2) const { return eval_node(*root_, x1, x2); }

}  // namespace mrh
