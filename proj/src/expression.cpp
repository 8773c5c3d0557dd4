#include "bornrad/expression.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <vector>

#include "bornrad/errors.hpp"

namespace bornrad {

struct Expression::Node {
    enum Kind { num, var, neg, add, sub, mul, div, pow, call } kind;
    double value = 0.0;
    double (*fn)(double) = nullptr;
    std::shared_ptr<const Node> a, b;

    double eval(double x) const {
        switch (kind) {
            case num: return value;
            case var: return x;
            case neg: return -a->eval(x);
            case add: return a->eval(x) + b->eval(x);
            case sub: return a->eval(x) - b->eval(x);
            case mul: return a->eval(x) * b->eval(x);
            case div: return a->eval(x) / b->eval(x);
            case pow: return std::pow(a->eval(x), b->eval(x));
            case call: return fn(a->eval(x));
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make(Expression::Node::Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr number(double v) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = Expression::Node::num;
    n->value = v;
    return n;
}

double (*lookup_function(const std::string& name))(double) {
    static const std::map<std::string, double (*)(double)> table = {
        {"sin", [](double v) { return std::sin(v); }},
        {"cos", [](double v) { return std::cos(v); }},
        {"tan", [](double v) { return std::tan(v); }},
        {"exp", [](double v) { return std::exp(v); }},
        {"log", [](double v) { return std::log(v); }},
        {"sqrt", [](double v) { return std::sqrt(v); }},
        {"abs", [](double v) { return std::fabs(v); }},
        {"sinh", [](double v) { return std::sinh(v); }},
        {"cosh", [](double v) { return std::cosh(v); }},
        {"tanh", [](double v) { return std::tanh(v); }},
        {"atan", [](double v) { return std::atan(v); }},
    };
    auto it = table.find(name);
    return it == table.end() ? nullptr : it->second;
}

class Parser {
public:
    Parser(const std::string& s, const std::map<std::string, double>& c) : s_(s), consts_(c) {}

    NodePtr parse() {
        auto n = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

private:
    const std::string& s_;
    const std::map<std::string, double>& consts_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("expression '" + s_ + "' at column " + std::to_string(pos_ + 1) + ": " + what);
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        auto n = term();
        for (;;) {
            if (accept('+')) n = make(Expression::Node::add, n, term());
            else if (accept('-')) n = make(Expression::Node::sub, n, term());
            else return n;
        }
    }
    NodePtr term() {
        auto n = unary();
        for (;;) {
            if (accept('*')) n = make(Expression::Node::mul, n, unary());
            else if (accept('/')) n = make(Expression::Node::div, n, unary());
            else return n;
        }
    }
    NodePtr unary() {
        if (accept('-')) return make(Expression::Node::neg, unary());
        if (accept('+')) return unary();
        return power();
    }
    NodePtr power() {
        auto base = primary();
        if (accept('^')) return make(Expression::Node::pow, base, unary());
        return base;
    }
    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        const char c = s_[pos_];
        if (accept('(')) {
            auto n = expr();
            if (!accept(')')) fail("missing ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(s_.substr(pos_), &used);
            } catch (const std::exception&) {
                fail("bad number");
            }
            pos_ += used;
            return number(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            if (accept('(')) {
                auto fn = lookup_function(name);
                if (!fn) fail("unknown function '" + name + "'");
                auto arg = expr();
                if (!accept(')')) fail("missing ')' after argument of " + name);
                auto n = std::make_shared<Expression::Node>();
                n->kind = Expression::Node::call;
                n->fn = fn;
                n->a = arg;
                return n;
            }
            if (name == "x") return make(Expression::Node::var);
            if (name == "pi") return number(3.14159265358979323846);
            auto it = consts_.find(name);
            if (it == consts_.end()) fail("unknown name '" + name + "'");
            return number(it->second);
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }
};

}  // namespace

Expression::Expression(const std::string& text, const std::map<std::string, double>& constants)
    : text_(text) {
    root_ = Parser(text_, constants).parse();
}

double Expression::operator()(double x) const {
    if (!root_) return 0.0;
    return root_->eval(x);
}

}  // namespace bornrad
