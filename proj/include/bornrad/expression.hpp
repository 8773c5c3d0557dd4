#pragma once

#include <map>
#include <memory>
#include <string>

namespace bornrad {

// Small arithmetic expression language for model entries:
// + - * / ^, parentheses, numbers, named constants, the variable `x`,
// and sin cos tan exp log sqrt abs sinh cosh tanh atan.
class Expression {
public:
    struct Node;

    Expression() = default;
    // Parses `text`; names other than `x` must be present in `constants`.
    // Throws ParseError.
    Expression(const std::string& text, const std::map<std::string, double>& constants);

    double operator()(double x) const;
    const std::string& text() const { return text_; }

private:
    std::string text_;
    std::shared_ptr<const Node> root_;
};

}  // namespace bornrad
