#pragma once

#include <memory>
#include <string>

namespace mrh {

// Value of an expression together with its partial derivatives in x1, x2.
struct ExprValue {
    double v = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

// Small payoff grammar over the variables x1, x2:
//   expr   := term (('+' | '-') term)*
//   term   := factor (('*' | '/') factor)*
//   factor := '-' factor | number | 'x1' | 'x2' | '(' expr ')'
//           | 'max' '(' expr ',' expr ')'
// Derivatives are propagated through the tree in forward mode; at a max tie
// the subgradient value 0 is returned.
class Expression {
  public:
    static Expression parse(const std::string& source);

    double value(double x1, double x2) const;
    ExprValue eval(double x1, double x2) const;
    const std::string& source() const { return source_; }

    struct Node;

  private:
    std::shared_ptr<const Node> root_;
    std::string source_;
};

}  // namespace mrh
