#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sds::expr {

struct Node;

/// Parsed arithmetic expression over named scalar variables, with an
/// optional whole-state norm(x) term.
class Expression {
  public:
    Expression() = default;

    /// vars[k] supplies the value of the k-th declared variable; when the
    /// expression contains norm(x), vars must span the full state vector.
    double eval(std::span<const double> vars) const;

    /// False when no variable (and no norm) appears, i.e. the expression is
    /// a constant.
    bool depends_on_variables() const;

    const std::string& text() const { return text_; }

  private:
    friend Expression parse_expression(std::string_view,
                                       std::span<const std::string>, bool, int,
                                       int);
    std::shared_ptr<const Node> root_;
    std::string text_;
};

/// Recursive-descent parser. Grammar: literals, the named variables,
/// + - * / ^ with usual precedence (^ right-associative, unary minus below
/// it), parentheses, abs/sqrt/exp (1 argument), min/max (2 arguments), and
/// norm(x) when allow_state_norm is set. Errors throw ConfigError carrying
/// "line L, column C". column_offset is added to in-expression columns so
/// errors point into the original config line.
Expression parse_expression(std::string_view text,
                            std::span<const std::string> var_names,
                            bool allow_state_norm, int line = 1,
                            int column_offset = 0);

} // namespace sds::expr
