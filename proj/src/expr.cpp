#include "sdsim/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "sdsim/errors.hpp"

namespace sds::expr {

struct Node {
    enum class Op {
        constant,
        variable,
        norm_state,
        add,
        sub,
        mul,
        div,
        pow,
        neg,
        abs,
        sqrt,
        exp,
        min,
        max,
    };

    Op op = Op::constant;
    double value = 0.0;
    int var = -1;
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Node>;

double eval_node(const Node& node, std::span<const double> vars) {
    switch (node.op) {
        case Node::Op::constant: return node.value;
        case Node::Op::variable: return vars[static_cast<std::size_t>(node.var)];
        case Node::Op::norm_state: {
            double s = 0.0;
            for (double v : vars) s += v * v;
            return std::sqrt(s);
        }
        case Node::Op::add: return eval_node(*node.a, vars) + eval_node(*node.b, vars);
        case Node::Op::sub: return eval_node(*node.a, vars) - eval_node(*node.b, vars);
        case Node::Op::mul: return eval_node(*node.a, vars) * eval_node(*node.b, vars);
        case Node::Op::div: return eval_node(*node.a, vars) / eval_node(*node.b, vars);
        case Node::Op::pow: return std::pow(eval_node(*node.a, vars), eval_node(*node.b, vars));
        case Node::Op::neg: return -eval_node(*node.a, vars);
        case Node::Op::abs: return std::abs(eval_node(*node.a, vars));
        case Node::Op::sqrt: return std::sqrt(eval_node(*node.a, vars));
        case Node::Op::exp: return std::exp(eval_node(*node.a, vars));
        case Node::Op::min: return std::min(eval_node(*node.a, vars), eval_node(*node.b, vars));
        case Node::Op::max: return std::max(eval_node(*node.a, vars), eval_node(*node.b, vars));
    }
    return 0.0;
}

bool node_has_variables(const Node& node) {
    if (node.op == Node::Op::variable || node.op == Node::Op::norm_state) return true;
    if (node.a && node_has_variables(*node.a)) return true;
    if (node.b && node_has_variables(*node.b)) return true;
    return false;
}

class Parser {
  public:
    Parser(std::string_view text, std::span<const std::string> vars,
           bool allow_norm, int line, int column_offset)
        : text_(text), vars_(vars), allow_norm_(allow_norm), line_(line),
          offset_(column_offset) {}

    NodePtr parse() {
        NodePtr e = parse_sum();
        skip_space();
        if (pos_ != text_.size()) fail(pos_, "unexpected trailing input");
        return e;
    }

  private:
    std::string_view text_;
    std::span<const std::string> vars_;
    bool allow_norm_;
    int line_;
    int offset_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(std::size_t at, const std::string& message) const {
        std::ostringstream os;
        os << "line " << line_ << ", column " << (offset_ + static_cast<int>(at) + 1)
           << ": " << message;
        throw ConfigError(os.str());
    }

    void skip_space() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool eat(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_space();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    NodePtr parse_sum() {
        NodePtr left = parse_product();
        while (true) {
            if (eat('+')) {
                left = binary(Node::Op::add, left, parse_product());
            } else if (eat('-')) {
                left = binary(Node::Op::sub, left, parse_product());
            } else {
                return left;
            }
        }
    }

    NodePtr parse_product() {
        NodePtr left = parse_unary();
        while (true) {
            if (eat('*')) {
                left = binary(Node::Op::mul, left, parse_unary());
            } else if (eat('/')) {
                left = binary(Node::Op::div, left, parse_unary());
            } else {
                return left;
            }
        }
    }

    NodePtr parse_unary() {
        if (eat('-')) {
            auto n = std::make_shared<Node>();
            n->op = Node::Op::neg;
            n->a = parse_unary();
            return n;
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (eat('^')) return binary(Node::Op::pow, base, parse_unary());
        return base;
    }

    NodePtr parse_primary() {
        skip_space();
        if (pos_ >= text_.size()) fail(pos_, "unexpected end of expression");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return parse_number();
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            return parse_identifier();
        }
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_sum();
            if (!eat(')')) fail(pos_, "expected ')'");
            return e;
        }
        fail(pos_, std::string("unexpected character '") + c + "'");
    }

    NodePtr parse_number() {
        // strtod needs a terminated buffer; string_view may not provide one
        const std::string tail(text_.substr(pos_, 64));
        char* end = nullptr;
        const double v = std::strtod(tail.c_str(), &end);
        if (end == tail.c_str()) fail(pos_, "malformed number");
        pos_ += static_cast<std::size_t>(end - tail.c_str());
        auto n = std::make_shared<Node>();
        n->op = Node::Op::constant;
        n->value = v;
        return n;
    }

    NodePtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                text_[pos_] == '_')) {
            ++pos_;
        }
        const std::string name(text_.substr(start, pos_ - start));
        if (peek() == '(') {
            return parse_call(name, start);
        }
        for (std::size_t k = 0; k < vars_.size(); ++k) {
            if (vars_[k] == name) {
                auto n = std::make_shared<Node>();
                n->op = Node::Op::variable;
                n->var = static_cast<int>(k);
                return n;
            }
        }
        fail(start, "unknown identifier '" + name + "'");
    }

    NodePtr parse_call(const std::string& name, std::size_t start) {
        eat('(');
        if (name == "norm") {
            if (!allow_norm_) fail(start, "norm(x) is not allowed in this context");
            skip_space();
            const std::size_t arg = pos_;
            while (pos_ < text_.size() && text_[pos_] != ')' &&
                   !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            }
            if (text_.substr(arg, pos_ - arg) != "x") {
                fail(arg, "norm takes the whole state: write norm(x)");
            }
            if (!eat(')')) fail(pos_, "expected ')'");
            auto n = std::make_shared<Node>();
            n->op = Node::Op::norm_state;
            return n;
        }
        Node::Op op;
        int arity = 1;
        if (name == "abs") {
            op = Node::Op::abs;
        } else if (name == "sqrt") {
            op = Node::Op::sqrt;
        } else if (name == "exp") {
            op = Node::Op::exp;
        } else if (name == "min") {
            op = Node::Op::min;
            arity = 2;
        } else if (name == "max") {
            op = Node::Op::max;
            arity = 2;
        } else {
            fail(start, "unknown function '" + name + "'");
        }
        auto n = std::make_shared<Node>();
        n->op = op;
        n->a = parse_sum();
        if (arity == 2) {
            if (!eat(',')) fail(pos_, "expected ',' between arguments");
            n->b = parse_sum();
        }
        if (!eat(')')) fail(pos_, "expected ')'");
        return n;
    }

    static NodePtr binary(Node::Op op, NodePtr a, NodePtr b) {
        auto n = std::make_shared<Node>();
        n->op = op;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }
};

} // namespace

double Expression::eval(std::span<const double> vars) const {
    return eval_node(*root_, vars);
}

bool Expression::depends_on_variables() const {
    return root_ && node_has_variables(*root_);
}

Expression parse_expression(std::string_view text,
                            std::span<const std::string> var_names,
                            bool allow_state_norm, int line, int column_offset) {
    Parser parser(text, var_names, allow_state_norm, line, column_offset);
    Expression e;
    e.root_ = parser.parse();
    e.text_ = std::string(text);
    return e;
}

} // namespace sds::expr
