#include "ihj/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

namespace ihj {

ParseError::ParseError(const std::string& msg, int line, int column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + msg),
      line_(line),
      column_(column) {}

namespace {

NodePtr make_num(double v) {
    auto n = std::make_shared<Node>();
    n->op = Op::Num;
    n->num = v;
    return n;
}

NodePtr make_var(const std::string& name) {
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->name = name;
    return n;
}

NodePtr make_node(Op op, NodePtr a, NodePtr b = nullptr, int exponent = 0) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    n->exponent = exponent;
    return n;
}

void collect_vars(const NodePtr& n, std::set<std::string>& out) {
    if (!n) return;
    if (n->op == Op::Var) out.insert(n->name);
    collect_vars(n->a, out);
    collect_vars(n->b, out);
}

bool is_num(const Expression& e, double v) { return e.is_constant() && e.root()->num == v; }

const char* fn_name(Op op) {
    switch (op) {
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Exp: return "exp";
        case Op::Ln: return "ln";
        case Op::Sqrt: return "sqrt";
        default: return nullptr;
    }
}

bool is_function(Op op) { return fn_name(op) != nullptr; }

}  // namespace

Expression::Expression() : Expression(0.0) {}

Expression::Expression(double value) : root_(make_num(value)) {}

Expression::Expression(NodePtr root) : root_(std::move(root)) {
    std::set<std::string> vars;
    collect_vars(root_, vars);
    free_vars_.assign(vars.begin(), vars.end());
}

bool Expression::depends_on(const std::string& v) const {
    return std::binary_search(free_vars_.begin(), free_vars_.end(), v);
}

Expression var(const std::string& name) { return Expression(make_var(name)); }

Expression operator+(const Expression& a, const Expression& b) {
    if (a.is_constant() && b.is_constant()) return Expression(a.root()->num + b.root()->num);
    if (is_num(a, 0.0)) return b;
    if (is_num(b, 0.0)) return a;
    return Expression(make_node(Op::Add, a.root(), b.root()));
}

Expression operator-(const Expression& a, const Expression& b) {
    if (a.is_constant() && b.is_constant()) return Expression(a.root()->num - b.root()->num);
    if (is_num(b, 0.0)) return a;
    if (is_num(a, 0.0)) return -b;
    if (structurally_equal(a, b)) return Expression(0.0);
    return Expression(make_node(Op::Sub, a.root(), b.root()));
}

Expression operator*(const Expression& a, const Expression& b) {
    if (a.is_constant() && b.is_constant()) return Expression(a.root()->num * b.root()->num);
    if (is_num(a, 0.0) || is_num(b, 0.0)) return Expression(0.0);
    if (is_num(a, 1.0)) return b;
    if (is_num(b, 1.0)) return a;
    if (is_num(a, -1.0)) return -b;
    if (is_num(b, -1.0)) return -a;
    return Expression(make_node(Op::Mul, a.root(), b.root()));
}

Expression operator/(const Expression& a, const Expression& b) {
    if (a.is_constant() && b.is_constant() && b.root()->num != 0.0)
        return Expression(a.root()->num / b.root()->num);
    if (is_num(a, 0.0) && !is_num(b, 0.0)) return Expression(0.0);
    if (is_num(b, 1.0)) return a;
    return Expression(make_node(Op::Div, a.root(), b.root()));
}

Expression operator-(const Expression& a) {
    if (a.is_constant()) return Expression(-a.root()->num);
    if (a.root()->op == Op::Neg) return Expression(a.root()->a);
    return Expression(make_node(Op::Neg, a.root()));
}

Expression pow(const Expression& a, int n) {
    if (n == 0) return Expression(1.0);
    if (n == 1) return a;
    if (a.is_constant() && (n > 0 || a.root()->num != 0.0))
        return Expression(std::pow(a.root()->num, n));
    return Expression(make_node(Op::Pow, a.root(), nullptr, n));
}

Expression apply(Op fn, const Expression& a) {
    if (!is_function(fn)) throw std::invalid_argument("apply: not a function operator");
    return Expression(make_node(fn, a.root()));
}

// ---------------------------------------------------------------- parsing

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    Expression run() {
        skip();
        if (at_end()) fail_eof("empty expression");
        NodePtr n = expr();
        skip();
        if (!at_end()) fail(std::string("unexpected '") + s_[pos_] + "'");
        return Expression(n);
    }

private:
    std::string_view s_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    int last_line_ = 1;
    int last_col_ = 1;

    bool at_end() const { return pos_ >= s_.size(); }

    void advance() {
        last_line_ = line_;
        last_col_ = col_;
        if (s_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip() {
        while (!at_end()) {
            char c = s_[pos_];
            if (c == '#') {
                while (!at_end() && s_[pos_] != '\n') ++pos_, ++col_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                if (c == '\n') {
                    ++line_;
                    col_ = 1;
                } else {
                    ++col_;
                }
                ++pos_;
            } else {
                break;
            }
        }
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }
    [[noreturn]] void fail_eof(const std::string& msg) const {
        throw ParseError(msg, last_line_, last_col_);
    }

    char peek() {
        skip();
        return at_end() ? '\0' : s_[pos_];
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            char c = peek();
            if (c != '+' && c != '-') break;
            advance();
            NodePtr rhs = term();
            lhs = make_node(c == '+' ? Op::Add : Op::Sub, lhs, rhs);
        }
        return lhs;
    }

    NodePtr term() {
        NodePtr lhs = factor();
        for (;;) {
            char c = peek();
            if (c != '*' && c != '/') break;
            advance();
            NodePtr rhs = factor();
            lhs = make_node(c == '*' ? Op::Mul : Op::Div, lhs, rhs);
        }
        return lhs;
    }

    // Unary minus applies to a whole factor so that -x^2 means -(x^2).
    NodePtr factor() {
        if (peek() == '-') {
            advance();
            NodePtr inner = factor();
            if (inner->op == Op::Num) return make_num(-inner->num);
            return make_node(Op::Neg, inner);
        }
        NodePtr base = atom();
        if (peek() == '^') {
            advance();
            int n = exponent();
            base = make_node(Op::Pow, base, nullptr, n);
            if (peek() == '^') fail("chained exponent needs parentheses");
        }
        return base;
    }

    int exponent() {
        bool paren = false;
        if (peek() == '(') {
            paren = true;
            advance();
        }
        bool neg = false;
        if (peek() == '-') {
            neg = true;
            advance();
        }
        char c = peek();
        if (at_end()) fail_eof("missing exponent");
        if (!std::isdigit(static_cast<unsigned char>(c))) fail("non-integer exponent");
        int line = line_, col = col_;
        std::string lit = number_text();
        if (lit.find_first_not_of("0123456789") != std::string::npos)
            throw ParseError("non-integer exponent '" + lit + "'", line, col);
        long v = std::stol(lit);
        if (v > 1000) throw ParseError("exponent too large", line, col);
        if (paren) {
            if (peek() != ')') {
                if (at_end()) fail_eof("expected ')'");
                fail("non-integer exponent");
            }
            advance();
        }
        return static_cast<int>(neg ? -v : v);
    }

    std::string number_text() {
        size_t start = pos_;
        auto digits = [&] {
            while (!at_end() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) advance();
        };
        digits();
        if (!at_end() && s_[pos_] == '.') {
            advance();
            digits();
        }
        if (!at_end() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            size_t look = pos_ + 1;
            if (look < s_.size() && (s_[look] == '+' || s_[look] == '-')) ++look;
            if (look < s_.size() && std::isdigit(static_cast<unsigned char>(s_[look]))) {
                while (pos_ < look) advance();
                digits();
            }
        }
        return std::string(s_.substr(start, pos_ - start));
    }

    NodePtr atom() {
        char c = peek();
        if (at_end()) fail_eof("unexpected end of input");
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            int line = line_, col = col_;
            std::string lit = number_text();
            double v = 0.0;
            auto res = std::from_chars(lit.data(), lit.data() + lit.size(), v);
            if (res.ec != std::errc() || res.ptr != lit.data() + lit.size())
                throw ParseError("malformed number '" + lit + "'", line, col);
            return make_num(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            int line = line_, col = col_;
            size_t start = pos_;
            while (!at_end() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) advance();
            std::string id(s_.substr(start, pos_ - start));
            if (peek() == '(') {
                Op fn;
                if (id == "sin") fn = Op::Sin;
                else if (id == "cos") fn = Op::Cos;
                else if (id == "exp") fn = Op::Exp;
                else if (id == "ln") fn = Op::Ln;
                else if (id == "sqrt") fn = Op::Sqrt;
                else throw ParseError("unknown function '" + id + "'", line, col);
                advance();
                NodePtr arg = expr();
                close_paren();
                return make_node(fn, arg);
            }
            if (id == "sin" || id == "cos" || id == "exp" || id == "ln" || id == "sqrt")
                throw ParseError("function '" + id + "' needs an argument", line, col);
            return make_var(id);
        }
        if (c == '(') {
            advance();
            NodePtr inner = expr();
            close_paren();
            return inner;
        }
        fail(std::string("unexpected '") + c + "'");
    }

    void close_paren() {
        if (peek() != ')') {
            if (at_end()) fail_eof("expected ')'");
            fail(std::string("expected ')' but found '") + s_[pos_] + "'");
        }
        advance();
    }
};

}  // namespace

Expression parse(std::string_view text) { return Parser(text).run(); }

// ---------------------------------------------------------------- printing

namespace {

int precedence(const Node& n) {
    switch (n.op) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        case Op::Pow: return 4;
        case Op::Num: return n.num < 0.0 || std::signbit(n.num) ? 3 : 5;
        default: return 5;
    }
}

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void print(const NodePtr& n, std::string& out);

void print_child(const NodePtr& n, int min_prec, std::string& out) {
    if (precedence(*n) < min_prec) {
        out += '(';
        print(n, out);
        out += ')';
    } else {
        print(n, out);
    }
}

void print(const NodePtr& n, std::string& out) {
    switch (n->op) {
        case Op::Num: out += format_number(n->num); break;
        case Op::Var: out += n->name; break;
        case Op::Neg:
            out += '-';
            print_child(n->a, 3, out);
            break;
        case Op::Add:
        case Op::Sub:
            print_child(n->a, 1, out);
            out += n->op == Op::Add ? " + " : " - ";
            print_child(n->b, 2, out);
            break;
        case Op::Mul:
        case Op::Div:
            print_child(n->a, 2, out);
            out += n->op == Op::Mul ? "*" : "/";
            print_child(n->b, 3, out);
            break;
        case Op::Pow:
            print_child(n->a, 5, out);
            out += '^';
            out += std::to_string(n->exponent);
            break;
        default:
            out += fn_name(n->op);
            out += '(';
            print(n->a, out);
            out += ')';
    }
}

bool same(const NodePtr& a, const NodePtr& b) {
    if (!a || !b) return !a && !b;
    if (a->op != b->op) return false;
    switch (a->op) {
        case Op::Num: return a->num == b->num;
        case Op::Var: return a->name == b->name;
        case Op::Pow: return a->exponent == b->exponent && same(a->a, b->a);
        default: return same(a->a, b->a) && same(a->b, b->b);
    }
}

}  // namespace

std::string to_string(const Expression& e) {
    std::string out;
    print(e.root(), out);
    return out;
}

bool structurally_equal(const Expression& a, const Expression& b) { return same(a.root(), b.root()); }

// ---------------------------------------------------------------- evaluation

namespace {

double lookup(const Point& x, const std::string& name) {
    auto it = x.find(name);
    if (it == x.end()) throw std::invalid_argument("no value for variable '" + name + "'");
    return it->second;
}

// f(u), f'(u), f''(u) for the scalar operators.
struct Scalar3 {
    double f, f1, f2;
};

Scalar3 unary(const Node& n, double u, bool need_derivs) {
    switch (n.op) {
        case Op::Neg: return {-u, -1.0, 0.0};
        case Op::Sin: return {std::sin(u), std::cos(u), -std::sin(u)};
        case Op::Cos: return {std::cos(u), -std::sin(u), -std::cos(u)};
        case Op::Exp: {
            double v = std::exp(u);
            return {v, v, v};
        }
        case Op::Ln:
            if (u <= 0.0) throw DomainError("ln of non-positive value");
            return {std::log(u), 1.0 / u, -1.0 / (u * u)};
        case Op::Sqrt: {
            if (u < 0.0) throw DomainError("sqrt of negative value");
            double r = std::sqrt(u);
            if (need_derivs) {
                if (u == 0.0) throw DomainError("sqrt is not differentiable at 0");
                return {r, 0.5 / r, -0.25 / (r * u)};
            }
            return {r, 0.0, 0.0};
        }
        case Op::Pow: {
            int k = n.exponent;
            if (k < 0 && u == 0.0) throw DomainError("negative power of zero");
            double f = std::pow(u, k);
            double f1 = k == 0 ? 0.0 : k * std::pow(u, k - 1);
            double f2 = (k == 0 || k == 1) ? 0.0 : double(k) * (k - 1) * std::pow(u, k - 2);
            return {f, f1, f2};
        }
        default: throw std::logic_error("unary: bad operator");
    }
}

double eval_node(const Node& n, const Point& x) {
    switch (n.op) {
        case Op::Num: return n.num;
        case Op::Var: return lookup(x, n.name);
        case Op::Add: return eval_node(*n.a, x) + eval_node(*n.b, x);
        case Op::Sub: return eval_node(*n.a, x) - eval_node(*n.b, x);
        case Op::Mul: return eval_node(*n.a, x) * eval_node(*n.b, x);
        case Op::Div: {
            double d = eval_node(*n.b, x);
            if (d == 0.0) throw DomainError("division by zero");
            return eval_node(*n.a, x) / d;
        }
        default: return unary(n, eval_node(*n.a, x), false).f;
    }
}

struct J {
    double v = 0.0;
    Eigen::VectorXd g;
    Eigen::MatrixXd H;
};

struct JetEval {
    const Point& x;
    std::map<std::string, int> index;
    int k;

    J constant(double v) const {
        return {v, Eigen::VectorXd::Zero(k), Eigen::MatrixXd::Zero(k, k)};
    }

    J run(const Node& n) const {
        switch (n.op) {
            case Op::Num: return constant(n.num);
            case Op::Var: {
                J r = constant(lookup(x, n.name));
                auto it = index.find(n.name);
                if (it != index.end()) r.g[it->second] = 1.0;
                return r;
            }
            case Op::Add:
            case Op::Sub: {
                J a = run(*n.a), b = run(*n.b);
                double s = n.op == Op::Add ? 1.0 : -1.0;
                a.v += s * b.v;
                a.g += s * b.g;
                a.H += s * b.H;
                return a;
            }
            case Op::Mul: return mul(run(*n.a), run(*n.b));
            case Op::Div: {
                J b = run(*n.b);
                if (b.v == 0.0) throw DomainError("division by zero");
                double u = b.v;
                return mul(run(*n.a), chain(b, {1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u)}));
            }
            default: {
                J a = run(*n.a);
                return chain(a, unary(n, a.v, k > 0));
            }
        }
    }

    static J mul(const J& a, const J& b) {
        J r;
        r.v = a.v * b.v;
        r.g = a.g * b.v + b.g * a.v;
        r.H = a.H * b.v + b.H * a.v + a.g * b.g.transpose() + b.g * a.g.transpose();
        return r;
    }

    static J chain(const J& a, const Scalar3& s) {
        J r;
        r.v = s.f;
        r.g = s.f1 * a.g;
        r.H = s.f1 * a.H + s.f2 * (a.g * a.g.transpose());
        return r;
    }
};

}  // namespace

double eval(const Expression& e, const Point& x) { return eval_node(*e.root(), x); }

Jet2::Jet2(double value, Eigen::VectorXd grad, std::vector<double> upper)
    : value_(value), grad_(std::move(grad)), upper_(std::move(upper)) {
    const size_t k = static_cast<size_t>(grad_.size());
    if (upper_.size() != k * (k + 1) / 2) throw std::invalid_argument("Jet2: bad Hessian size");
}

double Jet2::hess(int i, int j) const {
    if (i > j) std::swap(i, j);
    const int k = size();
    // Row-major packed upper triangle.
    return upper_[static_cast<size_t>(i * k - i * (i - 1) / 2 + (j - i))];
}

Eigen::MatrixXd Jet2::hess_matrix() const {
    const int k = size();
    Eigen::MatrixXd m(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) m(i, j) = hess(i, j);
    return m;
}

Jet2 eval_jet2(const Expression& e, const Point& x, const VarList& active) {
    JetEval ev{x, {}, static_cast<int>(active.size())};
    for (size_t i = 0; i < active.size(); ++i) {
        if (!ev.index.emplace(active[i], static_cast<int>(i)).second)
            throw std::invalid_argument("duplicate active variable '" + active[i] + "'");
    }
    J r = ev.run(*e.root());
    const int k = ev.k;
    std::vector<double> upper;
    upper.reserve(static_cast<size_t>(k * (k + 1) / 2));
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) upper.push_back(0.5 * (r.H(i, j) + r.H(j, i)));
    return Jet2(r.v, r.g, std::move(upper));
}

namespace {

struct G {
    double v = 0.0;
    Eigen::VectorXd g;
};

struct GradEval {
    const Point& x;
    std::map<std::string, int> index;
    int k;

    G run(const Node& n) const {
        switch (n.op) {
            case Op::Num: return {n.num, Eigen::VectorXd::Zero(k)};
            case Op::Var: {
                G r{lookup(x, n.name), Eigen::VectorXd::Zero(k)};
                auto it = index.find(n.name);
                if (it != index.end()) r.g[it->second] = 1.0;
                return r;
            }
            case Op::Add:
            case Op::Sub: {
                G a = run(*n.a), b = run(*n.b);
                double s = n.op == Op::Add ? 1.0 : -1.0;
                a.v += s * b.v;
                a.g += s * b.g;
                return a;
            }
            case Op::Mul: {
                G a = run(*n.a), b = run(*n.b);
                return {a.v * b.v, a.g * b.v + b.g * a.v};
            }
            case Op::Div: {
                G a = run(*n.a), b = run(*n.b);
                if (b.v == 0.0) throw DomainError("division by zero");
                return {a.v / b.v, (a.g * b.v - b.g * a.v) / (b.v * b.v)};
            }
            default: {
                G a = run(*n.a);
                Scalar3 s = unary(n, a.v, k > 0);
                return {s.f, s.f1 * a.g};
            }
        }
    }
};

}  // namespace

Eigen::VectorXd eval_grad(const Expression& e, const Point& x, const VarList& active) {
    GradEval ev{x, {}, static_cast<int>(active.size())};
    for (size_t i = 0; i < active.size(); ++i) ev.index.emplace(active[i], static_cast<int>(i));
    return ev.run(*e.root()).g;
}

Eigen::VectorXd finite_diff_grad(const Expression& e, const Point& x, const VarList& active,
                                 double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be positive");
    Eigen::VectorXd g(static_cast<Eigen::Index>(active.size()));
    Point probe = x;
    for (size_t i = 0; i < active.size(); ++i) {
        const double x0 = lookup(x, active[i]);
        probe[active[i]] = x0 + h;
        const double fp = eval(e, probe);
        probe[active[i]] = x0 - h;
        const double fm = eval(e, probe);
        probe[active[i]] = x0;
        g[static_cast<Eigen::Index>(i)] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// ---------------------------------------------------------------- structural calculus

namespace {

Expression d_node(const NodePtr& n, const std::string& v) {
    auto sub = [](const NodePtr& p) { return Expression(p); };
    switch (n->op) {
        case Op::Num: return Expression(0.0);
        case Op::Var: return Expression(n->name == v ? 1.0 : 0.0);
        case Op::Neg: return -d_node(n->a, v);
        case Op::Add: return d_node(n->a, v) + d_node(n->b, v);
        case Op::Sub: return d_node(n->a, v) - d_node(n->b, v);
        case Op::Mul:
            return d_node(n->a, v) * sub(n->b) + sub(n->a) * d_node(n->b, v);
        case Op::Div: {
            Expression da = d_node(n->a, v), db = d_node(n->b, v);
            Expression first = da / sub(n->b);
            if (db.is_zero()) return first;
            return first - sub(n->a) * db / pow(sub(n->b), 2);
        }
        case Op::Pow: {
            Expression da = d_node(n->a, v);
            if (da.is_zero()) return Expression(0.0);
            return Expression(double(n->exponent)) * pow(sub(n->a), n->exponent - 1) * da;
        }
        case Op::Sin: return apply(Op::Cos, sub(n->a)) * d_node(n->a, v);
        case Op::Cos: return -(apply(Op::Sin, sub(n->a)) * d_node(n->a, v));
        case Op::Exp: return sub(n) * d_node(n->a, v);
        case Op::Ln: return d_node(n->a, v) / sub(n->a);
        case Op::Sqrt: return d_node(n->a, v) / (Expression(2.0) * sub(n));
    }
    throw std::logic_error("diff: bad operator");
}

Expression subst_node(const NodePtr& n, const std::map<std::string, Expression>& repl) {
    switch (n->op) {
        case Op::Num: return Expression(n);
        case Op::Var: {
            auto it = repl.find(n->name);
            return it == repl.end() ? Expression(n) : it->second;
        }
        case Op::Neg: return -subst_node(n->a, repl);
        case Op::Add: return subst_node(n->a, repl) + subst_node(n->b, repl);
        case Op::Sub: return subst_node(n->a, repl) - subst_node(n->b, repl);
        case Op::Mul: return subst_node(n->a, repl) * subst_node(n->b, repl);
        case Op::Div: return subst_node(n->a, repl) / subst_node(n->b, repl);
        case Op::Pow: return pow(subst_node(n->a, repl), n->exponent);
        default: return apply(n->op, subst_node(n->a, repl));
    }
}

}  // namespace

Expression diff(const Expression& e, const std::string& v) {
    if (!e.depends_on(v)) return Expression(0.0);
    return d_node(e.root(), v);
}

Expression substitute(const Expression& e, const std::map<std::string, Expression>& repl) {
    return subst_node(e.root(), repl);
}

void require_vars(const Expression& e, const VarList& allowed, const std::string& what) {
    for (const auto& v : e.free_vars()) {
        if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
            throw std::invalid_argument(what + ": undeclared variable '" + v + "'");
    }
}

}  // namespace ihj

namespace ihj {

namespace {

using Monomial = std::vector<std::pair<std::string, int>>;
using Poly = std::map<Monomial, double>;

constexpr size_t kMaxTerms = 4096;

int degree(const Monomial& m) {
    int d = 0;
    for (const auto& [v, k] : m) d += k;
    return d;
}

Monomial mono_mul(const Monomial& a, const Monomial& b) {
    std::map<std::string, int> acc;
    for (const auto& [v, k] : a) acc[v] += k;
    for (const auto& [v, k] : b) acc[v] += k;
    return Monomial(acc.begin(), acc.end());
}

bool poly_mul(const Poly& a, const Poly& b, Poly& out) {
    out.clear();
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) {
            out[mono_mul(ma, mb)] += ca * cb;
            if (out.size() > kMaxTerms) return false;
        }
    return true;
}

void prune(Poly& p) {
    for (auto it = p.begin(); it != p.end();) it = it->second == 0.0 ? p.erase(it) : std::next(it);
}

bool to_poly(const NodePtr& n, Poly& out) {
    out.clear();
    Poly a, b;
    switch (n->op) {
        case Op::Num:
            if (n->num != 0.0) out[{}] = n->num;
            return true;
        case Op::Var: out[{{n->name, 1}}] = 1.0; return true;
        case Op::Neg:
            if (!to_poly(n->a, out)) return false;
            for (auto& [m, c] : out) c = -c;
            return true;
        case Op::Add:
        case Op::Sub:
            if (!to_poly(n->a, a) || !to_poly(n->b, b)) return false;
            out = a;
            for (const auto& [m, c] : b) out[m] += n->op == Op::Add ? c : -c;
            prune(out);
            return out.size() <= kMaxTerms;
        case Op::Mul:
            if (!to_poly(n->a, a) || !to_poly(n->b, b) || !poly_mul(a, b, out)) return false;
            prune(out);
            return true;
        case Op::Div:
            if (n->b->op != Op::Num || n->b->num == 0.0 || !to_poly(n->a, out)) return false;
            for (auto& [m, c] : out) c /= n->b->num;
            return true;
        case Op::Pow: {
            if (n->exponent < 0 || n->exponent > 16 || !to_poly(n->a, a)) return false;
            out[{}] = 1.0;
            for (int i = 0; i < n->exponent; ++i) {
                if (!poly_mul(out, a, b)) return false;
                prune(b);
                out.swap(b);
            }
            return true;
        }
        default: return false;
    }
}

// Lexicographic on exponent vectors: the earlier variable with the higher power first.
bool lex_before(const Monomial& x, const Monomial& y) {
    size_t i = 0;
    for (; i < x.size() && i < y.size(); ++i) {
        if (x[i].first != y[i].first) return x[i].first < y[i].first;
        if (x[i].second != y[i].second) return x[i].second > y[i].second;
    }
    return i < x.size() && i == y.size();
}

std::vector<std::pair<Monomial, double>> ordered_terms(const Poly& p) {
    std::vector<std::pair<Monomial, double>> terms(p.begin(), p.end());
    std::stable_sort(terms.begin(), terms.end(), [](const auto& x, const auto& y) {
        const int dx = degree(x.first), dy = degree(y.first);
        if (dx != dy) return dx > dy;
        return lex_before(x.first, y.first);
    });
    return terms;
}

Expression from_poly(const Poly& p) {
    Expression acc(0.0);
    bool first = true;
    for (const auto& [m, c] : ordered_terms(p)) {
        const double mag = std::abs(c);
        const bool lead_neg = first && c < 0;
        std::vector<Expression> factors;
        if (mag != 1.0 || m.empty()) factors.push_back(Expression(mag));
        for (const auto& [v, k] : m) factors.push_back(pow(var(v), k));
        if (lead_neg) factors.front() = -factors.front();
        Expression term = factors.front();
        for (size_t i = 1; i < factors.size(); ++i) term = term * factors[i];
        if (first) {
            acc = term;
            first = false;
        } else {
            acc = c < 0 ? acc - term : acc + term;
        }
    }
    return acc;
}

}  // namespace

Expression expand_polynomial(const Expression& e) {
    Poly p;
    if (!to_poly(e.root(), p)) return e;
    return from_poly(p);
}

Expression normalize_constraint(const Expression& e) {
    Poly p;
    if (!to_poly(e.root(), p) || p.empty()) return e;
    if (p.size() == 1 && !p.begin()->first.empty()) {
        Expression out(1.0);
        for (const auto& [v, k] : p.begin()->first) out = out * var(v);
        return out;
    }
    const double lead = ordered_terms(p).front().second;
    for (auto& [m, c] : p) c /= lead;
    return from_poly(p);
}

}  // namespace ihj
