#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ihj {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, int line, int column);
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Ln, Sqrt };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::Num;
    double num = 0.0;
    int exponent = 0;
    std::string name;
    NodePtr a;
    NodePtr b;
};

using Point = std::map<std::string, double>;
using VarList = std::vector<std::string>;

class Expression {
public:
    Expression();
    explicit Expression(NodePtr root);
    Expression(double value);

    const NodePtr& root() const { return root_; }
    // Sorted, duplicate free.
    const VarList& free_vars() const { return free_vars_; }
    bool depends_on(const std::string& var) const;
    bool is_constant() const { return root_->op == Op::Num; }
    bool is_zero() const { return is_constant() && root_->num == 0.0; }

private:
    NodePtr root_;
    VarList free_vars_;
};

Expression var(const std::string& name);
Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);
Expression pow(const Expression& a, int n);
Expression apply(Op fn, const Expression& a);

Expression parse(std::string_view text);
std::string to_string(const Expression& e);
bool structurally_equal(const Expression& a, const Expression& b);

double eval(const Expression& e, const Point& x);

// Value, gradient and Hessian over an ordered list of active variables.
// The Hessian is kept as a packed upper triangle.
class Jet2 {
public:
    Jet2() = default;
    Jet2(double value, Eigen::VectorXd grad, std::vector<double> upper);

    double value() const { return value_; }
    const Eigen::VectorXd& grad() const { return grad_; }
    double hess(int i, int j) const;
    Eigen::MatrixXd hess_matrix() const;
    int size() const { return static_cast<int>(grad_.size()); }

private:
    double value_ = 0.0;
    Eigen::VectorXd grad_;
    std::vector<double> upper_;
};

Jet2 eval_jet2(const Expression& e, const Point& x, const VarList& active);
Eigen::VectorXd eval_grad(const Expression& e, const Point& x, const VarList& active);
Eigen::VectorXd finite_diff_grad(const Expression& e, const Point& x, const VarList& active,
                                 double h = 1e-5);

Expression diff(const Expression& e, const std::string& v);
Expression substitute(const Expression& e, const std::map<std::string, Expression>& repl);

// Polynomial expressions (integer powers, division by constants) are expanded
// into a sum of monomials, highest total degree first, ties in variable order;
// anything else is returned unchanged.
Expression expand_polynomial(const Expression& e);

// Expanded, divided by its leading coefficient; a monomial becomes the product
// of its variables. Same zero set as e.
Expression normalize_constraint(const Expression& e);

// Throws std::invalid_argument naming the first variable outside `allowed`.
void require_vars(const Expression& e, const VarList& allowed, const std::string& what);

}  // namespace ihj
