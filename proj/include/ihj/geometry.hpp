#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ihj/expr.hpp"

namespace ihj {

// Coordinate tables of Q and its iterated bundles.
class PhaseSpaceDescriptor {
public:
    explicit PhaseSpaceDescriptor(int n);

    int n() const { return n_; }
    const VarList& q() const { return q_; }
    const VarList& p() const { return p_; }
    const VarList& qd() const { return qd_; }
    const VarList& pd() const { return pd_; }

    VarList cotangent() const;        // (q, p)
    VarList tangent() const;          // (q, qd)
    VarList tulczyjew() const;        // (q, p, qd, pd) on TT*Q
    VarList double_cotangent() const; // (q, p, alpha, beta) on T*T*Q
    VarList cotangent_tangent() const; // (q, qd, a, b) on T*TQ

private:
    int n_;
    VarList q_, p_, qd_, pd_, alpha_, beta_, a_, b_;
};

VarList numbered(const std::string& stem, int count);

// Linear coordinate change y[k] = sign[k] * x[source[k]].
struct SignedPermutation {
    std::vector<int> source;
    std::vector<double> sign;

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    SignedPermutation inverse() const;
    Eigen::MatrixXd matrix() const;
};

SignedPermutation beta_permutation(int n);
SignedPermutation alpha_permutation(int n);

// (q, p, qd, pd) -> (q, p, alpha = -pd, beta = qd)
Point beta_map(const PhaseSpaceDescriptor& s, const Point& v);
Point beta_map_inverse(const PhaseSpaceDescriptor& s, const Point& w);
// (q, p, qd, pd) -> (q, qd, a = pd, b = p)
Point alpha_map(const PhaseSpaceDescriptor& s, const Point& v);
Point alpha_map_inverse(const PhaseSpaceDescriptor& s, const Point& w);

Eigen::VectorXd to_vector(const Point& x, const VarList& order);
Point to_point(const Eigen::VectorXd& v, const VarList& order);

// Tangent vector components are in (q, p, qd, pd) order.
struct TangentVectorAtPoint {
    Point base;
    Eigen::VectorXd components;
};

// sum_i u_pd w_q - w_pd u_q + u_p w_qd - w_p u_qd
double omega_T_pair(const PhaseSpaceDescriptor& s, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& w);
// dq^dalpha + dp^dbeta on (q, p, alpha, beta) components.
double omega_double_cotangent_pair(const PhaseSpaceDescriptor& s, const Eigen::VectorXd& u,
                                   const Eigen::VectorXd& w);
// dq^da + dqd^db on (q, qd, a, b) components.
double omega_cotangent_tangent_pair(const PhaseSpaceDescriptor& s, const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& w);

// Coefficient rows of theta1 = pd dq - qd dp and theta2 = pd dq + p dqd at a base point.
Eigen::VectorXd theta1_coefficients(const PhaseSpaceDescriptor& s, const Point& base);
Eigen::VectorXd theta2_coefficients(const PhaseSpaceDescriptor& s, const Point& base);
std::pair<double, double> theta_forms(const PhaseSpaceDescriptor& s, const TangentVectorAtPoint& v);

// Exterior derivative of a one-form given by its coefficient function,
// evaluated on (u, w) with central differences.
double fd_exterior_derivative(
    const PhaseSpaceDescriptor& s,
    const std::function<Eigen::VectorXd(const PhaseSpaceDescriptor&, const Point&)>& coeffs,
    const Point& base, const Eigen::VectorXd& u, const Eigen::VectorXd& w, double h = 1e-5);

// Tulczyjew bracket on TT*Q.
double poisson_bracket(const PhaseSpaceDescriptor& s, const Expression& f, const Expression& g,
                       const Point& x);
Expression poisson_bracket_expr(const PhaseSpaceDescriptor& s, const Expression& f,
                                const Expression& g);

}  // namespace ihj
