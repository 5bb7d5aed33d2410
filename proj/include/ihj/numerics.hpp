#pragma once

#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ihj/expr.hpp"

namespace ihj {

struct Tolerances {
    double crit = 1e-9;
    double rank = 1e-8;
    double residual = 1e-9;
    double fd_step = 1e-5;
};

constexpr unsigned long long kDefaultSeed = 20240611ULL;

struct RankInfo {
    int rank = 0;
    Eigen::VectorXd singular_values;
    double threshold = 0.0;
};

// Singular values above tol_rank * sigma_max count toward the rank.
RankInfo numerical_rank(const Eigen::MatrixXd& a, double tol_rank = 1e-8);

// Orthonormal basis of ker(a), one vector per column.
Eigen::MatrixXd nullspace(const Eigen::MatrixXd& a, double tol_rank = 1e-8);

// Residual vector and Jacobian of a stack of expressions over `unknowns`.
struct ExprSystem {
    std::vector<Expression> f;
    VarList unknowns;

    Eigen::VectorXd residual(const Point& x) const;
    Eigen::MatrixXd jacobian(const Point& x) const;
};

struct NewtonOptions {
    int max_iter = 60;
    int max_halvings = 20;
    double tol = 1e-12;
};

struct NewtonResult {
    bool converged = false;
    Point x;
    double residual = 0.0;
    int iterations = 0;
};

// Damped Gauss-Newton with minimum-norm steps; handles square, under- and
// over-determined systems. Variables outside sys.unknowns stay fixed.
NewtonResult damped_newton(const ExprSystem& sys, Point x0, const NewtonOptions& opt = {});

// Halton point in [lo, hi]^d, index >= 1.
Eigen::VectorXd halton(int index, int dim, double lo, double hi);

class Sampler {
public:
    explicit Sampler(unsigned long long seed) : rng_(seed) {}
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng_);
    }
    Point point(const VarList& vars, double lo, double hi);
    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

double max_abs(const Eigen::VectorXd& v);

}  // namespace ihj
