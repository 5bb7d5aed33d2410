#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ihj/expr.hpp"
#include "ihj/geometry.hpp"
#include "ihj/numerics.hpp"

namespace ihj {

enum class MorseBase { Cotangent, Configuration };

// F on a bundle over T*Q (base (q, p)) or over Q (base q) with fiber variables.
struct MorseFamilySpec {
    PhaseSpaceDescriptor space{1};
    Expression F;
    VarList fiber;  // lam1..lamk unless stated otherwise
    MorseBase base = MorseBase::Cotangent;

    int k() const { return static_cast<int>(fiber.size()); }
    VarList base_vars() const;
    VarList total_vars() const;  // base followed by fiber
};

MorseFamilySpec make_family(int n, const Expression& F, int k,
                            MorseBase base = MorseBase::Cotangent);

// A submanifold given by constraints over `coords`, possibly with auxiliary
// multipliers that are eliminated (projected out) rather than fixed.
struct ImplicitSystem {
    VarList coords;
    VarList multipliers;
    std::vector<Expression> constraints;
    std::string label;
};

Eigen::VectorXd critical_residual(const MorseFamilySpec& mf, const Point& x);

struct MorseRank {
    int rank = 0;
    int required = 0;
    int base_dim = 0;
    bool maximal = false;
    Eigen::VectorXd singular_values;
};

// Rank of the k x (base + k) matrix [d2F/dlam dbase | d2F/dlam dlam]; maximal
// means rank k, i.e. dF/dlam is a submersion there. Throws std::domain_error
// if x is off the critical set.
MorseRank morse_rank_check(const MorseFamilySpec& mf, const Point& x, double tol_rank = 1e-8,
                           double tol_crit = 1e-9);

// For a cotangent base: qd - dF/dp, pd + dF/dq, dF/dlam. For a configuration
// base: p - dF/dq, dF/dlam on T*Q. Identically zero rows are dropped.
ImplicitSystem generate_E(const MorseFamilySpec& mf);

struct FiberOptions {
    double tol = 1e-9;
    int max_iter = 50;
    int grid_per_dim = 3;
    double grid_radius = 2.0;
};

struct FiberRoot {
    Eigen::VectorXd lam;
    bool non_isolated = false;
};

struct FiberSolution {
    std::vector<FiberRoot> roots;
    int starts = 0;
    int failed_starts = 0;
};

// Roots of dF/dlam = 0 over a fixed base point; lam0 is tried first, then a grid.
FiberSolution solve_fiber(const MorseFamilySpec& mf, const Point& base, const Eigen::VectorXd& lam0,
                          const FiberOptions& opt = {});

struct ClosureReport {
    int constraint_count = 0;
    int effective_count = 0;
    int required = 0;
    bool count_ok = false;
    int points = 0;
    double max_violation = 0.0;
    int worst_a = -1;
    int worst_b = -1;
    bool pass = false;
};

// Pairwise Tulczyjew brackets of the constraints at sample points. Multipliers
// are eliminated through the left kernel of the multiplier Jacobian. Throws
// std::invalid_argument if a point violates the constraints by more than tol.
ClosureReport lagrangian_closure_check(const PhaseSpaceDescriptor& s, const ImplicitSystem& sys,
                                       const std::vector<Point>& points, double tol = 1e-9);

MorseFamilySpec dirac_family(int n, const Expression& H, const std::vector<Expression>& phi);

// Points of the critical set, by Newton projection of random points of the total space.
std::vector<Point> sample_critical_set(const MorseFamilySpec& mf, Sampler& rng, int count,
                                       double lo = -2.0, double hi = 2.0, double tol = 1e-12);

// Image of a critical point in TT*Q (cotangent base) or T*Q (configuration base);
// fiber values are kept in the returned point.
Point lift_to_E(const MorseFamilySpec& mf, const Point& crit);

double max_constraint_residual(const std::vector<Expression>& f, const Point& x);

}  // namespace ihj
