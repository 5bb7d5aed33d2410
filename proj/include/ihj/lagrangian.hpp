#pragma once

#include <string>
#include <vector>

#include "ihj/expr.hpp"
#include "ihj/hj.hpp"
#include "ihj/ide.hpp"
#include "ihj/morse.hpp"

namespace ihj {

// L over (q1..qn, qd1..qdn).
struct LagrangianSystem {
    int n = 1;
    Expression L;
};

LagrangianSystem make_lagrangian(int n, const Expression& L);

struct HessianAnalysis {
    std::vector<int> ranks;
    bool regular = false;
};

// Rank of d2L/dqd dqd at each sample of (q, qd).
HessianAnalysis hessian_analysis(const LagrangianSystem& ls, const std::vector<Point>& samples,
                                 double tol_rank = 1e-8);

// (q, qd) -> (q, dL/dqd).
Point legendre_map(const LagrangianSystem& ls, const Point& x);

// qd . dL/dqd - L.
Expression energy(const LagrangianSystem& ls);

// F(q, p, qd) = p . qd - L with fiber qd over T*Q.
MorseFamilySpec pontryagin_family(const LagrangianSystem& ls);

// {p = dL/dqd, pd = dL/dq} over (q, p, qd, pd).
std::vector<Expression> euler_lagrange_constraints(const LagrangianSystem& ls);

// Blocks "dynamics" (qd^i dgamma_i/dq^j - dL/dq^j) and "momentum"
// (gamma_i - dL/dqd^i) at samples of (q, qd).
DiagnosticsReport lagrangian_hj_residual(const LagrangianSystem& ls, const OneFormSpec& g,
                                         const std::vector<Point>& samples, double tol = 1e-9);

// Canonical bracket on T*Q: sum df/dq dg/dp - df/dp dg/dq.
Expression canonical_bracket(const PhaseSpaceDescriptor& s, const Expression& f, const Expression& g);

struct PresymplecticLevel {
    int level = 1;
    std::vector<Expression> constraints;  // all constraints of M_level
    int samples = 0;
    double solvability_residual = 0.0;    // pointwise test of i_X omega_1 = dh_1
};

struct GotayNesterOptions {
    int max_iter = 10;
    double tol = 1e-9;
    SamplingOptions sampling{60, -2.0, 2.0, 1e-12};
};

struct GotayNesterResult {
    bool affine = true;        // dL/dqd affine in qd; otherwise pointwise scope only
    bool regular = false;
    std::vector<Expression> primary;
    std::vector<Expression> secondary;
    Expression h1;             // an extension of h_1 to T*Q
    bool h1_well_defined = true;
    double h1_fiber_residual = 0.0;
    std::vector<PresymplecticLevel> levels;
    int stabilized_at = -1;    // level index of M_f
    bool empty = false;
    bool stratified = false;
    std::vector<std::string> notes;

    std::vector<Expression> final_constraints() const;
};

GotayNesterResult gotay_nester(const LagrangianSystem& ls, const GotayNesterOptions& opt = {});

// Max over samples of (q, p) on M_level of the least-squares residual of
// omega(X, Y) = dh_1(Y) for Y in T M_1 and X in T M_level; dh_1 is obtained by
// lifting Y through the Legendre map and differentiating the energy.
double pointwise_solvability(const LagrangianSystem& ls, const std::vector<Expression>& primary,
                             const std::vector<Expression>& level, const std::vector<Point>& samples);

}  // namespace ihj
