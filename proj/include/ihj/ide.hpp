#pragma once

#include <string>
#include <vector>

#include "ihj/expr.hpp"
#include "ihj/numerics.hpp"

namespace ihj {

// x1 -> xd1, q -> qd: the velocity partner of a state variable.
std::string velocity_name(const std::string& state);
VarList velocity_names(const VarList& state);

// Implicit differential equation on TM whose velocity relations are affine:
// base constraints f(x) = 0 and rows c0(x) + sum_j c_j(x) xd_j = 0.
struct AffineIDE {
    VarList state;
    VarList velocity;
    std::vector<Expression> base;
    std::vector<Expression> rows;

    std::vector<Expression> all() const;
};

// Splits constraints into base and velocity rows; throws std::invalid_argument
// if a row is not affine in the velocities at random probes.
AffineIDE make_affine_ide(const VarList& state, const std::vector<Expression>& constraints,
                          unsigned long long seed = kDefaultSeed);

struct Projection {
    std::vector<Expression> constraints;  // base constraints followed by new ones
    std::vector<Expression> added;
    int pivot_rank = 0;
    bool stratified = false;
    bool contradictory = false;
};

// Eliminates velocities by fraction-free row reduction, choosing pivots that
// do not vanish on `samples` (points of the base zero set).
Projection project_to_base(const AffineIDE& e, const std::vector<Point>& samples, double tol = 1e-9);

// g = 0 together with grad g . xd = 0 for every g.
std::vector<Expression> tangent_constraints(const std::vector<Expression>& c, const VarList& state);

struct SamplingOptions {
    int count = 200;
    double lo = -2.0;
    double hi = 2.0;
    double newton_tol = 1e-12;
};

// Points of {f = 0} by Newton projection of a Halton cloud in [lo, hi]^d.
std::vector<Point> sample_zero_set(const std::vector<Expression>& f, const VarList& vars,
                                   const SamplingOptions& opt = {});

// max |g| <= tol * (1 + scale) over the samples, scale = max |grad g|.
bool vanishes_on(const Expression& g, const std::vector<Point>& samples, const VarList& vars,
                 double tol = 1e-9);

struct IterationRecord {
    std::vector<Expression> E;
    std::vector<Expression> C;
    int dim_E = 0;
    int dim_C = 0;
    int samples = 0;
    bool stratified = false;
};

struct AlgorithmTrace {
    std::vector<IterationRecord> iterations;
    int stabilized_at = -1;
    bool empty = false;
    bool stratified = false;
    AffineIDE final_system;
};

struct IntegrabilityOptions {
    int max_iter = 10;
    double tol = 1e-9;
    SamplingOptions sampling;
};

AlgorithmTrace run_integrability(const AffineIDE& e, const IntegrabilityOptions& opt = {});

enum class PointStatus { Integrable, NonIntegrable, Indeterminate };
const char* to_string(PointStatus s);

struct PointwiseResult {
    PointStatus status = PointStatus::Integrable;
    double tangency_residual = 0.0;
    int velocity_rank = 0;
};

struct PointwiseReport {
    std::vector<PointwiseResult> points;
    int flagged = 0;
    int indeterminate = 0;
};

// Tests E subset T(tau(E)) at each sample of E: where the velocity Jacobian
// drops rank, the left-kernel combinations of the state Jacobian are the local
// base constraints and the velocity must be tangent to them.
PointwiseReport pointwise_integrability(const VarList& state, const std::vector<Expression>& E,
                                        const std::vector<Point>& samples, double tol_rank = 1e-8,
                                        double tol = 1e-9);

// Points of E where the velocity Jacobian drops rank: E = 0 together with
// sum_i c_i dE_i/dxd = 0 and |c|^2 = 1, solved from a Halton cloud.
std::vector<Point> rank_drop_samples(const VarList& state, const std::vector<Expression>& E,
                                     const SamplingOptions& opt = {});

}  // namespace ihj
