#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ihj/expr.hpp"
#include "ihj/morse.hpp"
#include "ihj/numerics.hpp"

namespace ihj {

// gamma = gamma_i(q) dq^i.
struct OneFormSpec {
    std::vector<Expression> gamma;

    int n() const { return static_cast<int>(gamma.size()); }
};

// W over q (exact case) or over (q, mu) (Morse-family case).
struct CharacteristicFunction {
    Expression W;
    VarList mu;

    int fiber_dim() const { return static_cast<int>(mu.size()); }
};

// sigma(q, p) = (q, p; up^i, down_i).
struct SectionSigma {
    std::vector<Expression> up;
    std::vector<Expression> down;
};

// W over (qb, q); optional constraints U^a(qb, q) with multipliers nu1..nul.
struct CompleteSolutionSpec {
    Expression W;
    std::vector<Expression> U;
};

struct CheckResult {
    std::string name;
    bool pass = false;
    double max_residual = 0.0;
    int worst = -1;
};

struct SampleDiagnostics {
    double tangency = 0.0;
    double dF = 0.0;
    double critical = 0.0;
    bool feasible = true;
};

struct DiagnosticsReport {
    std::vector<CheckResult> checks;
    std::vector<SampleDiagnostics> per_sample;
    std::vector<std::string> notes;
    int samples = 0;
    int infeasible = 0;
    double value = 0.0;  // constant value of F where applicable

    bool pass() const;
    const CheckResult* find(const std::string& name) const;
};

// gamma_i(q) as a point over p1..pn.
Point apply_oneform(const OneFormSpec& g, const Point& q, const PhaseSpaceDescriptor& s);

double closedness_residual(const OneFormSpec& g, const std::vector<Point>& samples);

// Gradient of q -> H(q, gamma(q)) at each sample.
std::vector<Eigen::VectorXd> classical_hj_residual(const Expression& H, const OneFormSpec& g,
                                                   const std::vector<Point>& samples);

// Checks "tangency", "dF", "critical" and "agreement" at samples of (q, lam).
// Throws std::invalid_argument if a sample is off the critical set at p = gamma(q).
DiagnosticsReport gamma_relatedness_residual(const MorseFamilySpec& mf, const OneFormSpec& g,
                                             const std::vector<Point>& samples, double tol = 1e-9);

// Samples of (q, lam) over every fiber root found at p = gamma(q) for each q.
// Points where the fiber is empty are returned in `infeasible`.
struct FiberSamples {
    std::vector<Point> points;
    std::vector<Point> infeasible;
};
FiberSamples fiber_samples(const MorseFamilySpec& mf, const OneFormSpec& g,
                           const std::vector<Point>& q_samples, const FiberOptions& opt = {});

// F(q, dW/dq, lam) on the critical set must be constant over the samples of q.
DiagnosticsReport ihj_residual(const MorseFamilySpec& mf, const CharacteristicFunction& w,
                               const std::vector<Point>& samples, double tol = 1e-9);

// Samples of (q, mu, lam) with dW/dmu = 0 and dF/dlam = 0 at p = dW/dq.
DiagnosticsReport generalized_relatedness(const MorseFamilySpec& mf, const CharacteristicFunction& w,
                                          const std::vector<Point>& samples, double tol = 1e-9);

// max |up^i(q, gamma) d(gamma_j)/dq^i - down_j(q, gamma)| over samples of q.
double sigma_relatedness_residual(const SectionSigma& s, const OneFormSpec& g,
                                  const std::vector<Point>& samples);

// max over samples of (q, p) of the residual of E at (q, p, sigma(q, p)); the
// multipliers of E, if any, are fitted by Newton at each sample.
double sigma_in_E_residual(const SectionSigma& s, const ImplicitSystem& E,
                           const std::vector<Point>& samples);

struct SearchOptions {
    int degree = 0;
    double lo = -1.5;
    double hi = 1.5;
    double tol = 1e-9;
    int collocation = 8;
    int starts = 6;
    int verify_samples = 12;
    unsigned long long seed = kDefaultSeed;
};

struct OneFormCandidate {
    OneFormSpec gamma;                   // representative
    std::vector<OneFormSpec> directions;  // gamma + sum t_k directions_k stays a solution
    std::vector<Expression> locus;       // base constraints in q, empty if global
    double residual = 0.0;               // collocation residual
    double verify_residual = 0.0;        // fresh-sample gamma-relatedness residual
};

struct SearchResult {
    std::vector<OneFormCandidate> candidates;
    double best_residual = 0.0;
    std::vector<std::vector<Expression>> loci_tried;
};

// Closed polynomial one-forms of degree <= d making the family gamma-related.
SearchResult search_oneform(const MorseFamilySpec& mf, const SearchOptions& opt = {});

struct VerifyResult {
    bool global = false;
    DiagnosticsReport global_report;
    std::vector<Expression> locus;  // base locus on which gamma passes, empty if none
    DiagnosticsReport locus_report;
    std::vector<std::vector<Expression>> loci_tried;
};

// Gamma relatedness of a given one-form over the sampling box; on failure the
// fiber-free residual rows suggest base loci, which are tried in turn.
VerifyResult verify_oneform(const MorseFamilySpec& mf, const OneFormSpec& g, const SearchOptions& opt = {});

// Closed polynomial one-form basis: d(m)/max exponent for monomials m of degree 1..d+1.
std::vector<OneFormSpec> closed_polynomial_basis(int n, int degree);

// Checks "morse" (mixed Hessian), "leaf" (F constant per qb), "constrained"
// when U is present, "pullback" (d Fbar/d pb = 0) and "symplectic" at pairs of
// samples of qb and q. Throws std::invalid_argument for rectangular W.
DiagnosticsReport complete_solution_check(const CompleteSolutionSpec& cs, const MorseFamilySpec& mf,
                                          const std::vector<Point>& qb_samples,
                                          const std::vector<Point>& q_samples, double tol = 1e-9);

// (qb, pb) -> (q, p) with pb = -dW/dqb and p = dW/dq; Newton in q from q0.
struct PhiResult {
    bool ok = false;
    Eigen::VectorXd q;
    Eigen::VectorXd p;
};
PhiResult complete_solution_map(const Expression& W, int n, const Eigen::VectorXd& qb,
                                const Eigen::VectorXd& pb, const Eigen::VectorXd& q0);

}  // namespace ihj
