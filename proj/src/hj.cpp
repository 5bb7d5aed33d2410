#include "ihj/hj.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>

namespace ihj {

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

const std::string& at(const VarList& v, int i) { return v[static_cast<size_t>(i)]; }

CheckResult make_check(const std::string& name, const std::vector<double>& values, double tol) {
    CheckResult c;
    c.name = name;
    for (size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] <= c.max_residual)) {
            c.max_residual = values[i];
            c.worst = static_cast<int>(i);
        }
    }
    c.pass = c.max_residual <= tol;
    return c;
}

// Each condition is classified pass (<= tol), fail (> 10 tol) or borderline;
// a sample disagrees only if one passes while the other fails.
CheckResult agreement_check(const std::vector<SampleDiagnostics>& per, double tol) {
    std::vector<double> bad;
    for (const auto& s : per) {
        const bool t_pass = s.tangency <= tol, t_fail = s.tangency > 10 * tol;
        const bool d_pass = s.dF <= tol, d_fail = s.dF > 10 * tol;
        bad.push_back((t_pass && d_fail) || (d_pass && t_fail) ? 1.0 : 0.0);
    }
    CheckResult c = make_check("agreement", bad, 0.0);
    c.max_residual = 0.0;
    for (double b : bad) c.max_residual += b;
    return c;
}

// Substitutes p_j -> expressions.
Expression compose_momenta(const MorseFamilySpec& mf, const std::vector<Expression>& p) {
    std::map<std::string, Expression> repl;
    for (int j = 0; j < mf.space.n(); ++j) repl.emplace(at(mf.space.p(), j), p[static_cast<size_t>(j)]);
    return substitute(mf.F, repl);
}

std::vector<Expression> gradient_exprs(const Expression& W, const VarList& vars) {
    std::vector<Expression> out;
    for (const auto& v : vars) out.push_back(diff(W, v));
    return out;
}

// Random points of {f = 0} in [lo, hi]^d by Newton projection.
std::vector<Point> project_points(const std::vector<Expression>& f, const VarList& vars, Sampler& rng,
                                  int count, double lo, double hi) {
    std::vector<Point> out;
    ExprSystem sys{f, vars};
    for (int attempt = 0; static_cast<int>(out.size()) < count && attempt < 20 * count; ++attempt) {
        Point x = rng.point(vars, lo, hi);
        if (f.empty()) {
            out.push_back(x);
            continue;
        }
        NewtonResult r = damped_newton(sys, x);
        if (!r.converged) continue;
        bool inside = true;
        for (const auto& v : vars) inside = inside && r.x.at(v) >= lo && r.x.at(v) <= hi;
        if (inside) out.push_back(r.x);
    }
    return out;
}

double snap(double v) {
    if (std::abs(v) < 1e-10) return 0.0;
    const double r = std::round(v);
    if (std::abs(v - r) < 1e-10) return r;
    return v;
}

}  // namespace

bool DiagnosticsReport::pass() const {
    if (checks.empty()) return false;
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

const CheckResult* DiagnosticsReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

Point apply_oneform(const OneFormSpec& g, const Point& q, const PhaseSpaceDescriptor& s) {
    Point x = q;
    for (int j = 0; j < s.n(); ++j) x[at(s.p(), j)] = eval(g.gamma[static_cast<size_t>(j)], q);
    return x;
}

double closedness_residual(const OneFormSpec& g, const std::vector<Point>& samples) {
    const int n = g.n();
    const VarList q = numbered("q", n);
    double worst = 0.0;
    for (const auto& x : samples) {
        Eigen::MatrixXd J(n, n);
        for (int j = 0; j < n; ++j) J.row(j) = eval_grad(g.gamma[static_cast<size_t>(j)], x, q).transpose();
        worst = std::max(worst, (J - J.transpose()).cwiseAbs().maxCoeff());
    }
    return worst;
}

std::vector<Eigen::VectorXd> classical_hj_residual(const Expression& H, const OneFormSpec& g,
                                                   const std::vector<Point>& samples) {
    const int n = g.n();
    const PhaseSpaceDescriptor s(n);
    std::map<std::string, Expression> repl;
    for (int j = 0; j < n; ++j) repl.emplace(at(s.p(), j), g.gamma[static_cast<size_t>(j)]);
    const Expression composite = substitute(H, repl);
    std::vector<Eigen::VectorXd> out;
    for (const auto& x : samples) out.push_back(eval_grad(composite, x, s.q()));
    return out;
}

DiagnosticsReport gamma_relatedness_residual(const MorseFamilySpec& mf, const OneFormSpec& g,
                                             const std::vector<Point>& samples, double tol) {
    const int n = mf.space.n();
    if (g.n() != n) throw std::invalid_argument("one-form dimension does not match the family");
    DiagnosticsReport rep;
    const Expression composite = compose_momenta(mf, g.gamma);
    const VarList& q = mf.space.q();
    const VarList& p = mf.space.p();
    for (size_t s = 0; s < samples.size(); ++s) {
        const Point x = apply_oneform(g, samples[s], mf.space);
        SampleDiagnostics d;
        d.critical = mf.k() ? max_abs(critical_residual(mf, x)) : 0.0;
        if (d.critical > tol)
            throw std::invalid_argument("sample " + std::to_string(s) +
                                        " is off the critical set (residual " + fmt("%.3e", d.critical) + ")");
        const Eigen::VectorXd Fq = eval_grad(mf.F, x, q), Fp = eval_grad(mf.F, x, p);
        Eigen::MatrixXd J(n, n);  // J(j, i) = d gamma_j / d q^i
        for (int j = 0; j < n; ++j) J.row(j) = eval_grad(g.gamma[static_cast<size_t>(j)], x, q).transpose();
        d.tangency = max_abs(J * Fp + Fq);
        d.dF = std::max(max_abs(eval_grad(composite, x, q)), d.critical);
        rep.per_sample.push_back(d);
    }
    rep.samples = static_cast<int>(samples.size());
    std::vector<double> t, f, c;
    for (const auto& d : rep.per_sample) {
        t.push_back(d.tangency);
        f.push_back(d.dF);
        c.push_back(d.critical);
    }
    rep.checks.push_back(make_check("tangency", t, tol));
    rep.checks.push_back(make_check("dF", f, tol));
    rep.checks.push_back(make_check("critical", c, tol));
    rep.checks.push_back(agreement_check(rep.per_sample, tol));
    const double closed = closedness_residual(g, samples);
    if (closed > tol) rep.notes.push_back("one-form is not closed (residual " + fmt("%.3e", closed) + ")");
    return rep;
}

FiberSamples fiber_samples(const MorseFamilySpec& mf, const OneFormSpec& g,
                           const std::vector<Point>& q_samples, const FiberOptions& opt) {
    FiberSamples out;
    for (const auto& q : q_samples) {
        const Point base = apply_oneform(g, q, mf.space);
        const FiberSolution sol = solve_fiber(mf, base, Eigen::VectorXd::Zero(mf.k()), opt);
        if (sol.roots.empty()) {
            out.infeasible.push_back(q);
            continue;
        }
        for (const auto& root : sol.roots) {
            Point x = q;
            for (int a = 0; a < mf.k(); ++a) x[at(mf.fiber, a)] = root.lam[a];
            out.points.push_back(x);
        }
    }
    return out;
}

DiagnosticsReport ihj_residual(const MorseFamilySpec& mf, const CharacteristicFunction& w,
                               const std::vector<Point>& samples, double tol) {
    if (w.fiber_dim() != 0) throw std::invalid_argument("ihj_residual needs W over q only");
    require_vars(w.W, mf.space.q(), "characteristic function");
    OneFormSpec g{gradient_exprs(w.W, mf.space.q())};
    DiagnosticsReport rep;
    rep.samples = static_cast<int>(samples.size());
    std::vector<double> values, crit, infeasible;
    for (const auto& q : samples) {
        const Point base = apply_oneform(g, q, mf.space);
        const FiberSolution sol = solve_fiber(mf, base, Eigen::VectorXd::Zero(mf.k()));
        SampleDiagnostics d;
        d.feasible = !sol.roots.empty();
        infeasible.push_back(d.feasible ? 0.0 : 1.0);
        for (const auto& root : sol.roots) {
            Point x = base;
            for (int a = 0; a < mf.k(); ++a) x[at(mf.fiber, a)] = root.lam[a];
            values.push_back(eval(mf.F, x));
            if (mf.k()) d.critical = std::max(d.critical, max_abs(critical_residual(mf, x)));
        }
        crit.push_back(d.critical);
        rep.per_sample.push_back(d);
        if (!d.feasible) ++rep.infeasible;
    }
    double lo = INFINITY, hi = -INFINITY;
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CheckResult spread;
    spread.name = "constant";
    spread.max_residual = values.empty() ? INFINITY : hi - lo;
    spread.pass = !values.empty() && spread.max_residual < tol;
    rep.value = values.empty() ? 0.0 : values.front();
    rep.checks.push_back(spread);
    rep.checks.push_back(make_check("fiber", crit, tol));
    CheckResult feas = make_check("feasible", infeasible, 0.0);
    feas.max_residual = rep.infeasible;
    rep.checks.push_back(feas);

    if (mf.k() > 0) {
        // Free-multiplier reading: F(q, dW/dq, lam) constant in q for each fixed lam.
        double worst = 0.0;
        for (double lv : {-1.0, 0.5, 1.0}) {
            double flo = INFINITY, fhi = -INFINITY;
            for (const auto& q : samples) {
                Point x = apply_oneform(g, q, mf.space);
                for (const auto& l : mf.fiber) x[l] = lv;
                const double v = eval(mf.F, x);
                flo = std::min(flo, v);
                fhi = std::max(fhi, v);
            }
            if (!samples.empty()) worst = std::max(worst, fhi - flo);
        }
        rep.notes.push_back("free-multiplier spread " + fmt("%.3e", worst));
    }
    return rep;
}

DiagnosticsReport generalized_relatedness(const MorseFamilySpec& mf, const CharacteristicFunction& w,
                                          const std::vector<Point>& samples, double tol) {
    const int n = mf.space.n();
    const VarList& q = mf.space.q();
    const VarList& p = mf.space.p();
    VarList wvars = q;
    wvars.insert(wvars.end(), w.mu.begin(), w.mu.end());
    require_vars(w.W, wvars, "characteristic function");
    const std::vector<Expression> dWdq = gradient_exprs(w.W, q);
    const std::vector<Expression> dWdmu = gradient_exprs(w.W, w.mu);
    const Expression composite = compose_momenta(mf, dWdq);
    DiagnosticsReport rep;
    rep.samples = static_cast<int>(samples.size());
    for (size_t s = 0; s < samples.size(); ++s) {
        Point x = samples[s];
        for (int j = 0; j < n; ++j) x[at(p, j)] = eval(dWdq[static_cast<size_t>(j)], x);
        double mu_res = 0.0;
        for (const auto& e : dWdmu) mu_res = std::max(mu_res, std::abs(eval(e, x)));
        SampleDiagnostics d;
        d.critical = std::max(mf.k() ? max_abs(critical_residual(mf, x)) : 0.0, mu_res);
        if (d.critical > tol)
            throw std::invalid_argument("sample " + std::to_string(s) +
                                        " is off the critical set (residual " + fmt("%.3e", d.critical) + ")");
        const Eigen::MatrixXd Wqq = eval_jet2(w.W, x, q).hess_matrix();
        const Eigen::VectorXd Fq = eval_grad(mf.F, x, q), Fp = eval_grad(mf.F, x, p);
        d.tangency = max_abs(Wqq * Fp + Fq);
        d.dF = std::max(max_abs(eval_grad(composite, x, q)), d.critical);
        rep.per_sample.push_back(d);
    }
    std::vector<double> t, f, c;
    for (const auto& d : rep.per_sample) {
        t.push_back(d.tangency);
        f.push_back(d.dF);
        c.push_back(d.critical);
    }
    rep.checks.push_back(make_check("tangency", t, tol));
    rep.checks.push_back(make_check("dF", f, tol));
    rep.checks.push_back(make_check("critical", c, tol));
    rep.checks.push_back(agreement_check(rep.per_sample, tol));
    return rep;
}

double sigma_relatedness_residual(const SectionSigma& s, const OneFormSpec& g,
                                  const std::vector<Point>& samples) {
    const int n = g.n();
    const PhaseSpaceDescriptor space(n);
    double worst = 0.0;
    for (const auto& q : samples) {
        const Point x = apply_oneform(g, q, space);
        Eigen::VectorXd up(n), down(n);
        for (int i = 0; i < n; ++i) {
            up[i] = eval(s.up[static_cast<size_t>(i)], x);
            down[i] = eval(s.down[static_cast<size_t>(i)], x);
        }
        for (int j = 0; j < n; ++j) {
            const Eigen::VectorXd dg = eval_grad(g.gamma[static_cast<size_t>(j)], x, space.q());
            worst = std::max(worst, std::abs(up.dot(dg) - down[j]));
        }
    }
    return worst;
}

double sigma_in_E_residual(const SectionSigma& s, const ImplicitSystem& E,
                           const std::vector<Point>& samples) {
    const int n = static_cast<int>(s.up.size());
    const PhaseSpaceDescriptor space(n);
    double worst = 0.0;
    for (const auto& base : samples) {
        Point x = base;
        for (int i = 0; i < n; ++i) {
            x[at(space.qd(), i)] = eval(s.up[static_cast<size_t>(i)], base);
            x[at(space.pd(), i)] = eval(s.down[static_cast<size_t>(i)], base);
        }
        if (E.multipliers.empty()) {
            worst = std::max(worst, max_constraint_residual(E.constraints, x));
            continue;
        }
        for (const auto& m : E.multipliers) x[m] = 0.0;
        NewtonResult r = damped_newton(ExprSystem{E.constraints, E.multipliers}, x);
        worst = std::max(worst, r.residual);
    }
    return worst;
}

std::vector<OneFormSpec> closed_polynomial_basis(int n, int degree) {
    const VarList q = numbered("q", n);
    std::vector<OneFormSpec> out;
    // Exponent vectors of total degree t, in graded lexicographic order.
    for (int t = 1; t <= degree + 1; ++t) {
        std::vector<int> e(static_cast<size_t>(n), 0);
        std::vector<std::vector<int>> all;
        std::function<void(int, int)> rec = [&](int i, int left) {
            if (i == n - 1) {
                e[static_cast<size_t>(i)] = left;
                all.push_back(e);
                return;
            }
            for (int v = left; v >= 0; --v) {
                e[static_cast<size_t>(i)] = v;
                rec(i + 1, left - v);
            }
        };
        rec(0, t);
        for (const auto& ex : all) {
            Expression m(1.0);
            int top = 0;
            for (int i = 0; i < n; ++i) {
                const int k = ex[static_cast<size_t>(i)];
                if (k > 0) m = m * pow(var(at(q, i)), k);
                top = std::max(top, k);
            }
            OneFormSpec g;
            for (int i = 0; i < n; ++i) g.gamma.push_back(diff(m, at(q, i)) / Expression(static_cast<double>(top)));
            out.push_back(g);
        }
    }
    return out;
}

namespace {

OneFormSpec combine(const std::vector<OneFormSpec>& basis, const Eigen::VectorXd& c, int n) {
    OneFormSpec g;
    for (int j = 0; j < n; ++j) {
        Expression e(0.0);
        for (Eigen::Index m = 0; m < c.size(); ++m) {
            const double v = snap(c[m]);
            if (v == 0.0) continue;
            e = e + Expression(v) * basis[static_cast<size_t>(m)].gamma[static_cast<size_t>(j)];
        }
        g.gamma.push_back(e);
    }
    return g;
}

// Variable factors of a monomial c * prod v^k, or empty if e is not a monomial.
bool monomial_factors(const NodePtr& node, std::set<std::string>& vars) {
    switch (node->op) {
        case Op::Num: return true;
        case Op::Var: vars.insert(node->name); return true;
        case Op::Neg: return monomial_factors(node->a, vars);
        case Op::Mul: return monomial_factors(node->a, vars) && monomial_factors(node->b, vars);
        case Op::Pow: return node->exponent > 0 && monomial_factors(node->a, vars);
        default: return false;
    }
}

// Variable factors of monomial rows first, then the remaining rows; rows that
// involve the fiber are skipped.
std::vector<Expression> base_loci(const std::vector<Expression>& rows, const VarList& fiber) {
    std::vector<Expression> loci;
    std::set<std::string> factor_vars;
    for (const auto& row : rows) {
        if (row.is_constant()) continue;
        bool uses_fiber = false;
        for (const auto& l : fiber) uses_fiber = uses_fiber || row.depends_on(l);
        if (uses_fiber) continue;
        std::set<std::string> vars;
        if (monomial_factors(row.root(), vars)) {
            factor_vars.insert(vars.begin(), vars.end());
        } else {
            bool seen = false;
            for (const auto& l : loci) seen = seen || structurally_equal(l, row);
            if (!seen) loci.push_back(row);
        }
    }
    std::vector<Expression> ordered;
    for (const auto& v : factor_vars) ordered.push_back(var(v));
    ordered.insert(ordered.end(), loci.begin(), loci.end());
    return ordered;
}

struct SolveSetup {
    std::vector<Expression> rows;  // residual template over (q, coef, fiber)
    VarList coef;
    std::vector<OneFormSpec> basis;
    Expression G;
};

struct Solved {
    double residual = INFINITY;
    Eigen::VectorXd c;
    Eigen::MatrixXd directions;  // m x f
};

Solved solve_collocation(const MorseFamilySpec& mf, const SolveSetup& su, const std::vector<Point>& pts,
                         Sampler& rng, const SearchOptions& opt) {
    const int m = static_cast<int>(su.coef.size()), k = mf.k();
    ExprSystem sys;
    sys.unknowns = su.coef;
    Point x0;
    for (const auto& c : su.coef) x0[c] = rng.uniform(-1.0, 1.0);
    for (size_t s = 0; s < pts.size(); ++s) {
        // Fiber Hessian at the start decides how many pinned copies are needed.
        Eigen::MatrixXd kernel(k, 0);
        Eigen::VectorXd lam_probe(k);
        Point probe = pts[s];
        for (const auto& [name, v] : x0) probe[name] = v;
        for (int a = 0; a < k; ++a) probe[at(mf.fiber, a)] = lam_probe[a] = rng.uniform(opt.lo, opt.hi);
        if (k > 0) kernel = nullspace(eval_jet2(su.G, probe, mf.fiber).hess_matrix(), 1e-8);
        const int copies = kernel.cols() > 0 ? 2 : 1;
        for (int r = 0; r < copies; ++r) {
            std::map<std::string, Expression> repl;
            for (const auto& qv : mf.space.q()) repl.emplace(qv, Expression(pts[s].at(qv)));
            VarList lam;
            for (int a = 0; a < k; ++a) {
                lam.push_back("lam" + std::to_string(a + 1) + ".s" + std::to_string(s) + ".r" + std::to_string(r));
                repl.emplace(at(mf.fiber, a), var(lam.back()));
                x0[lam.back()] = r == 0 ? lam_probe[a] : rng.uniform(opt.lo, opt.hi);
                sys.unknowns.push_back(lam.back());
            }
            for (const auto& row : su.rows) {
                Expression e = substitute(row, repl);
                if (!e.is_zero()) sys.f.push_back(e);
            }
            for (Eigen::Index v = 0; v < kernel.cols(); ++v) {
                Expression pin(0.0);
                for (int a = 0; a < k; ++a) {
                    const double w = kernel(a, v);
                    if (std::abs(w) < 1e-14) continue;
                    pin = pin + Expression(w) * (var(at(lam, a)) - Expression(x0[at(lam, a)]));
                }
                sys.f.push_back(pin);
            }
        }
    }
    Solved out;
    if (sys.f.empty()) return out;
    NewtonOptions nopt;
    nopt.max_iter = 80;
    NewtonResult r = damped_newton(sys, x0, nopt);
    out.residual = r.residual;
    out.c = to_vector(r.x, su.coef);
    if (!(r.residual < opt.tol)) return out;

    const Eigen::MatrixXd N = nullspace(sys.jacobian(r.x), 1e-8);
    Eigen::MatrixXd Nc = N.topRows(m);
    if (Nc.cols() > 0) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Nc, Eigen::ComputeThinU);
        int f = 0;
        for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()[i] > 1e-6) ++f;
        out.directions = svd.matrixU().leftCols(f);
    } else {
        out.directions = Eigen::MatrixXd(m, 0);
    }
    // Representative: remove the family component when it stays a solution.
    const Eigen::VectorXd proj = out.c - out.directions * (out.directions.transpose() * out.c);
    ExprSystem lam_only{sys.f, VarList(sys.unknowns.begin() + m, sys.unknowns.end())};
    Point y = r.x;
    for (int i = 0; i < m; ++i) y[at(su.coef, i)] = proj[i];
    NewtonResult ry = damped_newton(lam_only, y, nopt);
    if (ry.residual < opt.tol) out.c = proj;
    for (Eigen::Index j = 0; j < out.directions.cols(); ++j) {
        Eigen::Index arg;
        out.directions.col(j).cwiseAbs().maxCoeff(&arg);
        out.directions.col(j) /= out.directions(arg, j);
    }
    return out;
}

double verify_candidate(const MorseFamilySpec& mf, const OneFormSpec& g, const std::vector<Point>& q_fresh) {
    FiberSamples fs = fiber_samples(mf, g, q_fresh);
    if (!fs.infeasible.empty() || fs.points.empty()) return INFINITY;
    try {
        DiagnosticsReport rep = gamma_relatedness_residual(mf, g, fs.points, 1e-8);
        return std::max(rep.find("tangency")->max_residual, rep.find("dF")->max_residual);
    } catch (const std::exception&) {
        return INFINITY;
    }
}

}  // namespace

SearchResult search_oneform(const MorseFamilySpec& mf, const SearchOptions& opt) {
    if (opt.degree < 0 || opt.degree > 2) throw std::invalid_argument("search degree must be 0, 1 or 2");
    const int n = mf.space.n();
    SolveSetup su;
    su.basis = closed_polynomial_basis(n, opt.degree);
    for (size_t i = 0; i < su.basis.size(); ++i) su.coef.push_back("coef" + std::to_string(i + 1));
    std::vector<Expression> gamma;
    for (int j = 0; j < n; ++j) {
        Expression e(0.0);
        for (size_t i = 0; i < su.basis.size(); ++i) e = e + var(su.coef[i]) * su.basis[i].gamma[static_cast<size_t>(j)];
        gamma.push_back(e);
    }
    su.G = compose_momenta(mf, gamma);
    for (const auto& qv : mf.space.q()) su.rows.push_back(diff(su.G, qv));
    for (const auto& l : mf.fiber) su.rows.push_back(diff(su.G, l));

    SearchResult res;
    res.best_residual = INFINITY;
    Sampler rng(opt.seed);

    auto attempt = [&](const std::vector<Expression>& locus) {
        res.loci_tried.push_back(locus);
        const std::vector<Point> colloc = project_points(locus, mf.space.q(), rng, opt.collocation, opt.lo, opt.hi);
        const std::vector<Point> fresh = project_points(locus, mf.space.q(), rng, opt.verify_samples, opt.lo, opt.hi);
        if (static_cast<int>(colloc.size()) < opt.collocation || fresh.empty()) return;
        for (int s = 0; s < opt.starts; ++s) {
            const Solved sol = solve_collocation(mf, su, colloc, rng, opt);
            res.best_residual = std::min(res.best_residual, sol.residual);
            if (!(sol.residual < opt.tol)) continue;
            OneFormCandidate cand;
            cand.gamma = combine(su.basis, sol.c, n);
            for (Eigen::Index j = 0; j < sol.directions.cols(); ++j)
                cand.directions.push_back(combine(su.basis, sol.directions.col(j), n));
            cand.locus = locus;
            cand.residual = sol.residual;
            cand.verify_residual = verify_candidate(mf, cand.gamma, fresh);
            for (Eigen::Index j = 0; j < sol.directions.cols(); ++j)
                cand.verify_residual = std::max(
                    cand.verify_residual,
                    verify_candidate(mf, combine(su.basis, sol.c + sol.directions.col(j), n), fresh));
            if (!(cand.verify_residual < 1e-8)) continue;
            bool dup = false;
            for (const auto& other : res.candidates) {
                if (other.locus.size() != locus.size() || other.directions.size() != cand.directions.size()) continue;
                bool same_locus = true;
                for (size_t i = 0; i < locus.size(); ++i)
                    same_locus = same_locus && structurally_equal(other.locus[i], locus[i]);
                bool same_form = true;
                for (int j = 0; j < n; ++j)
                    same_form = same_form && structurally_equal(other.gamma.gamma[static_cast<size_t>(j)],
                                                                cand.gamma.gamma[static_cast<size_t>(j)]);
                for (size_t d = 0; d < cand.directions.size(); ++d)
                    for (int j = 0; j < n; ++j)
                        same_form = same_form &&
                                    structurally_equal(other.directions[d].gamma[static_cast<size_t>(j)],
                                                       cand.directions[d].gamma[static_cast<size_t>(j)]);
                if (same_locus && same_form) dup = true;
            }
            if (!dup) res.candidates.push_back(std::move(cand));
        }
    };

    attempt({});
    if (!res.candidates.empty() || n < 2) return res;

    // Base loci: zero sets of the coefficient- and multiplier-free parts of the residuals.
    std::map<std::string, Expression> zero_coef;
    for (const auto& c : su.coef) zero_coef.emplace(c, Expression(0.0));
    std::vector<Expression> drifts;
    for (const auto& row : su.rows) drifts.push_back(substitute(row, zero_coef));
    const std::vector<Expression> ordered = base_loci(drifts, mf.fiber);
    for (const auto& l : ordered) attempt({l});
    return res;
}

VerifyResult verify_oneform(const MorseFamilySpec& mf, const OneFormSpec& g, const SearchOptions& opt) {
    if (g.n() != mf.space.n()) throw std::invalid_argument("one-form size does not match the space");
    Sampler rng(opt.seed);
    VerifyResult out;
    auto run = [&](const std::vector<Expression>& locus, DiagnosticsReport& rep) {
        const std::vector<Point> qs = project_points(locus, mf.space.q(), rng, opt.verify_samples, opt.lo, opt.hi);
        FiberSamples fs = fiber_samples(mf, g, qs);
        if (fs.points.empty()) {
            rep = DiagnosticsReport{};
            rep.samples = static_cast<int>(qs.size());
            rep.infeasible = static_cast<int>(fs.infeasible.size());
            rep.checks.push_back({"critical", false, INFINITY, -1});
            return false;
        }
        rep = gamma_relatedness_residual(mf, g, fs.points, opt.tol);
        rep.infeasible = static_cast<int>(fs.infeasible.size());
        return rep.pass() && fs.infeasible.empty();
    };
    out.global = run({}, out.global_report);
    if (out.global) return out;
    const Expression G = compose_momenta(mf, g.gamma);
    std::vector<Expression> rows;
    for (const auto& qv : mf.space.q()) rows.push_back(diff(G, qv));
    for (const auto& l : mf.fiber) rows.push_back(diff(G, l));
    for (const auto& l : base_loci(rows, mf.fiber)) {
        out.loci_tried.push_back({l});
        DiagnosticsReport rep;
        if (run({l}, rep)) {
            out.locus = {l};
            out.locus_report = rep;
            return out;
        }
    }
    return out;
}

PhiResult complete_solution_map(const Expression& W, int n, const Eigen::VectorXd& qb,
                                const Eigen::VectorXd& pb, const Eigen::VectorXd& q0) {
    const VarList qv = numbered("q", n), qbv = numbered("qb", n);
    ExprSystem sys;
    sys.unknowns = qv;
    for (int i = 0; i < n; ++i) sys.f.push_back(diff(W, at(qbv, i)) + Expression(pb[i]));
    Point x;
    for (int i = 0; i < n; ++i) {
        x[at(qbv, i)] = qb[i];
        x[at(qv, i)] = q0[i];
    }
    NewtonOptions nopt;
    nopt.tol = 1e-13;
    NewtonResult r = damped_newton(sys, x, nopt);
    PhiResult out;
    out.ok = r.converged;
    out.q = to_vector(r.x, qv);
    out.p = eval_grad(W, r.x, qv);
    return out;
}

DiagnosticsReport complete_solution_check(const CompleteSolutionSpec& cs, const MorseFamilySpec& mf,
                                          const std::vector<Point>& qb_samples,
                                          const std::vector<Point>& q_samples, double tol) {
    const int n = mf.space.n();
    const VarList& qv = mf.space.q();
    const VarList qbv = numbered("qb", n);
    for (const auto& v : cs.W.free_vars())
        if (v.rfind("qb", 0) == 0 && std::find(qbv.begin(), qbv.end(), v) == qbv.end())
            throw std::invalid_argument("complete solution with dim Qbar != dim Q is not supported");
    for (const auto& x : qb_samples)
        for (const auto& [name, value] : x)
            if (std::find(qbv.begin(), qbv.end(), name) == qbv.end())
                throw std::invalid_argument("complete solution with dim Qbar != dim Q is not supported");
    VarList allowed = qbv;
    allowed.insert(allowed.end(), qv.begin(), qv.end());
    require_vars(cs.W, allowed, "complete solution");
    for (const auto& u : cs.U) require_vars(u, allowed, "complete solution constraint");

    DiagnosticsReport rep;
    rep.samples = static_cast<int>(qb_samples.size() * q_samples.size());
    VarList both = qbv;
    both.insert(both.end(), qv.begin(), qv.end());

    // (a) Mixed Hessian.
    CheckResult morse;
    morse.name = "morse";
    morse.max_residual = INFINITY;
    int idx = 0;
    for (const auto& b : qb_samples) {
        for (const auto& q : q_samples) {
            Point x = b;
            x.insert(q.begin(), q.end());
            const Eigen::MatrixXd H = eval_jet2(cs.W, x, both).hess_matrix().topRightCorner(n, n);
            const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(H).singularValues();
            const double smin = s.size() ? s[s.size() - 1] : 0.0;
            if (smin < morse.max_residual) {
                morse.max_residual = smin;
                morse.worst = idx;
            }
            ++idx;
        }
    }
    morse.pass = morse.max_residual > 1e-8;
    rep.checks.push_back(morse);
    if (!morse.pass) {
        rep.notes.push_back("mixed Hessian d2W/dqb dq is degenerate");
        return rep;
    }

    auto leaf_W = [&](const Point& b) {
        std::map<std::string, Expression> repl;
        for (const auto& v : qbv) repl.emplace(v, Expression(b.at(v)));
        return substitute(cs.W, repl);
    };

    if (!cs.U.empty()) {
        // (c) F(q, dW'/dq, lam) constant on each leaf of U(qb, .) = 0.
        CheckResult c;
        c.name = "constrained";
        c.pass = true;
        for (size_t l = 0; l < qb_samples.size(); ++l) {
            std::map<std::string, Expression> repl;
            for (const auto& v : qbv) repl.emplace(v, Expression(qb_samples[l].at(v)));
            std::vector<Expression> U;
            for (const auto& u : cs.U) U.push_back(substitute(u, repl));
            std::vector<Point> on;
            for (const auto& q : q_samples) {
                NewtonResult r = damped_newton(ExprSystem{U, qv}, q);
                if (r.converged) on.push_back(r.x);
            }
            if (on.empty()) {
                c.pass = false;
                rep.notes.push_back("leaf " + std::to_string(l) + " has no points on U = 0");
                continue;
            }
            DiagnosticsReport leaf = ihj_residual(mf, {leaf_W(qb_samples[l]), {}}, on, tol);
            const double spread = leaf.find("constant")->max_residual;
            if (!(spread <= c.max_residual)) {
                c.max_residual = spread;
                c.worst = static_cast<int>(l);
            }
            c.pass = c.pass && leaf.pass();
        }
        rep.checks.push_back(c);
        return rep;
    }

    // (b) F constant along each leaf qb = const.
    CheckResult leaf;
    leaf.name = "leaf";
    leaf.pass = true;
    for (size_t l = 0; l < qb_samples.size(); ++l) {
        DiagnosticsReport r = ihj_residual(mf, {leaf_W(qb_samples[l]), {}}, q_samples, tol);
        const double spread = r.find("constant")->max_residual;
        if (!(spread <= leaf.max_residual)) {
            leaf.max_residual = spread;
            leaf.worst = static_cast<int>(l);
        }
        leaf.pass = leaf.pass && r.pass();
    }
    rep.checks.push_back(leaf);

    // (d) Fbar = F o phi has zero pb-gradient; (e) phi is symplectic.
    CheckResult pull, sympl;
    pull.name = "pullback";
    sympl.name = "symplectic";
    double qb_grad = 0.0;
    const double h = 1e-5;
    idx = 0;
    Eigen::MatrixXd Omega = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    Omega.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    Omega.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
    for (const auto& b : qb_samples) {
        for (const auto& q : q_samples) {
            Point x = b;
            x.insert(q.begin(), q.end());
            const Eigen::VectorXd qb0 = to_vector(b, qbv), q0 = to_vector(q, qv);
            const Eigen::VectorXd pb0 = -eval_grad(cs.W, x, qbv);
            Eigen::VectorXd lam0 = Eigen::VectorXd::Zero(mf.k());
            bool ok = true;
            auto phi = [&](const Eigen::VectorXd& z) {
                PhiResult r = complete_solution_map(cs.W, n, z.head(n), z.tail(n), q0);
                ok = ok && r.ok;
                Eigen::VectorXd out(2 * n);
                out << r.q, r.p;
                return out;
            };
            auto Fbar = [&](const Eigen::VectorXd& z) {
                const Eigen::VectorXd w = phi(z);
                Point y = to_point(w.head(n), qv);
                for (int i = 0; i < n; ++i) y[at(mf.space.p(), i)] = w[n + i];
                if (mf.k() == 0) return eval(mf.F, y);
                FiberOptions fo;
                fo.grid_per_dim = lam0.size() ? 0 : fo.grid_per_dim;
                const FiberSolution sol = solve_fiber(mf, y, lam0, fo);
                if (sol.roots.empty()) {
                    ok = false;
                    return 0.0;
                }
                for (int a = 0; a < mf.k(); ++a) y[at(mf.fiber, a)] = sol.roots.front().lam[a];
                return eval(mf.F, y);
            };
            Eigen::VectorXd z0(2 * n);
            z0 << qb0, pb0;
            if (mf.k() > 0) {
                Point y = to_point(q0, qv);
                const Eigen::VectorXd p0 = eval_grad(cs.W, x, qv);
                for (int i = 0; i < n; ++i) y[at(mf.space.p(), i)] = p0[i];
                const FiberSolution sol = solve_fiber(mf, y, lam0);
                if (!sol.roots.empty()) lam0 = sol.roots.front().lam;
            }
            Eigen::MatrixXd J(2 * n, 2 * n);
            Eigen::VectorXd grad(2 * n);
            for (int i = 0; i < 2 * n; ++i) {
                Eigen::VectorXd zp = z0, zm = z0;
                zp[i] += h;
                zm[i] -= h;
                J.col(i) = (phi(zp) - phi(zm)) / (2 * h);
                grad[i] = (Fbar(zp) - Fbar(zm)) / (2 * h);
            }
            const double dp = ok ? max_abs(grad.tail(n)) : INFINITY;
            const double sy = ok ? (J.transpose() * Omega * J - Omega).cwiseAbs().maxCoeff() : INFINITY;
            qb_grad = std::max(qb_grad, max_abs(grad.head(n)));
            if (!(dp <= pull.max_residual)) {
                pull.max_residual = dp;
                pull.worst = idx;
            }
            if (!(sy <= sympl.max_residual)) {
                sympl.max_residual = sy;
                sympl.worst = idx;
            }
            ++idx;
        }
    }
    pull.pass = pull.max_residual < 1e-6;
    sympl.pass = sympl.max_residual < 1e-6;
    rep.checks.push_back(pull);
    rep.checks.push_back(sympl);
    rep.notes.push_back("max |dFbar/dqb| " + fmt("%.3e", qb_grad));
    return rep;
}

}  // namespace ihj
