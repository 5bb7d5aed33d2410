#include "ihj/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace ihj {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::vector<Expression> momentum_rows(const LagrangianSystem& ls, const PhaseSpaceDescriptor& s) {
    std::vector<Expression> rows;
    for (int i = 0; i < ls.n; ++i) {
        const auto k = static_cast<size_t>(i);
        rows.push_back(var(s.p()[k]) - diff(ls.L, s.qd()[k]));
    }
    return rows;
}

bool momenta_affine(const LagrangianSystem& ls, const PhaseSpaceDescriptor& s) {
    for (const auto& a : s.qd()) {
        const Expression la = diff(ls.L, a);
        for (const auto& b : s.qd()) {
            const Expression w = diff(la, b);
            for (const auto& c : s.qd())
                if (w.depends_on(c)) return false;
        }
    }
    return true;
}

std::vector<Point> halton_cloud(const VarList& vars, int count, double lo, double hi) {
    std::vector<Point> out;
    for (int i = 1; i <= count; ++i)
        out.push_back(to_point(halton(i, static_cast<int>(vars.size()), lo, hi), vars));
    return out;
}

double range_lo(const Expression& e, const std::vector<Point>& samples) {
    double lo = INFINITY;
    for (const auto& x : samples) {
        double v = NAN;
        try {
            v = std::abs(eval(e, x));
        } catch (const DomainError&) {
        }
        if (!std::isfinite(v)) return 0.0;
        lo = std::min(lo, v);
    }
    return lo;
}

// qd*(q, p) solving p = dL/dqd by Gauss-Jordan elimination with pivots that do
// not vanish on the samples; free velocities are set to zero.
std::map<std::string, Expression> velocity_solution(const LagrangianSystem& ls,
                                                    const PhaseSpaceDescriptor& s,
                                                    const std::vector<Point>& samples) {
    const auto n = static_cast<size_t>(ls.n);
    std::map<std::string, Expression> zero;
    for (const auto& v : s.qd()) zero.emplace(v, Expression(0.0));
    const auto rows = momentum_rows(ls, s);
    std::vector<std::vector<Expression>> a(n, std::vector<Expression>(n));
    std::vector<Expression> c0(n);
    for (size_t i = 0; i < n; ++i) {
        c0[i] = expand_polynomial(substitute(rows[i], zero));
        for (size_t j = 0; j < n; ++j) a[i][j] = expand_polynomial(substitute(diff(rows[i], s.qd()[j]), zero));
    }
    std::vector<bool> used(n, false);
    std::vector<std::pair<size_t, size_t>> pivots;
    for (size_t j = 0; j < n; ++j) {
        int best = -1;
        double best_score = 0.0;
        for (size_t i = 0; i < n; ++i) {
            if (used[i] || a[i][j].is_zero()) continue;
            const double lo = range_lo(a[i][j], samples);
            if (lo <= 1e-9) continue;
            const double score = a[i][j].is_constant() ? INFINITY : lo;
            if (best < 0 || score > best_score) {
                best = static_cast<int>(i);
                best_score = score;
            }
        }
        if (best < 0) continue;
        const auto pr = static_cast<size_t>(best);
        used[pr] = true;
        pivots.emplace_back(pr, j);
        const Expression piv = a[pr][j];
        for (size_t i = 0; i < n; ++i) {
            if (i == pr || a[i][j].is_zero()) continue;
            const Expression f = a[i][j] / piv;
            for (size_t l = 0; l < n; ++l) a[i][l] = expand_polynomial(a[i][l] - f * a[pr][l]);
            c0[i] = expand_polynomial(c0[i] - f * c0[pr]);
        }
    }
    std::map<std::string, Expression> out = zero;
    for (const auto& [pr, j] : pivots) out[s.qd()[j]] = expand_polynomial(-c0[pr] / a[pr][j]);
    return out;
}

Eigen::MatrixXd constraint_jacobian(const std::vector<Expression>& c, const Point& x, const VarList& vars) {
    Eigen::MatrixXd j(static_cast<Eigen::Index>(c.size()), static_cast<Eigen::Index>(vars.size()));
    for (size_t i = 0; i < c.size(); ++i) j.row(static_cast<Eigen::Index>(i)) = eval_grad(c[i], x, vars).transpose();
    return j;
}

Eigen::MatrixXd tangent_basis(const std::vector<Expression>& c, const Point& x, const VarList& vars) {
    const auto d = static_cast<Eigen::Index>(vars.size());
    if (c.empty()) return Eigen::MatrixXd::Identity(d, d);
    return nullspace(constraint_jacobian(c, x, vars));
}

}  // namespace

LagrangianSystem make_lagrangian(int n, const Expression& L) {
    if (n < 1) throw std::invalid_argument("lagrangian: n must be positive");
    require_vars(L, PhaseSpaceDescriptor(n).tangent(), "lagrangian");
    return {n, L};
}

HessianAnalysis hessian_analysis(const LagrangianSystem& ls, const std::vector<Point>& samples,
                                 double tol_rank) {
    const PhaseSpaceDescriptor s(ls.n);
    HessianAnalysis out;
    out.regular = !samples.empty();
    for (const auto& x : samples) {
        const Eigen::MatrixXd w = eval_jet2(ls.L, x, s.qd()).hess_matrix();
        const int r = numerical_rank(w, tol_rank).rank;
        out.ranks.push_back(r);
        out.regular = out.regular && r == ls.n;
    }
    return out;
}

Point legendre_map(const LagrangianSystem& ls, const Point& x) {
    const PhaseSpaceDescriptor s(ls.n);
    Point y;
    for (int i = 0; i < ls.n; ++i) {
        const auto k = static_cast<size_t>(i);
        y[s.q()[k]] = x.at(s.q()[k]);
        y[s.p()[k]] = eval(diff(ls.L, s.qd()[k]), x);
    }
    return y;
}

Expression energy(const LagrangianSystem& ls) {
    const PhaseSpaceDescriptor s(ls.n);
    Expression e(0.0);
    for (const auto& v : s.qd()) e = e + var(v) * diff(ls.L, v);
    return e - ls.L;
}

MorseFamilySpec pontryagin_family(const LagrangianSystem& ls) {
    MorseFamilySpec mf;
    mf.space = PhaseSpaceDescriptor(ls.n);
    Expression F(0.0);
    for (int i = 0; i < ls.n; ++i) {
        const auto k = static_cast<size_t>(i);
        F = F + var(mf.space.p()[k]) * var(mf.space.qd()[k]);
    }
    mf.F = F - ls.L;
    mf.fiber = mf.space.qd();
    mf.base = MorseBase::Cotangent;
    return mf;
}

std::vector<Expression> euler_lagrange_constraints(const LagrangianSystem& ls) {
    const PhaseSpaceDescriptor s(ls.n);
    std::vector<Expression> out = momentum_rows(ls, s);
    for (int i = 0; i < ls.n; ++i) {
        const auto k = static_cast<size_t>(i);
        out.push_back(var(s.pd()[k]) - diff(ls.L, s.q()[k]));
    }
    return out;
}

DiagnosticsReport lagrangian_hj_residual(const LagrangianSystem& ls, const OneFormSpec& g,
                                         const std::vector<Point>& samples, double tol) {
    const PhaseSpaceDescriptor s(ls.n);
    if (g.n() != ls.n) throw std::invalid_argument("lagrangian_hj_residual: one-form size mismatch");
    DiagnosticsReport rep;
    rep.samples = static_cast<int>(samples.size());
    CheckResult dyn{"dynamics", true, 0.0, -1}, mom{"momentum", true, 0.0, -1};
    for (size_t t = 0; t < samples.size(); ++t) {
        const Point& x = samples[t];
        double d = 0.0, m = 0.0;
        for (int j = 0; j < ls.n; ++j) {
            const auto kj = static_cast<size_t>(j);
            double r = -eval(diff(ls.L, s.q()[kj]), x);
            for (int i = 0; i < ls.n; ++i) {
                const auto ki = static_cast<size_t>(i);
                r += x.at(s.qd()[ki]) * eval(diff(g.gamma[ki], s.q()[kj]), x);
            }
            d = std::max(d, std::abs(r));
            m = std::max(m, std::abs(eval(g.gamma[kj], x) - eval(diff(ls.L, s.qd()[kj]), x)));
        }
        SampleDiagnostics sd;
        sd.dF = d;
        sd.critical = m;
        rep.per_sample.push_back(sd);
        if (d > dyn.max_residual || dyn.worst < 0) {
            dyn.max_residual = std::max(dyn.max_residual, d);
            dyn.worst = static_cast<int>(t);
        }
        if (m > mom.max_residual || mom.worst < 0) {
            mom.max_residual = std::max(mom.max_residual, m);
            mom.worst = static_cast<int>(t);
        }
    }
    dyn.pass = dyn.max_residual <= tol;
    mom.pass = mom.max_residual <= tol;
    rep.checks = {dyn, mom};
    return rep;
}

Expression canonical_bracket(const PhaseSpaceDescriptor& s, const Expression& f, const Expression& g) {
    Expression out(0.0);
    for (int i = 0; i < s.n(); ++i) {
        const auto k = static_cast<size_t>(i);
        out = out + diff(f, s.q()[k]) * diff(g, s.p()[k]) - diff(f, s.p()[k]) * diff(g, s.q()[k]);
    }
    return out;
}

std::vector<Expression> GotayNesterResult::final_constraints() const {
    std::vector<Expression> out = primary;
    out.insert(out.end(), secondary.begin(), secondary.end());
    return out;
}

double pointwise_solvability(const LagrangianSystem& ls, const std::vector<Expression>& primary,
                             const std::vector<Expression>& level, const std::vector<Point>& samples) {
    const PhaseSpaceDescriptor s(ls.n);
    const VarList tstar = s.cotangent(), tq = s.tangent();
    const auto n = static_cast<Eigen::Index>(ls.n);
    const Expression el = energy(ls);
    ExprSystem fiber{momentum_rows(ls, s), s.qd()};
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    omega.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    omega.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
    double worst = 0.0;
    for (const auto& x : samples) {
        Point x0 = x;
        for (const auto& v : s.qd()) x0[v] = 0.0;
        const NewtonResult lift = damped_newton(fiber, x0);
        if (!lift.converged) continue;
        const Point& y = lift.x;
        const Jet2 jet = eval_jet2(ls.L, y, tq);
        const Eigen::MatrixXd h = jet.hess_matrix();
        const Eigen::MatrixXd w = h.bottomRightCorner(n, n);
        const Eigen::MatrixXd wq = h.bottomLeftCorner(n, n);
        const Eigen::VectorXd de = eval_grad(el, y, tq);
        const Eigen::MatrixXd b1 = tangent_basis(primary, x, tstar);
        const Eigen::MatrixXd bl = tangent_basis(level, x, tstar);
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> wsolve(w);
        Eigen::VectorXd g(b1.cols());
        for (Eigen::Index j = 0; j < b1.cols(); ++j) {
            const Eigen::VectorXd dq = b1.col(j).head(n), dp = b1.col(j).tail(n);
            const Eigen::VectorXd dqd = wsolve.solve(dp - wq * dq);
            g[j] = de.head(n).dot(dq) + de.tail(n).dot(dqd);
        }
        double r = 0.0;
        if (bl.cols() == 0) {
            r = g.norm();
        } else {
            const Eigen::MatrixXd m = b1.transpose() * omega.transpose() * bl;
            const Eigen::VectorXd c = m.completeOrthogonalDecomposition().solve(g);
            r = (g - m * c).norm();
        }
        worst = std::max(worst, r / (1.0 + g.norm()));
    }
    return worst;
}

GotayNesterResult gotay_nester(const LagrangianSystem& ls, const GotayNesterOptions& opt) {
    const PhaseSpaceDescriptor s(ls.n);
    const VarList tstar = s.cotangent();
    GotayNesterResult out;
    const auto tq_samples = halton_cloud(s.tangent(), opt.sampling.count, opt.sampling.lo, opt.sampling.hi);
    out.regular = hessian_analysis(ls, tq_samples).regular;

    // h_1 is well defined iff dE_L annihilates the kernel of the fiber Hessian.
    const Expression el = energy(ls);
    for (const auto& x : tq_samples) {
        const Eigen::MatrixXd w = eval_jet2(ls.L, x, s.qd()).hess_matrix();
        const Eigen::MatrixXd ker = nullspace(w);
        const Eigen::VectorXd de = eval_grad(el, x, s.qd());
        for (Eigen::Index c = 0; c < ker.cols(); ++c)
            out.h1_fiber_residual = std::max(out.h1_fiber_residual, std::abs(de.dot(ker.col(c))) / (1.0 + de.norm()));
    }
    out.h1_well_defined = out.h1_fiber_residual <= 1e-8;

    out.affine = momenta_affine(ls, s);
    if (!out.affine) {
        out.notes.push_back("dL/dqd is not affine in qd; constraints are reported pointwise only");
        return out;
    }

    const std::vector<Point> free_samples = sample_zero_set({}, tstar, opt.sampling);
    out.h1 = expand_polynomial(substitute(el, velocity_solution(ls, s, free_samples)));

    AffineIDE prim;
    prim.state = tstar;
    prim.velocity = s.qd();
    prim.rows = momentum_rows(ls, s);
    const Projection p0 = project_to_base(prim, free_samples, opt.tol);
    out.stratified = p0.stratified;
    for (const auto& c : p0.added) out.primary.push_back(normalize_constraint(c));
    if (p0.contradictory) {
        out.empty = true;
        return out;
    }

    VarList u;
    for (size_t a = 0; a < out.primary.size(); ++a) u.push_back("u" + std::to_string(a + 1));

    std::vector<Expression> current = out.primary;
    for (int level = 1; level <= opt.max_iter; ++level) {
        PresymplecticLevel rec;
        rec.level = level;
        rec.constraints = current;
        const std::vector<Point> samples = current.empty() ? free_samples : sample_zero_set(current, tstar, opt.sampling);
        rec.samples = static_cast<int>(samples.size());
        if (samples.empty()) {
            out.empty = true;
            out.levels.push_back(rec);
            break;
        }
        rec.solvability_residual = pointwise_solvability(ls, out.primary, current, samples);
        out.levels.push_back(rec);

        AffineIDE ide;
        ide.state = tstar;
        ide.velocity = u;
        ide.base = current;
        for (const auto& phi : current) {
            Expression row = canonical_bracket(s, phi, out.h1);
            for (size_t a = 0; a < u.size(); ++a) row = row + var(u[a]) * canonical_bracket(s, phi, out.primary[a]);
            ide.rows.push_back(expand_polynomial(row));
        }
        const Projection pr = project_to_base(ide, samples, opt.tol);
        out.stratified = out.stratified || pr.stratified;
        if (pr.contradictory) {
            out.empty = true;
            break;
        }
        std::vector<Expression> added;
        for (const auto& g : pr.added) {
            const Expression c = normalize_constraint(g);
            if (c.is_constant()) {
                if (!c.is_zero()) out.empty = true;
                continue;
            }
            added.push_back(c);
        }
        if (out.empty) break;
        if (added.empty()) {
            out.stabilized_at = level;
            break;
        }
        for (const auto& c : added) {
            out.secondary.push_back(c);
            current.push_back(c);
        }
    }
    if (out.stabilized_at < 0 && !out.empty)
        out.notes.push_back("no stabilization within " + std::to_string(opt.max_iter) + " levels");
    if (!out.h1_well_defined)
        out.notes.push_back("energy is not constant on Legendre fibers (residual " + fmt(out.h1_fiber_residual) + ")");
    return out;
}

}  // namespace ihj
