#include "ihj/ide.hpp"

#include "ihj/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ihj {

std::string velocity_name(const std::string& state) {
    const auto pos = state.find_first_of("0123456789");
    if (pos == std::string::npos) return state + "d";
    return state.substr(0, pos) + "d" + state.substr(pos);
}

VarList velocity_names(const VarList& state) {
    VarList out;
    for (const auto& s : state) out.push_back(velocity_name(s));
    return out;
}

std::vector<Expression> AffineIDE::all() const {
    std::vector<Expression> out = base;
    out.insert(out.end(), rows.begin(), rows.end());
    return out;
}

namespace {

bool uses_any(const Expression& e, const VarList& vars) {
    for (const auto& v : vars)
        if (e.depends_on(v)) return true;
    return false;
}

VarList join(const VarList& a, const VarList& b) {
    VarList out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

std::map<std::string, Expression> zero_velocity(const VarList& velocity) {
    std::map<std::string, Expression> repl;
    for (const auto& v : velocity) repl.emplace(v, Expression(0.0));
    return repl;
}

double safe_eval(const Expression& e, const Point& x) {
    try {
        return eval(e, x);
    } catch (const DomainError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

int max_rank(const std::vector<Expression>& f, const VarList& vars, const std::vector<Point>& pts) {
    if (f.empty()) return 0;
    int best = 0;
    const size_t limit = std::min<size_t>(pts.size(), 20);
    ExprSystem sys{f, vars};
    for (size_t i = 0; i < limit; ++i) best = std::max(best, numerical_rank(sys.jacobian(pts[i])).rank);
    return best;
}

}  // namespace

AffineIDE make_affine_ide(const VarList& state, const std::vector<Expression>& constraints,
                          unsigned long long seed) {
    AffineIDE e;
    e.state = state;
    e.velocity = velocity_names(state);
    const VarList vars = join(e.state, e.velocity);
    Sampler rng(seed);
    for (const auto& c : constraints) {
        require_vars(c, vars, "implicit differential equation");
        if (!uses_any(c, e.velocity)) {
            e.base.push_back(c);
            continue;
        }
        for (const auto& vj : e.velocity) {
            const Expression dj = diff(c, vj);
            for (const auto& vl : e.velocity) {
                const Expression djl = diff(dj, vl);
                if (djl.is_zero()) continue;
                for (int t = 0; t < 10; ++t) {
                    const double v = safe_eval(djl, rng.point(vars, -2.0, 2.0));
                    if (std::isfinite(v) && std::abs(v) > 1e-12)
                        throw std::invalid_argument("constraint '" + to_string(c) +
                                                    "' is not affine in the velocities");
                }
            }
        }
        e.rows.push_back(c);
    }
    return e;
}

bool vanishes_on(const Expression& g, const std::vector<Point>& samples, const VarList& vars,
                 double tol) {
    double worst = 0.0, scale = 0.0;
    for (const auto& x : samples) {
        const double v = safe_eval(g, x);
        if (!std::isfinite(v)) return false;
        worst = std::max(worst, std::abs(v));
        try {
            scale = std::max(scale, eval_grad(g, x, vars).norm());
        } catch (const DomainError&) {
        }
    }
    return worst < tol * (1.0 + scale);
}

Projection project_to_base(const AffineIDE& e, const std::vector<Point>& samples, double tol) {
    Projection out;
    out.constraints = e.base;
    if (samples.empty()) {
        out.contradictory = true;
        return out;
    }
    const size_t r = e.rows.size(), m = e.velocity.size();
    const auto zero_v = zero_velocity(e.velocity);
    std::vector<std::vector<Expression>> a(r, std::vector<Expression>(m));
    std::vector<Expression> c0(r);
    for (size_t i = 0; i < r; ++i) {
        c0[i] = substitute(e.rows[i], zero_v);
        for (size_t j = 0; j < m; ++j) a[i][j] = substitute(diff(e.rows[i], e.velocity[j]), zero_v);
    }
    // Magnitude range of an entry over the samples.
    auto range = [&](const Expression& x) {
        double lo = INFINITY, hi = 0.0;
        for (const auto& pt : samples) {
            const double v = std::abs(safe_eval(x, pt));
            if (!std::isfinite(v)) return std::pair<double, double>{0.0, INFINITY};
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return std::pair<double, double>{lo, hi};
    };
    std::vector<bool> used(r, false);
    for (size_t j = 0; j < m; ++j) {
        int best = -1;
        double best_score = -1.0;
        bool partial = false;
        for (size_t i = 0; i < r; ++i) {
            if (used[i] || a[i][j].is_zero()) continue;
            const auto [lo, hi] = range(a[i][j]);
            const double eps = tol * (1.0 + hi);
            if (lo > eps) {
                const double score = a[i][j].is_constant() ? INFINITY : lo;
                if (score > best_score) {
                    best_score = score;
                    best = static_cast<int>(i);
                }
            } else if (hi > eps) {
                partial = true;
            }
        }
        if (best < 0) {
            if (partial) out.stratified = true;
            continue;
        }
        const auto pr = static_cast<size_t>(best);
        used[pr] = true;
        ++out.pivot_rank;
        const Expression piv = a[pr][j];
        for (size_t i = 0; i < r; ++i) {
            if (used[i] || a[i][j].is_zero()) continue;
            const Expression f = a[i][j];
            for (size_t l = 0; l < m; ++l) a[i][l] = piv * a[i][l] - f * a[pr][l];
            c0[i] = piv * c0[i] - f * c0[pr];
        }
    }
    for (size_t i = 0; i < r; ++i) {
        if (used[i]) continue;
        bool zero_row = true;
        for (size_t j = 0; j < m; ++j) {
            if (a[i][j].is_zero()) continue;
            if (range(a[i][j]).second > tol) {
                zero_row = false;
                out.stratified = true;
            }
        }
        if (!zero_row) continue;
        const Expression& g = c0[i];
        if (g.is_constant()) {
            if (!g.is_zero()) out.contradictory = true;
            continue;
        }
        if (vanishes_on(g, samples, e.state, tol)) continue;
        out.added.push_back(g);
        out.constraints.push_back(g);
    }
    return out;
}

std::vector<Expression> tangent_constraints(const std::vector<Expression>& c, const VarList& state) {
    std::vector<Expression> out;
    for (const auto& g : c) {
        out.push_back(g);
        Expression dg(0.0);
        for (const auto& x : state) dg = dg + diff(g, x) * var(velocity_name(x));
        out.push_back(dg);
    }
    return out;
}

std::vector<Point> sample_zero_set(const std::vector<Expression>& f, const VarList& vars,
                                   const SamplingOptions& opt) {
    std::vector<Point> out;
    const int dim = static_cast<int>(vars.size());
    ExprSystem sys{f, vars};
    NewtonOptions nopt;
    nopt.tol = opt.newton_tol;
    for (int idx = 1; static_cast<int>(out.size()) < opt.count && idx <= 3 * opt.count; ++idx) {
        Point x = dim ? to_point(halton(idx, dim, opt.lo, opt.hi), vars) : Point{};
        if (f.empty()) {
            out.push_back(std::move(x));
            continue;
        }
        NewtonResult r = damped_newton(sys, x, nopt);
        if (r.converged) out.push_back(std::move(r.x));
    }
    return out;
}

AlgorithmTrace run_integrability(const AffineIDE& e, const IntegrabilityOptions& opt) {
    AlgorithmTrace trace;
    AffineIDE cur = e;
    const VarList tm = join(e.state, e.velocity);
    const int m = static_cast<int>(e.state.size());
    for (int k = 0; k <= opt.max_iter; ++k) {
        IterationRecord rec;
        rec.E = cur.all();
        const std::vector<Point> base_samples = sample_zero_set(cur.base, cur.state, opt.sampling);
        const Projection pr = project_to_base(cur, base_samples, opt.tol);
        rec.C = pr.constraints;
        rec.stratified = pr.stratified;
        trace.stratified = trace.stratified || pr.stratified;
        const std::vector<Point> e_samples =
            pr.contradictory ? std::vector<Point>{} : sample_zero_set(rec.E, tm, opt.sampling);
        rec.samples = static_cast<int>(e_samples.size());
        if (e_samples.empty()) {
            trace.empty = true;
            trace.iterations.push_back(std::move(rec));
            break;
        }
        const std::vector<Point> c_samples = sample_zero_set(rec.C, cur.state, opt.sampling);
        rec.dim_E = 2 * m - max_rank(rec.E, tm, e_samples);
        rec.dim_C = m - max_rank(rec.C, cur.state, c_samples);
        trace.iterations.push_back(rec);

        bool grew = false;
        for (const auto& cand : tangent_constraints(pr.constraints, cur.state)) {
            if (cand.is_zero() || vanishes_on(cand, e_samples, tm, opt.tol)) continue;
            if (uses_any(cand, cur.velocity))
                cur.rows.push_back(cand);
            else
                cur.base.push_back(cand);
            grew = true;
        }
        if (!grew) {
            trace.stabilized_at = k;
            break;
        }
    }
    trace.final_system = cur;
    return trace;
}

const char* to_string(PointStatus s) {
    switch (s) {
        case PointStatus::Integrable: return "integrable";
        case PointStatus::NonIntegrable: return "non-integrable";
        case PointStatus::Indeterminate: return "indeterminate";
    }
    return "?";
}

PointwiseReport pointwise_integrability(const VarList& state, const std::vector<Expression>& E,
                                        const std::vector<Point>& samples, double tol_rank,
                                        double tol) {
    PointwiseReport rep;
    const VarList velocity = velocity_names(state);
    const auto r = static_cast<Eigen::Index>(E.size());
    const auto m = static_cast<Eigen::Index>(state.size());
    for (const auto& x : samples) {
        PointwiseResult res;
        Eigen::MatrixXd jx(r, m), jv(r, m);
        for (Eigen::Index i = 0; i < r; ++i) {
            jx.row(i) = eval_grad(E[static_cast<size_t>(i)], x, state).transpose();
            jv.row(i) = eval_grad(E[static_cast<size_t>(i)], x, velocity).transpose();
        }
        Eigen::MatrixXd full(r, 2 * m);
        full << jx, jv;
        const Eigen::VectorXd sf = numerical_rank(full, tol_rank).singular_values;
        const double scale = std::max(1.0, sf.size() ? sf[0] : 0.0);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(jv, Eigen::ComputeFullU);
        const Eigen::VectorXd& s = svd.singularValues();
        int rank = 0;
        bool ambiguous = false;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (s[i] > tol_rank * scale) ++rank;
            if (s[i] > tol_rank * scale && s[i] <= 1e-5 * scale) ambiguous = true;
        }
        res.velocity_rank = rank;
        if (ambiguous) {
            res.status = PointStatus::Indeterminate;
            ++rep.indeterminate;
        } else if (rank < r) {
            const Eigen::MatrixXd y = svd.matrixU().rightCols(r - rank);
            const Eigen::MatrixXd normals = y.transpose() * jx;
            const Eigen::VectorXd xd = to_vector(x, velocity);
            res.tangency_residual = max_abs(normals * xd);
            if (res.tangency_residual > tol * (1.0 + normals.norm())) {
                res.status = PointStatus::NonIntegrable;
                ++rep.flagged;
            }
        }
        rep.points.push_back(res);
    }
    return rep;
}

std::vector<Point> rank_drop_samples(const VarList& state, const std::vector<Expression>& E,
                                     const SamplingOptions& opt) {
    const VarList velocity = velocity_names(state);
    VarList coeff;
    for (size_t i = 0; i < E.size(); ++i) coeff.push_back("kappa" + std::to_string(i + 1));
    ExprSystem sys;
    sys.unknowns = join(join(state, velocity), coeff);
    sys.f = E;
    Expression norm(-1.0);
    for (size_t i = 0; i < E.size(); ++i) norm = norm + pow(var(coeff[i]), 2);
    for (const auto& v : velocity) {
        Expression row(0.0);
        for (size_t i = 0; i < E.size(); ++i) row = row + var(coeff[i]) * diff(E[i], v);
        sys.f.push_back(row);
    }
    sys.f.push_back(norm);
    NewtonOptions nopt;
    nopt.tol = opt.newton_tol;
    const int dim = static_cast<int>(sys.unknowns.size());
    std::vector<Point> out;
    for (int idx = 1; static_cast<int>(out.size()) < opt.count && idx <= 3 * opt.count; ++idx) {
        Point x = to_point(halton(idx, dim, opt.lo, opt.hi), sys.unknowns);
        NewtonResult r = damped_newton(sys, x, nopt);
        if (!r.converged) continue;
        for (const auto& c : coeff) r.x.erase(c);
        out.push_back(std::move(r.x));
    }
    return out;
}

}  // namespace ihj
