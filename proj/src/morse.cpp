#include "ihj/morse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ihj {

VarList MorseFamilySpec::base_vars() const {
    return base == MorseBase::Cotangent ? space.cotangent() : space.q();
}

VarList MorseFamilySpec::total_vars() const {
    VarList v = base_vars();
    v.insert(v.end(), fiber.begin(), fiber.end());
    return v;
}

MorseFamilySpec make_family(int n, const Expression& F, int k, MorseBase base) {
    MorseFamilySpec mf;
    mf.space = PhaseSpaceDescriptor(n);
    mf.F = F;
    mf.fiber = numbered("lam", k);
    mf.base = base;
    require_vars(F, mf.total_vars(), "Morse family");
    return mf;
}

Eigen::VectorXd critical_residual(const MorseFamilySpec& mf, const Point& x) {
    return eval_grad(mf.F, x, mf.fiber);
}

MorseRank morse_rank_check(const MorseFamilySpec& mf, const Point& x, double tol_rank,
                           double tol_crit) {
    const Eigen::VectorXd crit = critical_residual(mf, x);
    if (max_abs(crit) > tol_crit)
        throw std::domain_error("point is not on the critical set (|dF/dlam| = " +
                                std::to_string(max_abs(crit)) + ")");
    const VarList base = mf.base_vars();
    const Jet2 j = eval_jet2(mf.F, x, mf.total_vars());
    const int b = static_cast<int>(base.size());
    const int k = mf.k();
    // Rows: fiber directions; columns: base then fiber.
    Eigen::MatrixXd m(k, b + k);
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < b + k; ++c) m(r, c) = j.hess(b + r, c);
    const RankInfo info = numerical_rank(m, tol_rank);
    MorseRank out;
    out.rank = info.rank;
    out.required = k;
    out.base_dim = b;
    out.maximal = info.rank == k;
    out.singular_values = info.singular_values;
    return out;
}

ImplicitSystem generate_E(const MorseFamilySpec& mf) {
    const PhaseSpaceDescriptor& s = mf.space;
    ImplicitSystem sys;
    sys.multipliers.clear();
    std::vector<Expression> rows;
    if (mf.base == MorseBase::Cotangent) {
        sys.coords = s.tulczyjew();
        for (int i = 0; i < s.n(); ++i) {
            const auto k = static_cast<size_t>(i);
            rows.push_back(var(s.qd()[k]) - diff(mf.F, s.p()[k]));
        }
        for (int i = 0; i < s.n(); ++i) {
            const auto k = static_cast<size_t>(i);
            rows.push_back(var(s.pd()[k]) + diff(mf.F, s.q()[k]));
        }
    } else {
        sys.coords = s.cotangent();
        for (int i = 0; i < s.n(); ++i) {
            const auto k = static_cast<size_t>(i);
            rows.push_back(var(s.p()[k]) - diff(mf.F, s.q()[k]));
        }
    }
    for (const auto& l : mf.fiber) rows.push_back(diff(mf.F, l));
    for (auto& r : rows)
        if (!r.is_zero()) sys.constraints.push_back(r);
    for (const auto& l : mf.fiber)
        if (std::find(sys.coords.begin(), sys.coords.end(), l) == sys.coords.end())
            sys.multipliers.push_back(l);
    sys.label = "E";
    return sys;
}

FiberSolution solve_fiber(const MorseFamilySpec& mf, const Point& base, const Eigen::VectorXd& lam0,
                          const FiberOptions& opt) {
    FiberSolution out;
    const int k = mf.k();
    if (k == 0) {
        out.roots.push_back({Eigen::VectorXd(0), false});
        return out;
    }
    std::vector<Eigen::VectorXd> starts;
    if (lam0.size() == k) starts.push_back(lam0);
    if (opt.grid_per_dim > 0) {
        long total = 1;
        for (int i = 0; i < k; ++i) total *= opt.grid_per_dim;
        for (long idx = 0; idx < total && idx < 4096; ++idx) {
            Eigen::VectorXd v(k);
            long rest = idx;
            for (int i = 0; i < k; ++i) {
                const int g = static_cast<int>(rest % opt.grid_per_dim);
                rest /= opt.grid_per_dim;
                v[i] = opt.grid_per_dim == 1
                           ? 0.0
                           : -opt.grid_radius + 2.0 * opt.grid_radius * g / (opt.grid_per_dim - 1);
            }
            starts.push_back(v);
        }
    }
    ExprSystem sys;
    for (const auto& l : mf.fiber) sys.f.push_back(diff(mf.F, l));
    sys.unknowns = mf.fiber;
    NewtonOptions nopt;
    nopt.max_iter = opt.max_iter;
    nopt.tol = opt.tol;
    for (const auto& st : starts) {
        ++out.starts;
        Point x = base;
        for (int i = 0; i < k; ++i) x[mf.fiber[static_cast<size_t>(i)]] = st[i];
        NewtonResult r = damped_newton(sys, x, nopt);
        if (!r.converged) {
            ++out.failed_starts;
            continue;
        }
        Eigen::VectorXd lam = to_vector(r.x, mf.fiber);
        bool dup = false;
        for (const auto& root : out.roots)
            if ((root.lam - lam).cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + lam.cwiseAbs().maxCoeff()))
                dup = true;
        if (dup) continue;
        const Jet2 j = eval_jet2(mf.F, r.x, mf.fiber);
        const RankInfo info = numerical_rank(j.hess_matrix(), 1e-8);
        out.roots.push_back({lam, info.rank < k});
    }
    return out;
}

double max_constraint_residual(const std::vector<Expression>& f, const Point& x) {
    double m = 0.0;
    for (const auto& e : f) m = std::max(m, std::abs(eval(e, x)));
    return m;
}

ClosureReport lagrangian_closure_check(const PhaseSpaceDescriptor& s, const ImplicitSystem& sys,
                                       const std::vector<Point>& points, double tol) {
    ClosureReport rep;
    const int n = s.n();
    const int m = static_cast<int>(sys.constraints.size());
    const int k = static_cast<int>(sys.multipliers.size());
    rep.constraint_count = m;
    rep.required = 2 * n;
    rep.count_ok = m - k == 2 * n;
    rep.effective_count = 2 * n;
    const VarList coords = s.tulczyjew();
    for (const auto& x : points) {
        const double res = max_constraint_residual(sys.constraints, x);
        if (res > tol)
            throw std::invalid_argument("sample point violates the constraints (residual " +
                                        std::to_string(res) + ")");
        Eigen::MatrixXd d(m, 4 * n), lm(m, k);
        for (int a = 0; a < m; ++a) {
            const auto& c = sys.constraints[static_cast<size_t>(a)];
            d.row(a) = eval_grad(c, x, coords).transpose();
            if (k) lm.row(a) = eval_grad(c, x, sys.multipliers).transpose();
        }
        Eigen::MatrixXd basis = k ? nullspace(lm.transpose(), 1e-8) : Eigen::MatrixXd::Identity(m, m);
        const Eigen::MatrixXd conormal = basis.transpose() * d;
        rep.effective_count = std::min(rep.effective_count, numerical_rank(conormal, 1e-8).rank);
        // Bracket matrix of the constraint differentials.
        Eigen::MatrixXd br(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
                double fg = 0.0, gf = 0.0;
                for (int i = 0; i < n; ++i) {
                    fg += d(a, 3 * n + i) * d(b, i);
                    fg += d(a, n + i) * d(b, 2 * n + i);
                    gf += d(b, 3 * n + i) * d(a, i);
                    gf += d(b, n + i) * d(a, 2 * n + i);
                }
                br(a, b) = fg - gf;
            }
        const Eigen::MatrixXd red = basis.transpose() * br * basis;
        for (int a = 0; a < red.rows(); ++a)
            for (int b = a + 1; b < red.cols(); ++b) {
                const double v = std::abs(red(a, b));
                if (rep.worst_a < 0 || v > rep.max_violation) {
                    rep.max_violation = v;
                    rep.worst_a = a;
                    rep.worst_b = b;
                }
            }
        ++rep.points;
    }
    rep.pass = rep.count_ok && rep.effective_count == 2 * n && rep.max_violation <= tol;
    return rep;
}

MorseFamilySpec dirac_family(int n, const Expression& H, const std::vector<Expression>& phi) {
    PhaseSpaceDescriptor s(n);
    require_vars(H, s.cotangent(), "Hamiltonian");
    Expression F = H;
    const VarList lam = numbered("lam", static_cast<int>(phi.size()));
    for (size_t a = 0; a < phi.size(); ++a) {
        require_vars(phi[a], s.cotangent(), "constraint");
        F = F + var(lam[a]) * phi[a];
    }
    return make_family(n, F, static_cast<int>(phi.size()));
}

std::vector<Point> sample_critical_set(const MorseFamilySpec& mf, Sampler& rng, int count,
                                       double lo, double hi, double tol) {
    std::vector<Point> out;
    const VarList vars = mf.total_vars();
    ExprSystem sys;
    for (const auto& l : mf.fiber) sys.f.push_back(diff(mf.F, l));
    sys.unknowns = vars;
    NewtonOptions opt;
    opt.tol = tol;
    for (int attempt = 0; static_cast<int>(out.size()) < count && attempt < 20 * count; ++attempt) {
        Point x = rng.point(vars, lo, hi);
        if (sys.f.empty()) {
            out.push_back(x);
            continue;
        }
        NewtonResult r = damped_newton(sys, x, opt);
        if (r.converged) out.push_back(r.x);
    }
    return out;
}

Point lift_to_E(const MorseFamilySpec& mf, const Point& crit) {
    const PhaseSpaceDescriptor& s = mf.space;
    Point out = crit;
    if (mf.base == MorseBase::Cotangent) {
        const Eigen::VectorXd dp = eval_grad(mf.F, crit, s.p());
        const Eigen::VectorXd dq = eval_grad(mf.F, crit, s.q());
        for (int i = 0; i < s.n(); ++i) {
            out[s.qd()[static_cast<size_t>(i)]] = dp[i];
            out[s.pd()[static_cast<size_t>(i)]] = -dq[i];
        }
    } else {
        const Eigen::VectorXd dq = eval_grad(mf.F, crit, s.q());
        for (int i = 0; i < s.n(); ++i) out[s.p()[static_cast<size_t>(i)]] = dq[i];
    }
    return out;
}

}  // namespace ihj
