#include "ihj/numerics.hpp"

#include <cmath>

namespace ihj {

RankInfo numerical_rank(const Eigen::MatrixXd& a, double tol_rank) {
    RankInfo info;
    if (a.size() == 0) {
        info.singular_values = Eigen::VectorXd(0);
        return info;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    info.singular_values = svd.singularValues();
    const double smax = info.singular_values.size() ? info.singular_values[0] : 0.0;
    info.threshold = tol_rank * smax;
    for (Eigen::Index i = 0; i < info.singular_values.size(); ++i)
        if (info.singular_values[i] > info.threshold && info.singular_values[i] > 0.0) ++info.rank;
    return info;
}

Eigen::MatrixXd nullspace(const Eigen::MatrixXd& a, double tol_rank) {
    const Eigen::Index n = a.cols();
    if (a.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double smax = s.size() ? s[0] : 0.0;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > tol_rank * smax && s[i] > 0.0) ++r;
    return svd.matrixV().rightCols(n - r);
}

Eigen::VectorXd ExprSystem::residual(const Point& x) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(f.size()));
    for (size_t i = 0; i < f.size(); ++i) r[static_cast<Eigen::Index>(i)] = eval(f[i], x);
    return r;
}

Eigen::MatrixXd ExprSystem::jacobian(const Point& x) const {
    Eigen::MatrixXd j(static_cast<Eigen::Index>(f.size()),
                      static_cast<Eigen::Index>(unknowns.size()));
    for (size_t i = 0; i < f.size(); ++i)
        j.row(static_cast<Eigen::Index>(i)) = eval_grad(f[i], x, unknowns).transpose();
    return j;
}

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

namespace {

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

Point shifted(const Point& x, const VarList& vars, const Eigen::VectorXd& step, double t) {
    Point y = x;
    for (size_t i = 0; i < vars.size(); ++i) y[vars[i]] += t * step[static_cast<Eigen::Index>(i)];
    return y;
}

}  // namespace

NewtonResult damped_newton(const ExprSystem& sys, Point x0, const NewtonOptions& opt) {
    NewtonResult out;
    out.x = std::move(x0);
    Eigen::VectorXd r;
    try {
        r = sys.residual(out.x);
    } catch (const DomainError&) {
        out.residual = INFINITY;
        return out;
    }
    double norm = r.norm();
    for (int it = 0; it < opt.max_iter; ++it) {
        out.iterations = it;
        if (max_abs(r) <= opt.tol) break;
        Eigen::MatrixXd j;
        try {
            j = sys.jacobian(out.x);
        } catch (const DomainError&) {
            break;
        }
        Eigen::VectorXd step = j.completeOrthogonalDecomposition().solve(-r);
        if (!finite(step)) break;
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opt.max_halvings; ++h, t *= 0.5) {
            Point trial = shifted(out.x, sys.unknowns, step, t);
            Eigen::VectorXd rt;
            try {
                rt = sys.residual(trial);
            } catch (const DomainError&) {
                continue;
            }
            if (finite(rt) && rt.norm() < norm) {
                out.x = std::move(trial);
                r = rt;
                norm = rt.norm();
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    out.residual = max_abs(r);
    out.converged = out.residual <= opt.tol;
    return out;
}

Eigen::VectorXd halton(int index, int dim, double lo, double hi) {
    static const int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
    if (dim > static_cast<int>(sizeof(primes) / sizeof(primes[0])))
        throw std::invalid_argument("halton: dimension too large");
    Eigen::VectorXd v(dim);
    for (int d = 0; d < dim; ++d) {
        double f = 1.0, r = 0.0;
        for (int i = index; i > 0; i /= primes[d]) {
            f /= primes[d];
            r += f * (i % primes[d]);
        }
        v[d] = lo + (hi - lo) * r;
    }
    return v;
}

Point Sampler::point(const VarList& vars, double lo, double hi) {
    Point x;
    for (const auto& v : vars) x[v] = uniform(lo, hi);
    return x;
}

}  // namespace ihj
