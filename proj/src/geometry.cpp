#include "ihj/geometry.hpp"

#include <stdexcept>

namespace ihj {

VarList numbered(const std::string& stem, int count) {
    VarList out;
    for (int i = 1; i <= count; ++i) out.push_back(stem + std::to_string(i));
    return out;
}

PhaseSpaceDescriptor::PhaseSpaceDescriptor(int n) : n_(n) {
    if (n <= 0) throw std::invalid_argument("dimension n must be positive");
    q_ = numbered("q", n);
    p_ = numbered("p", n);
    qd_ = numbered("qd", n);
    pd_ = numbered("pd", n);
    alpha_ = numbered("alpha", n);
    beta_ = numbered("beta", n);
    a_ = numbered("a", n);
    b_ = numbered("b", n);
}

namespace {

VarList concat(std::initializer_list<const VarList*> parts) {
    VarList out;
    for (const VarList* p : parts) out.insert(out.end(), p->begin(), p->end());
    return out;
}

}  // namespace

VarList PhaseSpaceDescriptor::cotangent() const { return concat({&q_, &p_}); }
VarList PhaseSpaceDescriptor::tangent() const { return concat({&q_, &qd_}); }
VarList PhaseSpaceDescriptor::tulczyjew() const { return concat({&q_, &p_, &qd_, &pd_}); }
VarList PhaseSpaceDescriptor::double_cotangent() const {
    return concat({&q_, &p_, &alpha_, &beta_});
}
VarList PhaseSpaceDescriptor::cotangent_tangent() const { return concat({&q_, &qd_, &a_, &b_}); }

Eigen::VectorXd SignedPermutation::apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(source.size()));
    for (size_t k = 0; k < source.size(); ++k) y[static_cast<Eigen::Index>(k)] = sign[k] * x[source[k]];
    return y;
}

SignedPermutation SignedPermutation::inverse() const {
    SignedPermutation inv;
    inv.source.assign(source.size(), 0);
    inv.sign.assign(source.size(), 1.0);
    for (size_t k = 0; k < source.size(); ++k) {
        inv.source[static_cast<size_t>(source[k])] = static_cast<int>(k);
        inv.sign[static_cast<size_t>(source[k])] = sign[k];
    }
    return inv;
}

Eigen::MatrixXd SignedPermutation::matrix() const {
    const auto m = static_cast<Eigen::Index>(source.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index k = 0; k < m; ++k) d(k, source[static_cast<size_t>(k)]) = sign[static_cast<size_t>(k)];
    return d;
}

// Blocks of TT*Q: 0 = q, 1 = p, 2 = qd, 3 = pd.
namespace {

SignedPermutation from_blocks(int n, const int blocks[4], const double signs[4]) {
    SignedPermutation s;
    for (int b = 0; b < 4; ++b)
        for (int i = 0; i < n; ++i) {
            s.source.push_back(blocks[b] * n + i);
            s.sign.push_back(signs[b]);
        }
    return s;
}

}  // namespace

SignedPermutation beta_permutation(int n) {
    const int blocks[4] = {0, 1, 3, 2};
    const double signs[4] = {1.0, 1.0, -1.0, 1.0};
    return from_blocks(n, blocks, signs);
}

SignedPermutation alpha_permutation(int n) {
    const int blocks[4] = {0, 2, 3, 1};
    const double signs[4] = {1.0, 1.0, 1.0, 1.0};
    return from_blocks(n, blocks, signs);
}

Eigen::VectorXd to_vector(const Point& x, const VarList& order) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(order.size()));
    for (size_t i = 0; i < order.size(); ++i) {
        auto it = x.find(order[i]);
        if (it == x.end()) throw std::invalid_argument("missing coordinate '" + order[i] + "'");
        v[static_cast<Eigen::Index>(i)] = it->second;
    }
    return v;
}

Point to_point(const Eigen::VectorXd& v, const VarList& order) {
    if (v.size() != static_cast<Eigen::Index>(order.size()))
        throw std::invalid_argument("to_point: dimension mismatch");
    Point x;
    for (size_t i = 0; i < order.size(); ++i) x[order[i]] = v[static_cast<Eigen::Index>(i)];
    return x;
}

Point beta_map(const PhaseSpaceDescriptor& s, const Point& v) {
    return to_point(beta_permutation(s.n()).apply(to_vector(v, s.tulczyjew())),
                    s.double_cotangent());
}

Point beta_map_inverse(const PhaseSpaceDescriptor& s, const Point& w) {
    return to_point(beta_permutation(s.n()).inverse().apply(to_vector(w, s.double_cotangent())),
                    s.tulczyjew());
}

Point alpha_map(const PhaseSpaceDescriptor& s, const Point& v) {
    return to_point(alpha_permutation(s.n()).apply(to_vector(v, s.tulczyjew())),
                    s.cotangent_tangent());
}

Point alpha_map_inverse(const PhaseSpaceDescriptor& s, const Point& w) {
    return to_point(alpha_permutation(s.n()).inverse().apply(to_vector(w, s.cotangent_tangent())),
                    s.tulczyjew());
}

namespace {

void check_dims(const PhaseSpaceDescriptor& s, const Eigen::VectorXd& u, const Eigen::VectorXd& w) {
    if (u.size() != 4 * s.n() || w.size() != 4 * s.n())
        throw std::invalid_argument("tangent vector dimension mismatch");
}

// Canonical pairing sum_i dx^i ^ dy^i for coordinate blocks x, y.
double block_wedge(int n, const Eigen::VectorXd& u, const Eigen::VectorXd& w, int x, int y) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += u[x * n + i] * w[y * n + i] - w[x * n + i] * u[y * n + i];
    return acc;
}

}  // namespace

double omega_T_pair(const PhaseSpaceDescriptor& s, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& w) {
    check_dims(s, u, w);
    return block_wedge(s.n(), u, w, 3, 0) + block_wedge(s.n(), u, w, 1, 2);
}

double omega_double_cotangent_pair(const PhaseSpaceDescriptor& s, const Eigen::VectorXd& u,
                                   const Eigen::VectorXd& w) {
    check_dims(s, u, w);
    return block_wedge(s.n(), u, w, 0, 2) + block_wedge(s.n(), u, w, 1, 3);
}

double omega_cotangent_tangent_pair(const PhaseSpaceDescriptor& s, const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& w) {
    check_dims(s, u, w);
    return block_wedge(s.n(), u, w, 0, 2) + block_wedge(s.n(), u, w, 1, 3);
}

Eigen::VectorXd theta1_coefficients(const PhaseSpaceDescriptor& s, const Point& base) {
    const int n = s.n();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(4 * n);
    for (int i = 0; i < n; ++i) {
        c[i] = base.at(s.pd()[static_cast<size_t>(i)]);
        c[n + i] = -base.at(s.qd()[static_cast<size_t>(i)]);
    }
    return c;
}

Eigen::VectorXd theta2_coefficients(const PhaseSpaceDescriptor& s, const Point& base) {
    const int n = s.n();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(4 * n);
    for (int i = 0; i < n; ++i) {
        c[i] = base.at(s.pd()[static_cast<size_t>(i)]);
        c[2 * n + i] = base.at(s.p()[static_cast<size_t>(i)]);
    }
    return c;
}

std::pair<double, double> theta_forms(const PhaseSpaceDescriptor& s, const TangentVectorAtPoint& v) {
    if (v.components.size() != 4 * s.n()) throw std::invalid_argument("tangent vector dimension mismatch");
    return {theta1_coefficients(s, v.base).dot(v.components),
            theta2_coefficients(s, v.base).dot(v.components)};
}

double fd_exterior_derivative(
    const PhaseSpaceDescriptor& s,
    const std::function<Eigen::VectorXd(const PhaseSpaceDescriptor&, const Point&)>& coeffs,
    const Point& base, const Eigen::VectorXd& u, const Eigen::VectorXd& w, double h) {
    // d theta(u, w) = D_u(theta(w)) - D_w(theta(u)) for constant fields u, w.
    const VarList order = s.tulczyjew();
    const Eigen::VectorXd x0 = to_vector(base, order);
    auto directional = [&](const Eigen::VectorXd& dir, const Eigen::VectorXd& arg) {
        const double fp = coeffs(s, to_point(x0 + h * dir, order)).dot(arg);
        const double fm = coeffs(s, to_point(x0 - h * dir, order)).dot(arg);
        return (fp - fm) / (2.0 * h);
    };
    return directional(u, w) - directional(w, u);
}

double poisson_bracket(const PhaseSpaceDescriptor& s, const Expression& f, const Expression& g,
                       const Point& x) {
    const VarList order = s.tulczyjew();
    const Eigen::VectorXd df = eval_grad(f, x, order);
    const Eigen::VectorXd dg = eval_grad(g, x, order);
    const int n = s.n();
    // Both halves are accumulated identically so that swapping f and g negates exactly.
    double fg = 0.0, gf = 0.0;
    for (int i = 0; i < n; ++i) {
        const int q = i, p = n + i, qd = 2 * n + i, pd = 3 * n + i;
        fg += df[pd] * dg[q];
        fg += df[p] * dg[qd];
        gf += dg[pd] * df[q];
        gf += dg[p] * df[qd];
    }
    return fg - gf;
}

Expression poisson_bracket_expr(const PhaseSpaceDescriptor& s, const Expression& f,
                                const Expression& g) {
    Expression acc(0.0);
    for (int i = 0; i < s.n(); ++i) {
        const auto k = static_cast<size_t>(i);
        acc = acc + diff(f, s.pd()[k]) * diff(g, s.q()[k]) - diff(g, s.pd()[k]) * diff(f, s.q()[k]) +
              diff(f, s.p()[k]) * diff(g, s.qd()[k]) - diff(g, s.p()[k]) * diff(f, s.qd()[k]);
    }
    return acc;
}

}  // namespace ihj
