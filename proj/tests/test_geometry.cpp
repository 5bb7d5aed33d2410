#include "doctest.h"

#include <random>

#include "ihj/geometry.hpp"
#include "support.hpp"

using namespace ihj;

namespace {

Eigen::VectorXd random_vector(std::mt19937_64& rng, int dim) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = u(rng);
    return v;
}

}  // namespace

TEST_CASE("coordinate tables") {
    PhaseSpaceDescriptor s(2);
    CHECK(s.cotangent() == VarList{"q1", "q2", "p1", "p2"});
    CHECK(s.tulczyjew().size() == 8);
    CHECK(s.double_cotangent() == VarList{"q1", "q2", "p1", "p2", "alpha1", "alpha2", "beta1", "beta2"});
    CHECK(s.cotangent_tangent() == VarList{"q1", "q2", "qd1", "qd2", "a1", "a2", "b1", "b2"});
    CHECK_THROWS_AS(PhaseSpaceDescriptor(0), std::invalid_argument);
}

TEST_CASE("bracket worked examples") {
    PhaseSpaceDescriptor s(1);
    Point x{{"q1", 0.3}, {"p1", -1.2}, {"qd1", 2.0}, {"pd1", 0.7}};
    CHECK(poisson_bracket(s, parse("pd1"), parse("q1"), x) == 1.0);
    Expression f = parse("q1*p1^2 + sin(qd1)*pd1");
    CHECK(poisson_bracket(s, f, f, x) == 0.0);
    std::mt19937_64 rng(3);
    for (int k = 0; k < 100; ++k) {
        Point y = testing::random_point(rng, s.tulczyjew());
        CHECK(poisson_bracket(s, parse("qd1 - p1"), parse("pd1 + q1"), y) == 0.0);
    }
}

TEST_CASE("bracket axioms on random polynomials") {
    PhaseSpaceDescriptor s(2);
    const VarList vars = s.tulczyjew();
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        Expression f = testing::random_polynomial(rng, vars, 3);
        Expression g = testing::random_polynomial(rng, vars, 3);
        Expression h = testing::random_polynomial(rng, vars, 3);
        Expression gh = poisson_bracket_expr(s, g, h);
        Expression hf = poisson_bracket_expr(s, h, f);
        Expression fg = poisson_bracket_expr(s, f, g);
        for (int k = 0; k < 20; ++k) {
            Point x = testing::random_point(rng, vars);
            CHECK(poisson_bracket(s, f, g, x) + poisson_bracket(s, g, f, x) == 0.0);
            const double a = 1.7, b = -0.4;
            const double lin = poisson_bracket(s, a * f + b * g, h, x) -
                               a * poisson_bracket(s, f, h, x) - b * poisson_bracket(s, g, h, x);
            const double scale = 1.0 + std::abs(poisson_bracket(s, f, h, x)) +
                                 std::abs(poisson_bracket(s, g, h, x));
            CHECK(std::abs(lin) < 1e-12 * scale);
            const double leib = poisson_bracket(s, f * g, h, x) - eval(f, x) * poisson_bracket(s, g, h, x) -
                                eval(g, x) * poisson_bracket(s, f, h, x);
            CHECK(std::abs(leib) < 1e-9);
            const double jac = poisson_bracket(s, f, gh, x) + poisson_bracket(s, g, hf, x) +
                               poisson_bracket(s, h, fg, x);
            CHECK(std::abs(jac) < 1e-8);
            CHECK(std::abs(eval(fg, x) - poisson_bracket(s, f, g, x)) < 1e-9);
        }
    }
}

TEST_CASE("Tulczyjew maps on worked points") {
    PhaseSpaceDescriptor s(1);
    Point v{{"q1", 1.0}, {"p1", 2.0}, {"qd1", 3.0}, {"pd1", 4.0}};
    Point b = beta_map(s, v);
    CHECK(b == Point{{"q1", 1.0}, {"p1", 2.0}, {"alpha1", -4.0}, {"beta1", 3.0}});
    Point a = alpha_map(s, v);
    CHECK(a == Point{{"q1", 1.0}, {"qd1", 3.0}, {"a1", 4.0}, {"b1", 2.0}});
    CHECK(beta_map_inverse(s, b) == v);
    CHECK(alpha_map_inverse(s, a) == v);
    Point zero_fiber{{"q1", 1.0}, {"p1", 2.0}, {"qd1", 0.0}, {"pd1", 0.0}};
    Point bz = beta_map(s, zero_fiber);
    CHECK(bz.at("alpha1") == 0.0);
    CHECK(bz.at("beta1") == 0.0);

    PhaseSpaceDescriptor s3(3);
    std::mt19937_64 rng(9);
    for (int k = 0; k < 100; ++k) {
        Point x = testing::random_point(rng, s3.tulczyjew());
        CHECK(beta_map_inverse(s3, beta_map(s3, x)) == x);
        CHECK(alpha_map_inverse(s3, alpha_map(s3, x)) == x);
    }
}

TEST_CASE("lifted form and potentials") {
    PhaseSpaceDescriptor s(1);
    Eigen::VectorXd e_q = Eigen::VectorXd::Unit(4, 0), e_p = Eigen::VectorXd::Unit(4, 1);
    Eigen::VectorXd e_pd = Eigen::VectorXd::Unit(4, 3);
    CHECK(omega_T_pair(s, e_pd, e_q) == 1.0);
    CHECK(omega_T_pair(s, e_q, e_q) == 0.0);
    CHECK_THROWS_AS(omega_T_pair(s, Eigen::VectorXd::Zero(3), e_q), std::invalid_argument);

    Point base{{"q1", 0.0}, {"p1", 1.0}, {"qd1", 2.0}, {"pd1", 3.0}};
    auto t = theta_forms(s, {base, e_q});
    CHECK(t.first == 3.0);
    CHECK(t.second == 3.0);
    t = theta_forms(s, {base, e_p});
    CHECK(t.first == -2.0);
    CHECK(t.second == 0.0);
}

TEST_CASE("pullbacks and exterior derivatives") {
    PhaseSpaceDescriptor s(2);
    const int dim = 8;
    std::mt19937_64 rng(13);
    const Eigen::MatrixXd db = beta_permutation(2).matrix();
    const Eigen::MatrixXd da = alpha_permutation(2).matrix();
    for (int k = 0; k < 100; ++k) {
        Point x = testing::random_point(rng, s.tulczyjew());
        Eigen::VectorXd u = random_vector(rng, dim), w = random_vector(rng, dim);
        const double wt = omega_T_pair(s, u, w);
        CHECK(std::abs(omega_double_cotangent_pair(s, db * u, db * w) - wt) < 1e-12);
        // The T*TQ form as tabulated pulls back to the opposite orientation.
        CHECK(std::abs(omega_cotangent_tangent_pair(s, da * u, da * w) + wt) < 1e-12);

        const Eigen::VectorXd c1 = theta1_coefficients(s, x), c2 = theta2_coefficients(s, x);
        Eigen::VectorXd d_pq = Eigen::VectorXd::Zero(dim);
        for (int i = 0; i < 2; ++i) {
            d_pq[2 + i] = x.at(s.qd()[static_cast<size_t>(i)]);
            d_pq[4 + i] = x.at(s.p()[static_cast<size_t>(i)]);
        }
        CHECK(std::abs((c2 - c1).dot(u) - d_pq.dot(u)) < 1e-12);

        const double d1 = fd_exterior_derivative(s, theta1_coefficients, x, u, w);
        const double d2 = fd_exterior_derivative(s, theta2_coefficients, x, u, w);
        CHECK(std::abs(d1 - wt) < 1e-6);
        CHECK(std::abs(d2 - wt) < 1e-6);
    }
}
