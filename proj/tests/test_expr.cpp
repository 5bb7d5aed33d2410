#include "doctest.h"

#include <random>

#include "ihj/expr.hpp"
#include "support.hpp"

using namespace ihj;

TEST_CASE("parse collects free variables") {
    Expression e = parse("p1*qd1 - (1/2)*(qd1+qd2)^2");
    CHECK(e.free_vars() == VarList{"p1", "qd1", "qd2"});
    Expression c = parse("0");
    CHECK(c.free_vars().empty());
    CHECK(c.is_zero());
}

TEST_CASE("parse errors carry positions") {
    try {
        parse("q1*(");
        FAIL("expected a parse error");
    } catch (const ParseError& err) {
        CHECK(err.line() == 1);
        CHECK(err.column() == 4);
    }
    try {
        parse("q1 +\n  foo(q2)");
        FAIL("expected a parse error");
    } catch (const ParseError& err) {
        CHECK(err.line() == 2);
        CHECK(err.column() == 3);
        CHECK(std::string(err.what()).find("unknown function") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("q1^1.5"), ParseError);
    CHECK_THROWS_AS(parse("q1^q2"), ParseError);
    CHECK_THROWS_AS(parse("q1 q2"), ParseError);
    CHECK_THROWS_AS(parse(""), ParseError);
    CHECK_THROWS_AS(parse("sin"), ParseError);
}

TEST_CASE("comments and whitespace") {
    Expression e = parse("  q1 # trailing comment\n + 2 # another\n");
    CHECK(eval(e, {{"q1", 1.0}}) == doctest::Approx(3.0));
}

TEST_CASE("eval") {
    CHECK(eval(parse("q1^2+q2"), {{"q1", 2.0}, {"q2", 1.0}}) == 5.0);
    CHECK(eval(parse("sin(0)"), {}) == 0.0);
    CHECK_THROWS_AS(eval(parse("1/q1"), {{"q1", 0.0}}), DomainError);
    CHECK_THROWS_AS(eval(parse("ln(q1)"), {{"q1", 0.0}}), DomainError);
    CHECK_THROWS_AS(eval(parse("sqrt(q1)"), {{"q1", -1.0}}), DomainError);
    CHECK_THROWS_AS(eval(parse("q1"), {}), std::invalid_argument);
    CHECK(eval(parse("-q1^2"), {{"q1", 3.0}}) == -9.0);
    CHECK(eval(parse("2^-2"), {}) == 0.25);
    CHECK(eval(parse("8/2/2"), {}) == 2.0);
    CHECK(eval(parse("8-2-2"), {}) == 4.0);
}

TEST_CASE("jets on worked examples") {
    Jet2 j = eval_jet2(parse("(qd1+qd2)^2/2"), {{"qd1", 1.0}, {"qd2", 2.0}}, {"qd1", "qd2"});
    CHECK(j.value() == 4.5);
    CHECK(j.grad()[0] == 3.0);
    CHECK(j.grad()[1] == 3.0);
    CHECK(j.hess(0, 0) == 1.0);
    CHECK(j.hess(0, 1) == 1.0);
    CHECK(j.hess(1, 0) == 1.0);
    CHECK(j.hess(1, 1) == 1.0);

    Jet2 b = eval_jet2(parse("p1*qd1"), {{"p1", 2.0}, {"qd1", 3.0}}, {"p1", "qd1"});
    CHECK(b.grad()[0] == 3.0);
    CHECK(b.grad()[1] == 2.0);
    CHECK(b.hess_matrix() == (Eigen::Matrix2d() << 0, 1, 1, 0).finished());

    Jet2 empty = eval_jet2(parse("q1^2"), {{"q1", 3.0}}, {});
    CHECK(empty.value() == 9.0);
    CHECK(empty.size() == 0);
}

TEST_CASE("finite difference oracle") {
    CHECK(std::abs(finite_diff_grad(parse("q1^2"), {{"q1", 1.0}}, {"q1"})[0] - 2.0) < 1e-9);
    CHECK(std::abs(finite_diff_grad(parse("exp(q1)"), {{"q1", 0.0}}, {"q1"})[0] - 1.0) < 1e-9);
    CHECK_THROWS_AS(finite_diff_grad(parse("q1"), {{"q1", 0.0}}, {"q1"}, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(finite_diff_grad(parse("sqrt(q1)"), {{"q1", 0.0}}, {"q1"}), DomainError);
}

TEST_CASE("jets agree with finite differences on the corpus") {
    std::mt19937_64 rng(7);
    const VarList vars = testing::corpus_variables();
    for (const auto& text : testing::expression_corpus()) {
        Expression e = parse(text);
        const VarList& active = e.free_vars();
        for (int k = 0; k < 100; ++k) {
            Point x = testing::random_corpus_point(rng);
            Jet2 j = eval_jet2(e, x, active);
            Eigen::VectorXd fd = finite_diff_grad(e, x, active);
            for (int i = 0; i < j.size(); ++i) {
                INFO(text);
                CHECK(std::abs(j.grad()[i] - fd[i]) / (1.0 + std::abs(j.grad()[i])) < 1e-6);
            }
            // Hessian columns against differences of jet gradients.
            const double h = 1e-5;
            for (size_t c = 0; c < active.size(); ++c) {
                Point xp = x, xm = x;
                xp[active[c]] += h;
                xm[active[c]] -= h;
                Eigen::VectorXd col =
                    (eval_grad(e, xp, active) - eval_grad(e, xm, active)) / (2.0 * h);
                for (int r = 0; r < j.size(); ++r) {
                    INFO(text);
                    CHECK(std::abs(j.hess(r, static_cast<int>(c)) - col[r]) /
                              (1.0 + std::abs(j.hess(r, static_cast<int>(c)))) <
                          1e-6);
                }
            }
        }
    }
}

TEST_CASE("print then parse is a fixed point") {
    for (const auto& text : testing::expression_corpus()) {
        Expression once = parse(text);
        Expression twice = parse(to_string(once));
        INFO(text << " -> " << to_string(once));
        CHECK(structurally_equal(once, twice));
        CHECK(to_string(once) == to_string(twice));
    }
    CHECK(to_string(parse("a-(b-c)")) == "a - (b - c)");
    CHECK(to_string(parse("(-x)^2")) == "(-x)^2");
    CHECK(to_string(parse("-x^2")) == "-x^2");
    CHECK(to_string(parse("x^-2")) == "x^-2");
}

TEST_CASE("structural derivative matches jets") {
    std::mt19937_64 rng(11);
    for (const auto& text : testing::expression_corpus()) {
        Expression e = parse(text);
        for (int k = 0; k < 20; ++k) {
            Point x = testing::random_corpus_point(rng);
            Jet2 j = eval_jet2(e, x, e.free_vars());
            for (size_t i = 0; i < e.free_vars().size(); ++i) {
                Expression d = diff(e, e.free_vars()[i]);
                INFO(text << " d/d" << e.free_vars()[i]);
                CHECK(std::abs(eval(d, x) - j.grad()[static_cast<int>(i)]) <
                      1e-12 * (1.0 + std::abs(j.grad()[static_cast<int>(i)])));
            }
        }
    }
    CHECK(diff(parse("q1*q2"), "p1").is_zero());
}

TEST_CASE("substitution") {
    Expression e = substitute(parse("p1*qd1 - qd1^2/2"), {{"p1", parse("qd1 + 1")}});
    CHECK(eval(e, {{"qd1", 2.0}}) == doctest::Approx(4.0));
    CHECK_THROWS_AS(require_vars(parse("q1 + z"), {"q1"}, "H"), std::invalid_argument);
}

TEST_CASE("polynomial expansion and constraint normalization") {
    CHECK(to_string(expand_polynomial(parse("(q1 + p1)^2 - q1*(q1 - 1)"))) == "p1^2 + 2*p1*q1 + q1");
    CHECK(to_string(expand_polynomial(parse("qd1*qd1 - (qd1^2/2 + q2*q1^2)"))) == "-q1^2*q2 + 0.5*qd1^2");
    CHECK(to_string(expand_polynomial(parse("x - x + 3"))) == "3");
    CHECK(expand_polynomial(parse("q1 - q1")).is_zero());
    CHECK(structurally_equal(expand_polynomial(parse("sin(q1)*2")), parse("sin(q1)*2")));
    CHECK(to_string(normalize_constraint(parse("-2*p2 + 2*p1"))) == "p1 - p2");
    CHECK(to_string(normalize_constraint(parse("-3*q1^2*p2"))) == "p2*q1");
    CHECK(to_string(normalize_constraint(parse("q1^2"))) == "q1");
    CHECK(to_string(normalize_constraint(parse("4"))) == "1");
    std::mt19937_64 rng(41);
    for (int t = 0; t < 50; ++t) {
        Expression e = testing::random_polynomial(rng, {"q1", "q2", "p1"}, 3, 6) *
                       testing::random_polynomial(rng, {"q1", "p1"}, 2, 3);
        Expression x = expand_polynomial(e);
        Point pt = testing::random_point(rng, {"q1", "q2", "p1"});
        CHECK(eval(x, pt) == doctest::Approx(eval(e, pt)).epsilon(1e-12));
    }
}
