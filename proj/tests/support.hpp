#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ihj/expr.hpp"

namespace ihj::testing {

inline const std::vector<std::string>& expression_corpus() {
    static const std::vector<std::string> corpus = {
        "(qd1+qd2)^2/2",
        "p1*qd1",
        "q1^2+q2",
        "p1*qd1 - (1/2)*(qd1+qd2)^2",
        "p1*qd1 + p2*qd2 + p3*qd3 - (qd1+qd2)^2/2",
        "qd1^2/2 + q2*q1^2",
        "p1*qd1 + p2*qd2 - qd1^2/2 - q2*q1^2",
        "(q1^2 + p1^2)/2",
        "sin(q1)*cos(p1)",
        "exp(q1*p1) - 1",
        "ln(2 + q1^2) * p2",
        "sqrt(1 + p1^2 + q2^2)",
        "1/(2 + cos(q1))",
        "q1*q2*q3 - p1*p2*p3",
        "(q1 - p2)^3 + 4*q2",
        "-q1^2 + 3*q1*p1 - p1^2",
        "q1^-2 + 1",
        "exp(-q1^2/2)*sin(3*p1)",
        "(p1 + p2)^2/(1 + q1^2)",
        "cos(q1 + q2)^2 + sin(q1 - q2)^2",
        "lam1*p1 + (p1^2 + q1^2)/2",
        "p1*lam1*q2 + p2*lam1*q1",
        "q1^4 - 2*q1^2*p1 + p1^3",
        "sqrt(4 + (qd1 - qd2)^2)*q1",
        "ln(exp(q1) + exp(p1))",
        "(qd1*pd1 - qd2*pd2)^2",
        "pd1*q1 + pd2*q2 - qd1*p1 - qd2*p2",
        "sin(q1)^3*cos(q2)^2",
        "(q1 + 2*q2 - 3*p1)/(5 + p2^2)",
        "mu1*(q1 - 0.5) + mu2*(q2 + 0.25)",
        "qb1*q1 - qb2*q2 + (q1 - qb1)^2/4",
        "- -q1 + -(p1*2)",
        "2.5e-1*q1^3 - .5*p1",
    };
    return corpus;
}

inline std::vector<std::string> corpus_variables() {
    return {"q1", "q2", "q3", "p1", "p2", "p3", "qd1", "qd2", "qd3",
            "pd1", "pd2", "lam1", "mu1", "mu2", "qb1", "qb2"};
}

// Samples away from the singular sets of the corpus (q1 = 0 for q1^-2).
inline Point random_corpus_point(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    Point x;
    for (const auto& v : corpus_variables()) x[v] = u(rng);
    if (std::abs(x["q1"]) < 0.3) x["q1"] = x["q1"] < 0 ? -0.3 - std::abs(x["q1"]) : 0.3 + x["q1"];
    return x;
}

inline Point random_point(std::mt19937_64& rng, const VarList& vars, double lo = -2.0,
                          double hi = 2.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Point x;
    for (const auto& v : vars) x[v] = u(rng);
    return x;
}

// Random polynomial of total degree <= max_degree with small integer coefficients.
inline Expression random_polynomial(std::mt19937_64& rng, const VarList& vars, int max_degree,
                                    int terms = 5) {
    std::uniform_int_distribution<int> coef(-3, 3);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(vars.size()) - 1);
    std::uniform_int_distribution<int> deg(0, max_degree);
    Expression out(0.0);
    for (int t = 0; t < terms; ++t) {
        int c = coef(rng);
        if (c == 0) c = 1;
        Expression mono(static_cast<double>(c));
        int d = deg(rng);
        for (int i = 0; i < d; ++i) mono = mono * var(vars[static_cast<size_t>(pick(rng))]);
        out = out + mono;
    }
    return out;
}

// (n, L) pairs: both degenerate examples, regular and gyroscopic systems.
inline std::vector<std::pair<int, std::string>> lagrangian_corpus() {
    return {
        {3, "(qd1+qd2)^2/2"},
        {2, "qd1^2/2 + q2*q1^2"},
        {1, "qd1^2/2"},
        {1, "qd1^2/2 + cos(q1)"},
        {2, "(qd1^2 + qd2^2)/2 - q1*q2"},
        {2, "qd1^2/2 + q1*qd2 - q2^2/2"},
        {2, "(1 + q2^2)*qd1^2/2 + qd1*qd2 + qd2^2 - q1^2/2"},
    };
}

}  // namespace ihj::testing
