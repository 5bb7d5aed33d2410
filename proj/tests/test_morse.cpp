#include "doctest.h"

#include "ihj/morse.hpp"
#include "support.hpp"

using namespace ihj;

namespace {

MorseFamilySpec pontryagin(int n, const std::string& L) {
    MorseFamilySpec mf;
    mf.space = PhaseSpaceDescriptor(n);
    Expression F(0.0);
    for (int i = 0; i < n; ++i)
        F = F + var(mf.space.p()[static_cast<size_t>(i)]) * var(mf.space.qd()[static_cast<size_t>(i)]);
    mf.F = F - parse(L);
    mf.fiber = mf.space.qd();
    return mf;
}

std::vector<Point> E_points(const MorseFamilySpec& mf, unsigned long long seed, int count) {
    Sampler rng(seed);
    std::vector<Point> pts;
    for (const auto& c : sample_critical_set(mf, rng, count)) pts.push_back(lift_to_E(mf, c));
    return pts;
}

bool contains_zero_set(const ImplicitSystem& sys, const std::vector<Expression>& expected,
                       const std::vector<Point>& pts) {
    for (const auto& x : pts)
        if (max_constraint_residual(expected, x) > 1e-9) return false;
    (void)sys;
    return true;
}

}  // namespace

TEST_CASE("critical residual") {
    MorseFamilySpec ex1 = pontryagin(3, "(qd1+qd2)^2/2");
    Point x{{"q1", 0}, {"q2", 0}, {"q3", 0}, {"p1", 4}, {"p2", -1}, {"p3", 2},
            {"qd1", 1}, {"qd2", 2}, {"qd3", 5}};
    Eigen::VectorXd r = critical_residual(ex1, x);
    CHECK(r[0] == 1.0);
    CHECK(r[1] == -4.0);
    CHECK(r[2] == 2.0);

    MorseFamilySpec h = make_family(1, parse("(p1^2+q1^2)/2"), 0);
    CHECK(critical_residual(h, {{"q1", 1}, {"p1", 1}}).size() == 0);

    MorseFamilySpec d = dirac_family(2, parse("(p1^2+q1^2)/2"), {parse("p2 - q1")});
    CHECK(critical_residual(d, {{"q1", 1}, {"q2", 0}, {"p1", 0}, {"p2", 3}, {"lam1", 7}})[0] == 2.0);
}

TEST_CASE("Morse rank") {
    MorseFamilySpec ex1 = pontryagin(3, "(qd1+qd2)^2/2");
    Sampler rng(1);
    for (const auto& x : sample_critical_set(ex1, rng, 30)) {
        MorseRank mr = morse_rank_check(ex1, x);
        CHECK(mr.maximal);
        CHECK(mr.rank == 3);
        CHECK(mr.singular_values.size() == 3);
    }
    MorseFamilySpec ex2 = pontryagin(2, "qd1^2/2 + q2*q1^2");
    for (const auto& x : sample_critical_set(ex2, rng, 30)) {
        MorseRank mr = morse_rank_check(ex2, x);
        CHECK(mr.maximal);
        CHECK(mr.rank == 2);
    }
    MorseFamilySpec flat = make_family(1, parse("lam1"), 1);
    CHECK_THROWS_AS(morse_rank_check(flat, {{"q1", 0}, {"p1", 0}, {"lam1", 0}}), std::domain_error);
    MorseFamilySpec flat2 = make_family(1, parse("lam1^3/3"), 1);
    MorseRank mr = morse_rank_check(flat2, {{"q1", 0.3}, {"p1", 2}, {"lam1", 0}});
    CHECK(mr.rank == 0);
    CHECK_FALSE(mr.maximal);
    MorseRank plain = morse_rank_check(make_family(1, parse("p1^2/2"), 0), {{"q1", 0}, {"p1", 1}});
    CHECK(plain.maximal);
    CHECK(plain.required == 0);
}

TEST_CASE("generate_E on the worked families") {
    MorseFamilySpec ex1 = pontryagin(3, "(qd1+qd2)^2/2");
    ImplicitSystem e1 = generate_E(ex1);
    CHECK(e1.constraints.size() == 6);
    CHECK(e1.multipliers.empty());
    std::vector<Expression> sex1 = {parse("p1 - (qd1+qd2)"), parse("p2 - (qd1+qd2)"), parse("p3"),
                                    parse("pd1"), parse("pd2"), parse("pd3")};
    auto pts = E_points(ex1, 3, 40);
    CHECK(contains_zero_set(e1, sex1, pts));
    // Conversely points of the expected set satisfy E.
    Sampler rng(4);
    for (int t = 0; t < 40; ++t) {
        Point x = rng.point(ex1.space.tulczyjew(), -2, 2);
        x["p1"] = x["p2"] = x["qd1"] + x["qd2"];
        x["p3"] = x["pd1"] = x["pd2"] = x["pd3"] = 0.0;
        CHECK(max_constraint_residual(e1.constraints, x) < 1e-12);
    }

    MorseFamilySpec ex2 = pontryagin(2, "qd1^2/2 + q2*q1^2");
    ImplicitSystem e2 = generate_E(ex2);
    std::vector<Expression> ee2 = {parse("p1 - qd1"), parse("p2"), parse("pd1 - 2*q2*q1"),
                                   parse("pd2 - q1^2")};
    CHECK(contains_zero_set(e2, ee2, E_points(ex2, 5, 40)));
    CHECK(e2.constraints.size() == 4);

    PhaseSpaceDescriptor s(2);
    Expression H = parse("p1^2/2 + p2^2/2 + q1^3*q2 - sin(q2)");
    ImplicitSystem eh = generate_E(make_family(2, H, 0));
    for (int t = 0; t < 50; ++t) {
        Point x = rng.point(s.cotangent(), -2, 2);
        Eigen::VectorXd dH = eval_grad(H, x, s.cotangent());
        for (int i = 0; i < 2; ++i) {
            x[s.qd()[static_cast<size_t>(i)]] = dH[2 + i];
            x[s.pd()[static_cast<size_t>(i)]] = -dH[i];
        }
        CHECK(max_constraint_residual(eh.constraints, x) < 1e-12);
    }
}

TEST_CASE("structural derivatives in E agree with jets") {
    MorseFamilySpec ex2 = pontryagin(2, "qd1^2/2 + q2*q1^2 + sin(q1*qd2)");
    std::mt19937_64 rng(8);
    const VarList vars = ex2.space.tulczyjew();
    for (const auto& v : ex2.total_vars()) {
        Expression d = diff(ex2.F, v);
        for (int t = 0; t < 100; ++t) {
            Point x = testing::random_point(rng, vars);
            Eigen::VectorXd g = eval_grad(ex2.F, x, {v});
            CHECK(std::abs(eval(d, x) - g[0]) < 1e-12);
        }
    }
}

TEST_CASE("solve_fiber") {
    MorseFamilySpec ex1 = pontryagin(3, "(qd1+qd2)^2/2");
    Point base{{"q1", 0}, {"q2", 0}, {"q3", 0}, {"p1", 1.5}, {"p2", 1.5}, {"p3", 0}};
    FiberSolution sol = solve_fiber(ex1, base, Eigen::Vector3d(0, 0, 0));
    REQUIRE(!sol.roots.empty());
    for (const auto& r : sol.roots) {
        CHECK(std::abs(r.lam[0] + r.lam[1] - 1.5) < 1e-9);
        CHECK(r.non_isolated);
    }
    Point off = base;
    off["p2"] = 0.0;
    CHECK(solve_fiber(ex1, off, Eigen::Vector3d(0, 0, 0)).roots.empty());

    MorseFamilySpec d = dirac_family(1, parse("(p1^2+q1^2)/2"), {parse("p1")});
    CHECK(solve_fiber(d, {{"q1", 0.2}, {"p1", 0.5}}, Eigen::VectorXd::Zero(1)).roots.empty());
    FiberSolution on = solve_fiber(d, {{"q1", 0.2}, {"p1", 0.0}}, Eigen::VectorXd::Zero(1));
    REQUIRE(!on.roots.empty());
    CHECK(on.roots[0].non_isolated);

    MorseFamilySpec lin = make_family(1, parse("lam1^2/2 - lam1 + q1*p1"), 1);
    FiberOptions opt;
    opt.grid_per_dim = 0;
    FiberSolution one = solve_fiber(lin, {{"q1", 1}, {"p1", 1}}, Eigen::VectorXd::Constant(1, 5.0), opt);
    REQUIRE(one.roots.size() == 1);
    CHECK(one.roots[0].lam[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(one.roots[0].non_isolated);
}

TEST_CASE("Lagrangian closure") {
    PhaseSpaceDescriptor s1(1);
    std::mt19937_64 rng(2);
    auto on_set = [&]() {
        std::vector<Point> pts;
        for (int t = 0; t < 30; ++t) {
            Point x = testing::random_point(rng, s1.tulczyjew());
            x["qd1"] = x["p1"];
            x["pd1"] = -x["q1"];
            pts.push_back(x);
        }
        return pts;
    };
    ImplicitSystem ho{s1.tulczyjew(), {}, {parse("qd1 - p1"), parse("pd1 + q1")}, "ho"};
    ClosureReport r = lagrangian_closure_check(s1, ho, on_set());
    CHECK(r.pass);
    CHECK(r.max_violation == 0.0);

    ImplicitSystem bad{s1.tulczyjew(), {}, {parse("qd1 - p1"), parse("pd1 + q1 + q1*p1")}, "bad"};
    std::vector<Point> pts;
    for (int t = 0; t < 30; ++t) {
        Point x = testing::random_point(rng, s1.tulczyjew());
        x["qd1"] = x["p1"];
        x["pd1"] = -x["q1"] - x["q1"] * x["p1"];
        pts.push_back(x);
    }
    ClosureReport rb = lagrangian_closure_check(s1, bad, pts);
    CHECK_FALSE(rb.pass);
    CHECK(rb.max_violation > 1e-3);

    ImplicitSystem short_sys{s1.tulczyjew(), {}, {parse("qd1 - p1")}, "short"};
    ClosureReport rs = lagrangian_closure_check(s1, short_sys, on_set());
    CHECK_FALSE(rs.count_ok);
    CHECK_FALSE(rs.pass);

    Point off{{"q1", 0}, {"p1", 1}, {"qd1", 0}, {"pd1", 0}};
    CHECK_THROWS_AS(lagrangian_closure_check(s1, ho, {off}), std::invalid_argument);
}

TEST_CASE("Morse-generated systems are Lagrangian") {
    std::vector<MorseFamilySpec> families = {
        pontryagin(3, "(qd1+qd2)^2/2"),
        pontryagin(2, "qd1^2/2 + q2*q1^2"),
        dirac_family(2, parse("(p1^2+q1^2)/2"), {parse("p2")}),
        dirac_family(2, parse("(p1^2+p2^2)/2 + q1*q2"), {parse("p1 - q2^2")}),
        make_family(1, parse("(p1^2+q1^2)/2"), 0),
    };
    unsigned long long seed = 21;
    for (const auto& mf : families) {
        ImplicitSystem e = generate_E(mf);
        ClosureReport r = lagrangian_closure_check(mf.space, e, E_points(mf, seed++, 50));
        CHECK(r.points == 50);
        CHECK(r.pass);
        CHECK(r.max_violation < 1e-9);
    }
}

TEST_CASE("Dirac family") {
    MorseFamilySpec d = dirac_family(2, parse("(p1^2+q1^2)/2"), {parse("p2")});
    ImplicitSystem e = generate_E(d);
    CHECK(e.multipliers == VarList{"lam1"});
    std::vector<Expression> expected = {parse("qd1 - p1"), parse("qd2 - lam1"), parse("pd1 + q1"),
                                        parse("pd2"), parse("p2")};
    CHECK(contains_zero_set(e, expected, E_points(d, 6, 30)));

    MorseFamilySpec plain = dirac_family(1, parse("(p1^2+q1^2)/2"), {});
    CHECK(plain.k() == 0);

    Expression H = parse("(p1^2+q1^2)/2 - 1");
    MorseFamilySpec scaled = dirac_family(1, H, {H});
    for (const auto& x : E_points(scaled, 7, 20)) {
        CHECK(std::abs(eval(H, x)) < 1e-9);
        CHECK(std::abs(x.at("qd1") - (1 + x.at("lam1")) * x.at("p1")) < 1e-9);
    }
}
