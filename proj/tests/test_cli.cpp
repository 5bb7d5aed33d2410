#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <string>

#include "ihj/commands.hpp"

using namespace ihj;

namespace {

std::string fixture(const std::string& name) { return std::string(IHJ_FIXTURES) + "/" + name; }

const ReportNode* child(const ReportNode& n, const std::string& key) {
    for (const auto& c : n.children)
        if (c.key == key) return &c;
    return nullptr;
}

std::string value(const Report& r, const std::string& key) {
    const ReportNode* n = child(r.root, key);
    return n ? n->value : "<missing>";
}

int file_error_line(const std::string& text) {
    try {
        parse_system_file(text);
    } catch (const FileError& e) {
        return e.line();
    }
    return -1;
}

std::string temp_file(const std::string& text) {
    const std::string path = "ihj_cli_test_input.ihj";
    std::ofstream(path, std::ios::binary) << text;
    return path;
}

const char* kSumVelocity = R"([space]
n = 3
[lagrangian]
L = (qd1 + qd2)^2/2
[oneform]
gamma1 = c
gamma2 = c
gamma3 = 0
[params]
c = 1.0
)";

}  // namespace

TEST_CASE("system file sections and parameters") {
    SystemFile f = parse_system_file(kSumVelocity, "sum");
    CHECK(f.n == 3);
    CHECK(f.dynamics == Dynamics::Lagrangian);
    REQUIRE(f.oneform);
    CHECK(to_string(f.oneform->gamma[0]) == "1");
    CHECK(to_string(f.oneform->gamma[2]) == "0");
    CHECK(f.params.at("c") == 1.0);
    CHECK(f.sampling.seed == kDefaultSeed);
    CHECK(f.digest.size() == 16);

    SystemFile m = parse_system_file("[space]\nn = 1\n[morse]\nfiber = lam1\nF = lam1*p1 + q1^2\n"
                                     "[sampling]\nseed = 7\ntol = 1e-7\nlo = -1\nhi = 1\ncount = 5\n");
    CHECK(m.morse.k() == 1);
    CHECK(m.sampling.seed == 7);
    CHECK(m.sampling.tol.residual == 1e-7);
    CHECK(m.sampling.count == 5);

    SystemFile h = parse_system_file("[space]\nn = 2\n[hamiltonian]\nH = p1^2/2\nconstraint = p2\n");
    CHECK(h.family().k() == 1);
    SystemFile i = parse_system_file("[space]\nn = 1\n[ide]\nconstraint = qd1 - p1\nconstraint = pd1 + q1\n");
    CHECK(i.ide_state == VarList{"q1", "p1"});
    CHECK_THROWS_AS(i.family(), std::invalid_argument);
}

TEST_CASE("system file errors carry their location") {
    CHECK(file_error_line("[space]\nn = 1\n[lagrangian\nL = qd1^2\n") == 3);
    CHECK(file_error_line("[space]\nn = 1\n[weird]\n") == 3);
    CHECK(file_error_line("n = 1\n") == 1);
    CHECK(file_error_line("[space]\nn = 1\n[lagrangian]\nL = qd1^2\n[morse]\nF = q1\n") == 5);
    CHECK(file_error_line("[space]\nn = 1\n[lagrangian]\nL = qd2^2\n") == 4);
    CHECK(file_error_line("[space]\nn = 1\n[lagrangian]\nL = qd1^2\nM = 1\n") == 5);
    CHECK(file_error_line("[space]\nn = 1\n[lagrangian]\nL = qd1^2\n[oneform]\ngamma1 = p1\n") == 6);
    CHECK(file_error_line("[space]\nn = one\n[lagrangian]\nL = qd1\n") == 2);
    CHECK(file_error_line("[space]\nn = 1\n") == 1);
    CHECK(file_error_line("[space]\nn = 1\n[morse]\nfiber = x\nF = x\n") == 4);
    CHECK(file_error_line("[space]\nn = 1\n[lagrangian]\nL = qd1\n[params]\nq1 = 2\n") == 6);
    try {
        parse_system_file("[space]\nn = 1\n[lagrangian]\nL = qd1^2 + * 2\n");
        FAIL("expected a parse error");
    } catch (const FileError& e) {
        CHECK(e.line() == 4);
        CHECK(e.column() > 5);
    }
}

TEST_CASE("report serialization") {
    Report r;
    r.root.add("command", "x");
    ReportNode& c = r.root.add("checks");
    c.item("a").add("pass", "true");
    r.root.add("result", "pass");
    CHECK(r.serialize() == "report-version 1\ncommand x\nchecks\n  - a\n    pass true\nresult pass\n");
    CHECK(format_residual(0.0) == "0");
    CHECK(format_residual(1e-20) == "<1e-13");
    CHECK(format_residual(0.125) == "1.250e-01");
    CHECK(format_number(-2.0) == "-2");
    CHECK(format_number(1e-15) == "0");
    CHECK(format_residual(INFINITY) == "inf");
}

TEST_CASE("check command") {
    Report ok = cmd_check(parse_system_file(kSumVelocity, "sum"));
    CHECK(ok.exit_code == kExitPass);
    CHECK(value(ok, "result") == "pass");

    std::string bad = kSumVelocity;
    bad.replace(bad.find("gamma1 = c"), 10, "gamma1 = q2");
    Report nc = cmd_check(parse_system_file(bad, "bad"));
    CHECK(nc.exit_code == kExitFail);
    const ReportNode* checks = child(nc.root, "checks");
    REQUIRE(checks);
    bool closed_failed = false;
    for (const auto& c : checks->children)
        if (c.value == "closedness") closed_failed = child(c, "pass")->value == "false";
    CHECK(closed_failed);

    Report malformed = run_command("check", temp_file("[space]\nn = 1\n[lagrangian\n"));
    CHECK(malformed.exit_code == kExitInput);
    CHECK(value(malformed, "error").find("line 3") != std::string::npos);
    CHECK(run_command("check", "no/such/file.ihj").exit_code == kExitInput);
    std::remove("ihj_cli_test_input.ihj");
}

TEST_CASE("integrability command") {
    Report ode = cmd_integrability(
        parse_system_file("[space]\nn = 1\n[ide]\nconstraint = qd1 - p1\nconstraint = pd1 + q1\n"));
    CHECK(value(ode, "stabilized_at") == "0");
    CHECK(ode.exit_code == kExitPass);

    Report ex = run_command("integrability", fixture("integrability.ihj"));
    CHECK(value(ex, "stabilized_at") == "1");
    CHECK(ex.exit_code == kExitPass);

    Report flagged = run_command("integrability", fixture("nonintegrable.ihj"));
    CHECK(value(flagged, "affine") == "false");
    CHECK(flagged.exit_code == kExitFail);
    const ReportNode* pw = child(flagged.root, "pointwise");
    REQUIRE(pw);
    CHECK(std::stoi(child(*pw, "flagged")->value) > 0);

    CHECK(run_command("integrability", fixture("sum-velocity.ihj")).exit_code == kExitInput);
}

TEST_CASE("hj command") {
    Report v = run_command("hj", fixture("vanishing-momentum.ihj"), {std::nullopt, std::nullopt, std::nullopt, true});
    CHECK(v.exit_code == kExitPass);
    CHECK(value(v, "locus") == "q1");
    CHECK(child(*child(v.root, "global"), "pass")->value == "false");

    CommandOptions search;
    search.search_degree = 0;
    Report s = run_command("hj", fixture("sum-velocity.ihj"), search);
    CHECK(s.exit_code == kExitPass);
    const ReportNode* cands = child(s.root, "candidates");
    REQUIRE(cands);
    CHECK(cands->value == "1");
    CHECK(child(cands->children.front(), "directions")->children.front().value == "(1, 1, 0)");

    Report none = run_command("hj", fixture("oscillator.ihj"), search);
    CHECK(none.exit_code == kExitFail);
    CHECK(value(none, "candidates") == "0");
    CHECK(value(none, "best_residual") != "0");

    CHECK(run_command("hj", fixture("oscillator.ihj"), {std::nullopt, std::nullopt, std::nullopt, true}).exit_code ==
          kExitInput);
}

TEST_CASE("gotay-nester command") {
    Report e2 = run_command("gotay-nester", fixture("vanishing-momentum.ihj"));
    CHECK(value(e2, "primary") == "p2");
    CHECK(value(e2, "secondary") == "q1; p1");
    CHECK(value(e2, "stabilized_at") == "3");
    Report e1 = run_command("gotay-nester", fixture("sum-velocity.ihj"));
    CHECK(value(e1, "primary") == "p1 - p2; p3");
    CHECK(value(e1, "secondary") == "none");

    Report reg = cmd_gotay_nester(parse_system_file("[space]\nn = 1\n[lagrangian]\nL = qd1^2/2 - q1^2/2\n"));
    CHECK(value(reg, "stabilized_at") == "1");
    const ReportNode* notes = child(reg.root, "notes");
    REQUIRE(notes);
    REQUIRE(notes->children.size() == 1);
    CHECK(notes->children.front().value == "M1 = T*Q; algorithm stabilizes at level 1");

    Report na = cmd_gotay_nester(parse_system_file("[space]\nn = 1\n[lagrangian]\nL = qd1^4/4\n"));
    CHECK(value(na, "affine") == "false");
    CHECK(na.exit_code == kExitFail);
}

TEST_CASE("complete command") {
    const char* text = "[space]\nn = 1\n[hamiltonian]\nH = p1\n[complete]\nW = q1*qb1 + q1^2\n";
    Report r = cmd_complete(parse_system_file(text));
    CHECK(value(r, "result") == "fail");
    Report ok = cmd_complete(parse_system_file("[space]\nn = 1\n[hamiltonian]\nH = p1\n[complete]\nW = q1*qb1\n"));
    CHECK(ok.exit_code == kExitPass);
}

TEST_CASE("seed and tolerance overrides are echoed and deterministic") {
    CommandOptions o;
    o.seed = 99;
    o.tol = 1e-8;
    o.search_degree = 0;
    Report a = run_command("hj", fixture("sum-velocity.ihj"), o);
    Report b = run_command("hj", fixture("sum-velocity.ihj"), o);
    CHECK(value(a, "seed") == "99");
    CHECK(child(*child(a.root, "tolerances"), "tol")->value == "1e-08");
    CHECK(a.serialize() == b.serialize());
}
