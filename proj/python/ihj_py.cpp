#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ihj/commands.hpp"
#include "ihj/expr.hpp"
#include "ihj/hj.hpp"
#include "ihj/lagrangian.hpp"

namespace py = pybind11;
using namespace ihj;

namespace {

OneFormSpec oneform(const std::vector<std::string>& gamma) {
    OneFormSpec g;
    for (const auto& t : gamma) g.gamma.push_back(parse(t));
    return g;
}

std::vector<std::string> strings(const std::vector<Expression>& es) {
    std::vector<std::string> out;
    for (const auto& e : es) out.push_back(to_string(e));
    return out;
}

std::vector<std::string> strings(const OneFormSpec& g) { return strings(g.gamma); }

}  // namespace

PYBIND11_MODULE(_ihj, m) {
    m.doc() = "Implicit Hamilton-Jacobi toolkit";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<FileError>(m, "FileError", PyExc_ValueError);

    py::class_<Expression>(m, "Expression")
        .def(py::init([](const std::string& text) { return parse(text); }), py::arg("text"))
        .def(py::init<double>(), py::arg("value"))
        .def("__str__", [](const Expression& e) { return to_string(e); })
        .def("__repr__", [](const Expression& e) { return "Expression('" + to_string(e) + "')"; })
        .def("__call__", [](const Expression& e, const Point& x) { return eval(e, x); }, py::arg("point"))
        .def("eval", [](const Expression& e, const Point& x) { return eval(e, x); }, py::arg("point"))
        .def("diff", [](const Expression& e, const std::string& v) { return diff(e, v); }, py::arg("var"))
        .def("expand", [](const Expression& e) { return expand_polynomial(e); })
        .def("gradient",
             [](const Expression& e, const Point& x, const VarList& vars) {
                 const Eigen::VectorXd g = eval_grad(e, x, vars);
                 return std::vector<double>(g.data(), g.data() + g.size());
             },
             py::arg("point"), py::arg("vars"))
        .def("equals", [](const Expression& a, const Expression& b) { return structurally_equal(a, b); })
        .def_property_readonly("free_vars", &Expression::free_vars)
        .def_property_readonly("is_constant", &Expression::is_constant)
        .def(py::self + py::self)
        .def(py::self - py::self)
        .def(py::self * py::self)
        .def(py::self / py::self)
        .def(-py::self);

    m.def("parse", [](const std::string& text) { return parse(text); }, py::arg("text"));

    py::class_<GotayNesterResult>(m, "GotayNesterResult")
        .def_readonly("affine", &GotayNesterResult::affine)
        .def_readonly("regular", &GotayNesterResult::regular)
        .def_property_readonly("primary", [](const GotayNesterResult& r) { return strings(r.primary); })
        .def_property_readonly("secondary", [](const GotayNesterResult& r) { return strings(r.secondary); })
        .def_property_readonly("final", [](const GotayNesterResult& r) { return strings(r.final_constraints()); })
        .def_property_readonly("h1", [](const GotayNesterResult& r) { return to_string(r.h1); })
        .def_readonly("h1_well_defined", &GotayNesterResult::h1_well_defined)
        .def_property_readonly("solvability",
                               [](const GotayNesterResult& r) {
                                   std::vector<double> out;
                                   for (const auto& l : r.levels) out.push_back(l.solvability_residual);
                                   return out;
                               })
        .def_readonly("stabilized_at", &GotayNesterResult::stabilized_at)
        .def_readonly("empty", &GotayNesterResult::empty)
        .def_readonly("stratified", &GotayNesterResult::stratified)
        .def_readonly("notes", &GotayNesterResult::notes);

    m.def(
        "gotay_nester", [](int n, const std::string& L) { return gotay_nester(make_lagrangian(n, parse(L))); },
        py::arg("n"), py::arg("lagrangian"), "Constraint algorithm for the Lagrangian L(q, qd) on n coordinates.");

    py::class_<OneFormCandidate>(m, "OneFormCandidate")
        .def_property_readonly("gamma", [](const OneFormCandidate& c) { return strings(c.gamma); })
        .def_property_readonly("directions",
                               [](const OneFormCandidate& c) {
                                   std::vector<std::vector<std::string>> out;
                                   for (const auto& d : c.directions) out.push_back(strings(d));
                                   return out;
                               })
        .def_property_readonly("locus", [](const OneFormCandidate& c) { return strings(c.locus); })
        .def_readonly("residual", &OneFormCandidate::residual)
        .def_readonly("verify_residual", &OneFormCandidate::verify_residual);

    py::class_<SearchResult>(m, "SearchResult")
        .def_readonly("candidates", &SearchResult::candidates)
        .def_readonly("best_residual", &SearchResult::best_residual);

    m.def(
        "search_oneform",
        [](int n, const std::string& L, int degree, unsigned long long seed) {
            SearchOptions opt;
            opt.degree = degree;
            opt.seed = seed;
            return search_oneform(pontryagin_family(make_lagrangian(n, parse(L))), opt);
        },
        py::arg("n"), py::arg("lagrangian"), py::arg("degree") = 0, py::arg("seed") = kDefaultSeed,
        "Closed polynomial one-forms solving the Hamilton-Jacobi problem of the Pontryagin family of L.");

    py::class_<VerifyResult>(m, "VerifyResult")
        .def_readonly("passes_globally", &VerifyResult::global)
        .def_property_readonly("locus", [](const VerifyResult& v) { return strings(v.locus); })
        .def_property_readonly("passes_on_locus", [](const VerifyResult& v) {
            return !v.locus.empty() && v.locus_report.pass();
        });

    m.def(
        "verify_oneform",
        [](int n, const std::string& L, const std::vector<std::string>& gamma) {
            return verify_oneform(pontryagin_family(make_lagrangian(n, parse(L))), oneform(gamma));
        },
        py::arg("n"), py::arg("lagrangian"), py::arg("gamma"));

    py::class_<Report>(m, "Report")
        .def_readonly("command", &Report::command)
        .def_readonly("exit_code", &Report::exit_code)
        .def_readonly("human", &Report::human)
        .def("serialize", &Report::serialize);

    m.def(
        "run_command",
        [](const std::string& command, const std::string& path, std::optional<unsigned long long> seed,
           std::optional<double> tol, std::optional<int> search_degree, bool verify) {
            CommandOptions opt;
            opt.seed = seed;
            opt.tol = tol;
            opt.search_degree = search_degree;
            opt.verify = verify;
            return run_command(command, path, opt);
        },
        py::arg("command"), py::arg("path"), py::arg("seed") = py::none(), py::arg("tol") = py::none(),
        py::arg("search_degree") = py::none(), py::arg("verify") = false);
}
