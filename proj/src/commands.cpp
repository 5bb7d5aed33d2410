#include "ihj/commands.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ihj/ide.hpp"

namespace ihj {

namespace {

SamplingConfig effective(const SystemFile& f, const CommandOptions& opt) {
    SamplingConfig sc = f.sampling;
    if (opt.seed) sc.seed = *opt.seed;
    if (opt.tol) sc.tol.residual = *opt.tol;
    return sc;
}

Report start(const std::string& command, const SystemFile& f, const SamplingConfig& sc) {
    Report r;
    r.command = command;
    r.root.add("command", command);
    r.root.add("file", f.name.empty() ? "-" : f.name);
    r.root.add("digest", f.digest);
    r.root.add("dynamics", to_string(f.dynamics));
    r.root.add("n", std::to_string(f.n));
    r.root.add("seed", std::to_string(sc.seed));
    ReportNode& tol = r.root.add("tolerances");
    tol.add("tol", format_number(sc.tol.residual));
    tol.add("tol_crit", format_number(sc.tol.crit));
    tol.add("tol_rank", format_number(sc.tol.rank));
    tol.add("fd_step", format_number(sc.tol.fd_step));
    ReportNode& box = r.root.add("sampling");
    box.add("lo", format_number(sc.lo));
    box.add("hi", format_number(sc.hi));
    box.add("count", std::to_string(sc.count));
    box.add("scope", "statements hold on the sampled box");
    r.human.push_back("ihj " + command + " " + (f.name.empty() ? "-" : f.name));
    return r;
}

void finish(Report& r, bool pass) {
    r.root.add("result", pass ? "pass" : "fail");
    r.exit_code = pass ? kExitPass : kExitFail;
    r.human.push_back(std::string("result: ") + (pass ? "pass" : "fail"));
}

void human_checks(Report& r, const DiagnosticsReport& rep, const std::string& prefix = "") {
    for (const auto& c : rep.checks)
        r.human.push_back("  " + prefix + c.name + ": " + (c.pass ? "PASS" : "FAIL") + " (max residual " +
                          format_residual(c.max_residual) + ")");
}

std::vector<Point> box_points(const VarList& vars, int count, Sampler& rng, double lo, double hi) {
    std::vector<Point> out;
    for (int i = 0; i < count; ++i) out.push_back(rng.point(vars, lo, hi));
    return out;
}

std::string format_form(const OneFormSpec& g) {
    std::string out;
    for (const auto& e : g.gamma) out += (out.empty() ? "" : ", ") + to_string(e);
    return "(" + out + ")";
}

MorseFamilySpec require_family(const SystemFile& f, const std::string& command) {
    if (f.dynamics == Dynamics::Ide)
        throw std::invalid_argument(command + " needs a [morse], [lagrangian] or [hamiltonian] section");
    return f.family();
}

}  // namespace

Report cmd_check(const SystemFile& f, const CommandOptions& opt) {
    const SamplingConfig sc = effective(f, opt);
    Report r = start("check", f, sc);
    ReportNode& checks = r.root.add("checks");
    bool pass = true;
    auto add = [&](const CheckResult& c, const std::vector<std::pair<std::string, std::string>>& extra) {
        ReportNode& n = checks.item(c.name);
        n.add("pass", format_bool(c.pass));
        n.add("max_residual", format_residual(c.max_residual));
        n.add("worst_sample", std::to_string(c.worst));
        for (const auto& [k, v] : extra) n.add(k, v);
        r.human.push_back("  " + c.name + ": " + (c.pass ? "PASS" : "FAIL") + " (max residual " +
                          format_residual(c.max_residual) + ")");
        pass = pass && c.pass;
    };
    Sampler rng(sc.seed);

    if (f.dynamics == Dynamics::Ide) {
        const VarList tm = [&] {
            VarList v = f.ide_state;
            for (const auto& x : f.ide_state) v.push_back(velocity_name(x));
            return v;
        }();
        const auto pts = sample_zero_set(f.ide_constraints, tm, {sc.count, sc.lo, sc.hi, 1e-12});
        double worst = 0.0;
        for (const auto& x : pts) worst = std::max(worst, max_constraint_residual(f.ide_constraints, x));
        add({"feasible", !pts.empty(), pts.empty() ? INFINITY : worst, -1}, {{"samples", std::to_string(pts.size())}});
    } else {
        const MorseFamilySpec mf = f.family();
        const auto crit = sample_critical_set(mf, rng, sc.count, sc.lo, sc.hi, 1e-12);
        CheckResult mr{"morse-rank", !crit.empty(), 0.0, -1};
        double min_sigma = INFINITY;
        for (size_t i = 0; i < crit.size(); ++i) {
            const double res = critical_residual(mf, crit[i]).size() ? max_abs(critical_residual(mf, crit[i])) : 0.0;
            if (res > mr.max_residual) mr.max_residual = res;
            try {
                const MorseRank m = morse_rank_check(mf, crit[i], sc.tol.rank, sc.tol.crit);
                if (!m.maximal) mr.pass = false;
                const double sk = mf.k() > 0 && m.singular_values.size() >= mf.k() ? m.singular_values[mf.k() - 1] : INFINITY;
                if (sk < min_sigma) {
                    min_sigma = sk;
                    mr.worst = static_cast<int>(i);
                }
            } catch (const std::exception&) {
                mr.pass = false;
                mr.worst = static_cast<int>(i);
            }
        }
        add(mr, {{"samples", std::to_string(crit.size())}, {"min_sigma", mf.k() ? format_residual(min_sigma) : "n/a"}});

        if (mf.base == MorseBase::Cotangent && !crit.empty()) {
            const ImplicitSystem E = generate_E(mf);
            std::vector<Point> pts;
            for (const auto& x : crit) pts.push_back(lift_to_E(mf, x));
            CheckResult cc{"lagrangian-closure", false, 0.0, -1};
            std::vector<std::pair<std::string, std::string>> extra;
            try {
                const ClosureReport cr = lagrangian_closure_check(mf.space, E, pts, std::max(sc.tol.residual, 1e-9));
                cc.pass = cr.pass;
                cc.max_residual = cr.max_violation;
                extra = {{"constraints", std::to_string(cr.constraint_count)},
                         {"multipliers", std::to_string(E.multipliers.size())},
                         {"required", std::to_string(cr.required)}};
            } catch (const std::exception& e) {
                cc.max_residual = INFINITY;
                extra = {{"error", e.what()}};
            }
            add(cc, extra);
        }
    }

    const auto qs = box_points(PhaseSpaceDescriptor(f.n).q(), sc.count, rng, sc.lo, sc.hi);
    if (f.oneform) {
        const double c = closedness_residual(*f.oneform, qs);
        add({"closedness", c <= sc.tol.residual, c, -1}, {{"oneform", format_form(*f.oneform)}});
        if (f.sigma) {
            const double s = sigma_relatedness_residual(*f.sigma, *f.oneform, qs);
            add({"sigma-relatedness", s <= sc.tol.residual, s, -1}, {});
        }
    }
    finish(r, pass);
    return r;
}

Report cmd_integrability(const SystemFile& f, const CommandOptions& opt) {
    if (f.dynamics != Dynamics::Ide) throw std::invalid_argument("integrability needs an [ide] section");
    const SamplingConfig sc = effective(f, opt);
    Report r = start("integrability", f, sc);
    const SamplingOptions so{sc.count, sc.lo, sc.hi, 1e-12};
    AffineIDE ide;
    bool affine = true;
    try {
        ide = make_affine_ide(f.ide_state, f.ide_constraints, sc.seed);
    } catch (const std::invalid_argument&) {
        affine = false;
    }
    r.root.add("affine", format_bool(affine));
    if (affine) {
        IntegrabilityOptions io;
        io.tol = sc.tol.residual;
        io.sampling = so;
        const AlgorithmTrace tr = run_integrability(ide, io);
        ReportNode& its = r.root.add("iterations");
        for (size_t k = 0; k < tr.iterations.size(); ++k) {
            const IterationRecord& rec = tr.iterations[k];
            ReportNode& n = its.item(std::to_string(k));
            n.add("dim_E", std::to_string(rec.dim_E));
            n.add("dim_C", std::to_string(rec.dim_C));
            n.add("samples", std::to_string(rec.samples));
            n.add("stratified", format_bool(rec.stratified));
            n.add("C", format_list(rec.C));
            r.human.push_back("  E^" + std::to_string(k) + ": dim " + std::to_string(rec.dim_E) + ", C dim " +
                              std::to_string(rec.dim_C));
        }
        r.root.add("stabilized_at", std::to_string(tr.stabilized_at));
        r.root.add("empty", format_bool(tr.empty));
        r.root.add("stratified", format_bool(tr.stratified));
        if (tr.empty) r.root.add("note", "no integrable part on sampled region");
        ReportNode& fin = r.root.add("final");
        fin.add("base", format_list(tr.final_system.base));
        fin.add("rows", format_list(tr.final_system.rows));
        r.human.push_back("  stabilized at " + std::to_string(tr.stabilized_at) + (tr.empty ? " (empty)" : ""));
        finish(r, tr.stabilized_at >= 0 && !tr.empty);
        return r;
    }

    r.root.add("note", "system is not affine in the velocities; pointwise mode");
    VarList tm = f.ide_state;
    for (const auto& x : f.ide_state) tm.push_back(velocity_name(x));
    const auto cloud = sample_zero_set(f.ide_constraints, tm, so);
    const auto probes = rank_drop_samples(f.ide_state, f.ide_constraints, so);
    const PointwiseReport pc = pointwise_integrability(f.ide_state, f.ide_constraints, cloud, sc.tol.rank, sc.tol.residual);
    const PointwiseReport pp = pointwise_integrability(f.ide_state, f.ide_constraints, probes, sc.tol.rank, sc.tol.residual);
    ReportNode& pw = r.root.add("pointwise");
    pw.add("samples", std::to_string(cloud.size()));
    pw.add("rank_drop_probes", std::to_string(probes.size()));
    pw.add("flagged", std::to_string(pc.flagged + pp.flagged));
    pw.add("indeterminate", std::to_string(pc.indeterminate + pp.indeterminate));
    ReportNode& fl = pw.add("flagged_points");
    auto list_flagged = [&](const PointwiseReport& rep, const std::vector<Point>& pts) {
        for (size_t i = 0; i < pts.size(); ++i) {
            if (rep.points[i].status != PointStatus::NonIntegrable) continue;
            ReportNode& n = fl.item(format_point(pts[i]));
            n.add("tangency_residual", format_residual(rep.points[i].tangency_residual));
        }
    };
    list_flagged(pc, cloud);
    list_flagged(pp, probes);
    r.human.push_back("  pointwise: " + std::to_string(pc.flagged + pp.flagged) + " non-integrable points of " +
                      std::to_string(cloud.size() + probes.size()));
    finish(r, pc.flagged + pp.flagged == 0);
    return r;
}

Report cmd_hj(const SystemFile& f, const CommandOptions& opt) {
    const MorseFamilySpec mf = require_family(f, "hj");
    const SamplingConfig sc = effective(f, opt);
    Report r = start("hj", f, sc);
    SearchOptions so;
    so.lo = sc.lo;
    so.hi = sc.hi;
    so.tol = sc.tol.residual;
    so.seed = sc.seed;
    const bool has_form = f.oneform || f.characteristic;
    const bool search = opt.search_degree.has_value() || (!opt.verify && !has_form);

    if (search) {
        so.degree = opt.search_degree.value_or(0);
        r.root.add("mode", "search");
        r.root.add("degree", std::to_string(so.degree));
        const SearchResult res = search_oneform(mf, so);
        ReportNode& cands = r.root.add("candidates", std::to_string(res.candidates.size()));
        for (const auto& c : res.candidates) {
            ReportNode& n = cands.item(format_form(c.gamma));
            ReportNode& dirs = n.add("directions", std::to_string(c.directions.size()));
            for (const auto& d : c.directions) dirs.item(format_form(d));
            n.add("locus", format_list(c.locus));
            n.add("residual", format_residual(c.residual));
            n.add("verify_residual", format_residual(c.verify_residual));
            std::string line = "  candidate " + format_form(c.gamma);
            for (size_t k = 0; k < c.directions.size(); ++k)
                line += " + t" + std::to_string(k + 1) + " " + format_form(c.directions[k]);
            if (!c.locus.empty()) line += " on " + format_list(c.locus) + " = 0";
            r.human.push_back(line);
        }
        r.root.add("best_residual", format_residual(res.best_residual));
        ReportNode& tried = r.root.add("loci_tried");
        for (const auto& l : res.loci_tried) tried.item(format_list(l));
        if (res.candidates.empty()) r.human.push_back("  no candidate; best residual " + format_residual(res.best_residual));
        finish(r, !res.candidates.empty());
        return r;
    }

    if (!has_form) throw std::invalid_argument("hj --verify needs a [oneform] section");
    r.root.add("mode", "verify");
    so.verify_samples = sc.count;
    Sampler rng(sc.seed);
    const PhaseSpaceDescriptor& s = mf.space;

    if (f.characteristic) {
        const CharacteristicFunction& w = *f.characteristic;
        r.root.add("W", to_string(w.W));
        std::vector<Expression> mu;
        for (const auto& m : w.mu) mu.push_back(var(m));
        r.root.add("mu", format_list(mu));
        DiagnosticsReport rep;
        if (w.mu.empty()) {
            rep = ihj_residual(mf, w, box_points(s.q(), sc.count, rng, sc.lo, sc.hi), sc.tol.residual);
        } else {
            std::map<std::string, Expression> momenta;
            for (size_t i = 0; i < s.q().size(); ++i) momenta.emplace(s.p()[i], diff(w.W, s.q()[i]));
            std::vector<Expression> eqs;
            for (const auto& m : w.mu) eqs.push_back(diff(w.W, m));
            for (const auto& l : mf.fiber) eqs.push_back(substitute(diff(mf.F, l), momenta));
            VarList vars = s.q();
            vars.insert(vars.end(), w.mu.begin(), w.mu.end());
            vars.insert(vars.end(), mf.fiber.begin(), mf.fiber.end());
            const auto pts = sample_zero_set(eqs, vars, {sc.count, sc.lo, sc.hi, 1e-12});
            if (pts.empty()) throw std::invalid_argument("no sample satisfies dW/dmu = 0 on the sampled box");
            rep = generalized_relatedness(mf, w, pts, sc.tol.residual);
        }
        r.root.add("samples", std::to_string(rep.samples));
        r.root.add("infeasible", std::to_string(rep.infeasible));
        add_checks(r.root.add("checks"), rep);
        ReportNode& notes = r.root.add("notes");
        for (const auto& note : rep.notes) notes.item(note);
        human_checks(r, rep);
        finish(r, rep.pass());
        return r;
    }

    const OneFormSpec& g = *f.oneform;
    r.root.add("oneform", format_form(g));
    const auto qs = box_points(s.q(), sc.count, rng, sc.lo, sc.hi);
    const double closed = closedness_residual(g, qs);
    r.root.add("closedness", format_residual(closed));
    const VerifyResult v = verify_oneform(mf, g, so);
    ReportNode& gl = r.root.add("global");
    gl.add("pass", format_bool(v.global));
    gl.add("samples", std::to_string(v.global_report.samples));
    gl.add("infeasible", std::to_string(v.global_report.infeasible));
    add_checks(gl.add("checks"), v.global_report);
    human_checks(r, v.global_report, "global ");
    ReportNode& tried = r.root.add("loci_tried");
    for (const auto& l : v.loci_tried) tried.item(format_list(l));
    r.root.add("locus", format_list(v.locus));
    if (!v.locus.empty()) {
        ReportNode& lr = r.root.add("on_locus");
        lr.add("samples", std::to_string(v.locus_report.samples));
        add_checks(lr.add("checks"), v.locus_report);
        human_checks(r, v.locus_report, "on locus ");
        r.human.push_back("  passes on the locus " + format_list(v.locus) + " = 0");
    }
    bool pass = closed <= sc.tol.residual && (v.global || !v.locus.empty());
    if (f.sigma) {
        const double sr = sigma_relatedness_residual(*f.sigma, g, qs);
        std::vector<Point> on_image;
        for (const auto& q : qs) {
            Point x = q;
            for (const auto& [k, val] : apply_oneform(g, q, s)) x[k] = val;
            on_image.push_back(x);
        }
        const double se = sigma_in_E_residual(*f.sigma, generate_E(mf), on_image);
        ReportNode& sn = r.root.add("sigma");
        sn.add("relatedness", format_residual(sr));
        sn.add("in_E", format_residual(se));
        r.human.push_back("  sigma relatedness " + format_residual(sr) + ", sigma in E " + format_residual(se));
        pass = pass && sr <= sc.tol.residual;
    }
    finish(r, pass);
    return r;
}

Report cmd_gotay_nester(const SystemFile& f, const CommandOptions& opt) {
    if (f.dynamics != Dynamics::Lagrangian) throw std::invalid_argument("gotay-nester needs a [lagrangian] section");
    const SamplingConfig sc = effective(f, opt);
    Report r = start("gotay-nester", f, sc);
    GotayNesterOptions go;
    go.tol = sc.tol.residual;
    go.sampling = {sc.count, sc.lo, sc.hi, 1e-12};
    const GotayNesterResult g = gotay_nester(f.lagrangian, go);
    r.root.add("affine", format_bool(g.affine));
    r.root.add("regular", format_bool(g.regular));
    r.root.add("h1_well_defined", format_bool(g.h1_well_defined));
    r.root.add("h1_fiber_residual", format_residual(g.h1_fiber_residual));
    if (g.affine) r.root.add("h1", to_string(g.h1));
    r.root.add("primary", format_list(g.primary));
    r.root.add("secondary", format_list(g.secondary));
    ReportNode& levels = r.root.add("levels");
    for (const auto& l : g.levels) {
        ReportNode& n = levels.item(std::to_string(l.level));
        n.add("constraints", format_list(l.constraints));
        n.add("samples", std::to_string(l.samples));
        n.add("solvability_residual", format_residual(l.solvability_residual));
    }
    r.root.add("stabilized_at", std::to_string(g.stabilized_at));
    r.root.add("empty", format_bool(g.empty));
    r.root.add("stratified", format_bool(g.stratified));
    r.root.add("final", format_list(g.final_constraints()));
    ReportNode& notes = r.root.add("notes");
    for (const auto& note : g.notes) notes.item(note);
    if (g.affine && g.primary.empty() && g.stabilized_at == 1) notes.item("M1 = T*Q; algorithm stabilizes at level 1");
    r.human.push_back("  primary: " + format_list(g.primary));
    r.human.push_back("  secondary: " + format_list(g.secondary));
    r.human.push_back("  final: " + format_list(g.final_constraints()) + " (level " + std::to_string(g.stabilized_at) + ")");
    for (const auto& note : g.notes) r.human.push_back("  note: " + note);
    finish(r, g.affine && g.stabilized_at >= 1 && !g.empty);
    return r;
}

Report cmd_complete(const SystemFile& f, const CommandOptions& opt) {
    const MorseFamilySpec mf = require_family(f, "complete");
    if (!f.complete) throw std::invalid_argument("complete needs a [complete] section");
    const SamplingConfig sc = effective(f, opt);
    Report r = start("complete", f, sc);
    Sampler rng(sc.seed);
    const auto qb = box_points(numbered("qb", f.n), sc.count, rng, sc.lo, sc.hi);
    const auto q = box_points(mf.space.q(), sc.count, rng, sc.lo, sc.hi);
    r.root.add("W", to_string(f.complete->W));
    r.root.add("U", format_list(f.complete->U));
    DiagnosticsReport rep;
    try {
        rep = complete_solution_check(*f.complete, mf, qb, q, sc.tol.residual);
    } catch (const std::invalid_argument& e) {
        r.root.add("unsupported", e.what());
        r.human.push_back(std::string("  unsupported: ") + e.what());
        finish(r, false);
        return r;
    }
    r.root.add("samples", std::to_string(rep.samples));
    add_checks(r.root.add("checks"), rep);
    ReportNode& notes = r.root.add("notes");
    for (const auto& note : rep.notes) notes.item(note);
    human_checks(r, rep);
    finish(r, rep.pass());
    return r;
}

Report run_command(const std::string& command, const std::string& path, const CommandOptions& opt) {
    auto failure = [&](const std::string& msg) {
        Report r;
        r.command = command;
        r.root.add("command", command);
        r.root.add("error", msg);
        r.root.add("result", "error");
        r.exit_code = kExitInput;
        r.human.push_back("ihj " + command + ": " + msg);
        return r;
    };
    try {
        const SystemFile f = load_system_file(path);
        if (command == "check") return cmd_check(f, opt);
        if (command == "integrability") return cmd_integrability(f, opt);
        if (command == "hj") return cmd_hj(f, opt);
        if (command == "gotay-nester") return cmd_gotay_nester(f, opt);
        if (command == "complete") return cmd_complete(f, opt);
        return failure("unknown command '" + command + "'");
    } catch (const FileError& e) {
        return failure(std::string(path) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        return failure(e.what());
    }
}

}  // namespace ihj
