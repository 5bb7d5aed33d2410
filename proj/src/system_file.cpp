#include "ihj/system_file.hpp"

#include "ihj/ide.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <regex>
#include <set>
#include <sstream>

namespace ihj {

FileError::FileError(const std::string& msg, int line, int column)
    : std::runtime_error(column > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg
                                    : "line " + std::to_string(line) + ": " + msg),
      line_(line),
      column_(column) {}

const char* to_string(Dynamics d) {
    switch (d) {
        case Dynamics::Morse: return "morse";
        case Dynamics::Lagrangian: return "lagrangian";
        case Dynamics::Ide: return "ide";
        case Dynamics::Hamiltonian: return "hamiltonian";
    }
    return "?";
}

std::string fnv1a_hex(const std::string& text) {
    unsigned long long h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", h);
    return buf;
}

MorseFamilySpec SystemFile::family() const {
    switch (dynamics) {
        case Dynamics::Morse: return morse;
        case Dynamics::Lagrangian: return pontryagin_family(lagrangian);
        case Dynamics::Hamiltonian: return dirac_family(n, H, dirac);
        case Dynamics::Ide: break;
    }
    throw std::invalid_argument("an [ide] section has no generating family");
}

namespace {

struct Entry {
    std::string key;
    std::string value;
    int line = 0;
    int column = 0;  // of the value
};

struct Section {
    std::string name;
    int line = 0;
    std::vector<Entry> entries;
};

const std::set<std::string> kSections = {"space", "oneform", "sigma", "complete", "sampling", "params",
                                          "morse", "lagrangian", "ide", "hamiltonian"};
const std::set<std::string> kDynamics = {"morse", "lagrangian", "ide", "hamiltonian"};
const std::set<std::string> kRepeatable = {"constraint", "U"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<Section> split_sections(const std::string& text) {
    static const std::regex header(R"(^\[([A-Za-z_][A-Za-z0-9_]*)\]$)");
    static const std::regex key_re(R"(^[A-Za-z_][A-Za-z0-9_]*$)");
    std::vector<Section> out;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(raw);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s[0] == '[') {
            std::smatch m;
            if (!std::regex_match(s, m, header))
                throw FileError("malformed section header '" + s + "'", line, static_cast<int>(raw.find('[')) + 1);
            const std::string name = m[1];
            if (!kSections.count(name)) throw FileError("unknown section [" + name + "]", line, 1);
            for (const auto& sec : out)
                if (sec.name == name) throw FileError("duplicate section [" + name + "]", line, 1);
            out.push_back({name, line, {}});
            continue;
        }
        const auto eq = raw.find('=');
        if (eq == std::string::npos) throw FileError("expected 'key = value'", line, 1);
        if (out.empty()) throw FileError("entry outside of any section", line, 1);
        Entry e;
        e.key = trim(raw.substr(0, eq));
        if (!std::regex_match(e.key, key_re)) throw FileError("invalid key '" + e.key + "'", line, 1);
        const auto vstart = raw.find_first_not_of(" \t", eq + 1);
        e.column = static_cast<int>(vstart == std::string::npos ? eq + 2 : vstart + 1);
        e.value = trim(raw.substr(eq + 1));
        e.line = line;
        if (e.value.empty()) throw FileError("empty value for '" + e.key + "'", line, e.column);
        Section& sec = out.back();
        if (!kRepeatable.count(e.key))
            for (const auto& other : sec.entries)
                if (other.key == e.key) throw FileError("duplicate key '" + e.key + "'", line, 1);
        sec.entries.push_back(std::move(e));
    }
    return out;
}

class Builder {
public:
    explicit Builder(std::vector<Section> sections) : sections_(std::move(sections)) {}

    const Section* find(const std::string& name) const {
        for (const auto& s : sections_)
            if (s.name == name) return &s;
        return nullptr;
    }

    static void allow_keys(const Section& s, const std::function<bool(const std::string&)>& ok) {
        for (const auto& e : s.entries)
            if (!ok(e.key)) throw FileError("unknown key '" + e.key + "' in [" + s.name + "]", e.line, 1);
    }

    static const Entry* get(const Section& s, const std::string& key) {
        for (const auto& e : s.entries)
            if (e.key == key) return &e;
        return nullptr;
    }

    static const Entry& require(const Section& s, const std::string& key) {
        const Entry* e = get(s, key);
        if (!e) throw FileError("[" + s.name + "] requires '" + key + "'", s.line, 0);
        return *e;
    }

    static double number(const Entry& e) {
        try {
            Expression x = parse(e.value);
            return eval(x, {});
        } catch (const std::exception&) {
            throw FileError("'" + e.key + "' must be a number", e.line, e.column);
        }
    }

    static long long integer(const Entry& e) {
        long long v = 0;
        const char* first = e.value.data();
        const char* last = first + e.value.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last) throw FileError("'" + e.key + "' must be an integer", e.line, e.column);
        return v;
    }

    static VarList list(const Entry& e) {
        static const std::regex ident(R"(^[A-Za-z_][A-Za-z0-9_]*$)");
        VarList out;
        std::stringstream ss(e.value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!std::regex_match(item, ident)) throw FileError("invalid name '" + item + "'", e.line, e.column);
            if (std::find(out.begin(), out.end(), item) != out.end())
                throw FileError("repeated name '" + item + "'", e.line, e.column);
            out.push_back(item);
        }
        return out;
    }

    Expression expr(const Entry& e, const VarList& allowed, const std::string& what) const {
        Expression x;
        try {
            x = parse(e.value);
        } catch (const ParseError& err) {
            throw FileError(err.what(), e.line, e.column + err.column() - 1);
        }
        if (!params_.empty()) {
            std::map<std::string, Expression> repl;
            for (const auto& [k, v] : params_)
                if (x.depends_on(k)) repl.emplace(k, Expression(v));
            if (!repl.empty()) x = substitute(x, repl);
        }
        try {
            require_vars(x, allowed, what);
        } catch (const std::invalid_argument& err) {
            throw FileError(err.what(), e.line, e.column);
        }
        return x;
    }

    SystemFile build(const std::string& text, const std::string& name) {
        SystemFile f;
        f.name = name;
        f.digest = fnv1a_hex(text);

        const Section* space = find("space");
        if (!space) throw FileError("missing [space] section", 1, 0);
        allow_keys(*space, [](const std::string& k) { return k == "n"; });
        const long long n = integer(require(*space, "n"));
        if (n < 1 || n > 8) throw FileError("n must be between 1 and 8", require(*space, "n").line, 0);
        f.n = static_cast<int>(n);
        const PhaseSpaceDescriptor s(f.n);

        if (const Section* p = find("params")) {
            static const std::regex reserved(R"(^(q|p|qd|pd|lam|mu|qb|pb|nu|u|kappa|coef)[0-9]+$)");
            for (const auto& e : p->entries) {
                if (std::regex_match(e.key, reserved))
                    throw FileError("parameter '" + e.key + "' clashes with a coordinate name", e.line, 1);
                params_[e.key] = number(e);
            }
            f.params = params_;
        }

        const Section* dyn = nullptr;
        for (const auto& sec : sections_) {
            if (!kDynamics.count(sec.name)) continue;
            if (dyn) throw FileError("more than one dynamics section", sec.line, 0);
            dyn = &sec;
        }
        if (!dyn) throw FileError("missing dynamics section ([morse], [lagrangian], [ide] or [hamiltonian])", 1, 0);

        if (dyn->name == "morse") {
            f.dynamics = Dynamics::Morse;
            allow_keys(*dyn, [](const std::string& k) { return k == "F" || k == "fiber" || k == "base"; });
            VarList fiber;
            if (const Entry* e = get(*dyn, "fiber")) {
                static const std::regex lam(R"(^lam[1-9][0-9]*$)");
                fiber = list(*e);
                for (const auto& v : fiber)
                    if (!std::regex_match(v, lam)) throw FileError("fiber variables are named lam1, lam2, ...", e->line, e->column);
            }
            MorseBase base = MorseBase::Cotangent;
            if (const Entry* e = get(*dyn, "base")) {
                if (e->value == "configuration")
                    base = MorseBase::Configuration;
                else if (e->value != "cotangent")
                    throw FileError("base must be 'cotangent' or 'configuration'", e->line, e->column);
            }
            f.morse.space = s;
            f.morse.fiber = fiber;
            f.morse.base = base;
            const VarList allowed = [&] {
                VarList v = base == MorseBase::Cotangent ? s.cotangent() : s.q();
                v.insert(v.end(), fiber.begin(), fiber.end());
                return v;
            }();
            f.morse.F = expr(require(*dyn, "F"), allowed, "F");
        } else if (dyn->name == "lagrangian") {
            f.dynamics = Dynamics::Lagrangian;
            allow_keys(*dyn, [](const std::string& k) { return k == "L"; });
            f.lagrangian = {f.n, expr(require(*dyn, "L"), s.tangent(), "L")};
        } else if (dyn->name == "ide") {
            f.dynamics = Dynamics::Ide;
            allow_keys(*dyn, [](const std::string& k) { return k == "state" || k == "constraint"; });
            const Entry* st = get(*dyn, "state");
            f.ide_state = st ? list(*st) : s.cotangent();
            VarList allowed = f.ide_state;
            for (const auto& v : f.ide_state) allowed.push_back(velocity_name(v));
            for (const auto& e : dyn->entries)
                if (e.key == "constraint") f.ide_constraints.push_back(expr(e, allowed, "constraint"));
            if (f.ide_constraints.empty()) throw FileError("[ide] requires at least one 'constraint'", dyn->line, 0);
        } else {
            f.dynamics = Dynamics::Hamiltonian;
            allow_keys(*dyn, [](const std::string& k) { return k == "H" || k == "constraint"; });
            f.H = expr(require(*dyn, "H"), s.cotangent(), "H");
            for (const auto& e : dyn->entries)
                if (e.key == "constraint") f.dirac.push_back(expr(e, s.cotangent(), "constraint"));
        }

        if (const Section* o = find("oneform")) {
            const Entry* w = get(*o, "W");
            if (w) {
                allow_keys(*o, [](const std::string& k) { return k == "W" || k == "mu"; });
                CharacteristicFunction cf;
                if (const Entry* mu = get(*o, "mu")) {
                    static const std::regex mu_re(R"(^mu[1-9][0-9]*$)");
                    cf.mu = list(*mu);
                    for (const auto& v : cf.mu)
                        if (!std::regex_match(v, mu_re)) throw FileError("W parameters are named mu1, mu2, ...", mu->line, mu->column);
                }
                VarList allowed = s.q();
                allowed.insert(allowed.end(), cf.mu.begin(), cf.mu.end());
                cf.W = expr(*w, allowed, "W");
                f.characteristic = cf;
            } else {
                allow_keys(*o, [&](const std::string& k) { return indexed(k, "gamma", f.n); });
                OneFormSpec g;
                for (int i = 1; i <= f.n; ++i) g.gamma.push_back(expr(require(*o, "gamma" + std::to_string(i)), s.q(), "gamma"));
                f.oneform = g;
            }
        }

        if (const Section* sg = find("sigma")) {
            allow_keys(*sg, [&](const std::string& k) { return indexed(k, "up", f.n) || indexed(k, "down", f.n); });
            SectionSigma sig;
            for (int i = 1; i <= f.n; ++i) {
                sig.up.push_back(expr(require(*sg, "up" + std::to_string(i)), s.cotangent(), "sigma"));
                sig.down.push_back(expr(require(*sg, "down" + std::to_string(i)), s.cotangent(), "sigma"));
            }
            f.sigma = sig;
        }

        if (const Section* c = find("complete")) {
            allow_keys(*c, [](const std::string& k) { return k == "W" || k == "U"; });
            VarList allowed = numbered("qb", f.n);
            for (const auto& v : s.q()) allowed.push_back(v);
            CompleteSolutionSpec cs;
            cs.W = expr(require(*c, "W"), allowed, "W");
            for (const auto& e : c->entries)
                if (e.key == "U") cs.U.push_back(expr(e, allowed, "U"));
            f.complete = cs;
        }

        if (const Section* sm = find("sampling")) {
            allow_keys(*sm, [](const std::string& k) {
                return k == "lo" || k == "hi" || k == "count" || k == "seed" || k == "tol" || k == "tol_crit" ||
                       k == "tol_rank" || k == "fd_step";
            });
            SamplingConfig& sc = f.sampling;
            if (const Entry* e = get(*sm, "lo")) sc.lo = number(*e);
            if (const Entry* e = get(*sm, "hi")) sc.hi = number(*e);
            if (const Entry* e = get(*sm, "count")) {
                const long long c = integer(*e);
                if (c < 1 || c > 10000) throw FileError("count must be between 1 and 10000", e->line, e->column);
                sc.count = static_cast<int>(c);
            }
            if (const Entry* e = get(*sm, "seed")) {
                const long long v = integer(*e);
                if (v < 0) throw FileError("seed must be non-negative", e->line, e->column);
                sc.seed = static_cast<unsigned long long>(v);
            }
            auto positive = [](const Entry& e) {
                const double v = number(e);
                if (!(v > 0)) throw FileError("'" + e.key + "' must be positive", e.line, e.column);
                return v;
            };
            if (const Entry* e = get(*sm, "tol")) sc.tol.residual = positive(*e);
            if (const Entry* e = get(*sm, "tol_crit")) sc.tol.crit = positive(*e);
            if (const Entry* e = get(*sm, "tol_rank")) sc.tol.rank = positive(*e);
            if (const Entry* e = get(*sm, "fd_step")) sc.tol.fd_step = positive(*e);
            if (!(sc.lo < sc.hi)) throw FileError("sampling box needs lo < hi", sm->line, 0);
        }
        return f;
    }

private:
    static bool indexed(const std::string& key, const std::string& stem, int n) {
        if (key.rfind(stem, 0) != 0) return false;
        const std::string rest = key.substr(stem.size());
        if (rest.empty() || rest[0] == '0') return false;
        int v = 0;
        auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
        return ec == std::errc() && ptr == rest.data() + rest.size() && v >= 1 && v <= n;
    }

    std::vector<Section> sections_;
    std::map<std::string, double> params_;
};

}  // namespace

SystemFile parse_system_file(const std::string& text, const std::string& name) {
    return Builder(split_sections(text)).build(text, name);
}

SystemFile load_system_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open '" + path + "'", 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string name = path;
    const auto slash = name.find_last_of('/');
    if (slash != std::string::npos) name = name.substr(slash + 1);
    return parse_system_file(ss.str(), name);
}

}  // namespace ihj
