#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "ihj/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Implicit Hamiltonian systems: checks, integrability, Hamilton-Jacobi and constraint algorithms"};
    std::string command, file, out;
    unsigned long long seed = 0;
    double tol = 0.0;
    int degree = 0;
    bool verify = false;
    app.add_option("command", command, "check | integrability | hj | gotay-nester | complete")
        ->required()
        ->check(CLI::IsMember({"check", "integrability", "hj", "gotay-nester", "complete"}));
    app.add_option("file", file, "system definition file")->required();
    auto* seed_opt = app.add_option("--seed", seed, "random seed (default 20240611)");
    app.add_option("--out", out, "write the machine-readable report here instead of standard output");
    auto* deg_opt = app.add_option("--search-degree", degree, "search closed polynomial one-forms of this degree")
                        ->check(CLI::Range(0, 2));
    app.add_flag("--verify", verify, "verify the one-form or characteristic function of the file");
    auto* tol_opt = app.add_option("--tol", tol, "residual tolerance")->check(CLI::PositiveNumber);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : ihj::kExitInput;
    }

    ihj::CommandOptions opt;
    if (*seed_opt) opt.seed = seed;
    if (*tol_opt) opt.tol = tol;
    if (*deg_opt) opt.search_degree = degree;
    opt.verify = verify;

    const auto t0 = std::chrono::steady_clock::now();
    ihj::Report r = ihj::run_command(command, file, opt);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string text = r.serialize();
    if (out.empty()) {
        std::cout << text << std::flush;
    } else {
        std::ofstream os(out, std::ios::binary);
        if (!os) {
            std::cerr << "ihj: cannot write '" << out << "'\n";
            return ihj::kExitInput;
        }
        os << text;
    }
    for (const auto& line : r.human) std::cerr << line << '\n';
    std::fprintf(stderr, "time: %.3f s\n", r.seconds);
    return r.exit_code;
}
