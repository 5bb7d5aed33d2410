#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ihj/expr.hpp"
#include "ihj/hj.hpp"
#include "ihj/lagrangian.hpp"
#include "ihj/morse.hpp"
#include "ihj/numerics.hpp"

namespace ihj {

class FileError : public std::runtime_error {
public:
    FileError(const std::string& msg, int line, int column = 0);
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

enum class Dynamics { Morse, Lagrangian, Ide, Hamiltonian };
const char* to_string(Dynamics d);

struct SamplingConfig {
    double lo = -2.0;
    double hi = 2.0;
    int count = 40;
    unsigned long long seed = kDefaultSeed;
    Tolerances tol;
};

struct SystemFile {
    std::string name;
    std::string digest;  // FNV-1a 64 of the file text
    int n = 0;
    Dynamics dynamics = Dynamics::Morse;

    MorseFamilySpec morse;
    LagrangianSystem lagrangian;
    VarList ide_state;
    std::vector<Expression> ide_constraints;
    Expression H;
    std::vector<Expression> dirac;

    std::optional<OneFormSpec> oneform;
    std::optional<CharacteristicFunction> characteristic;
    std::optional<SectionSigma> sigma;
    std::optional<CompleteSolutionSpec> complete;
    std::map<std::string, double> params;
    SamplingConfig sampling;

    // The generating family of the dynamics section; throws for [ide].
    MorseFamilySpec family() const;
};

// INI-like text: [section] headers, `key = value` lines, `#` comments.
// Throws FileError with the offending line and column.
SystemFile parse_system_file(const std::string& text, const std::string& name = "");
SystemFile load_system_file(const std::string& path);

std::string fnv1a_hex(const std::string& text);

}  // namespace ihj
