#pragma once

#include <optional>
#include <string>

#include "ihj/report.hpp"
#include "ihj/system_file.hpp"

namespace ihj {

struct CommandOptions {
    std::optional<unsigned long long> seed;
    std::optional<double> tol;
    std::optional<int> search_degree;
    bool verify = false;
};

// Exit codes: 0 all checks pass, 1 a check fails, 2 the input is unusable.
constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitInput = 2;

Report cmd_check(const SystemFile& f, const CommandOptions& opt = {});
Report cmd_integrability(const SystemFile& f, const CommandOptions& opt = {});
Report cmd_hj(const SystemFile& f, const CommandOptions& opt = {});
Report cmd_gotay_nester(const SystemFile& f, const CommandOptions& opt = {});
Report cmd_complete(const SystemFile& f, const CommandOptions& opt = {});

// Loads the file and dispatches; file and precondition errors become a report
// with exit code 2.
Report run_command(const std::string& command, const std::string& path, const CommandOptions& opt = {});

}  // namespace ihj
