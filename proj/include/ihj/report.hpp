#pragma once

#include <deque>
#include <string>
#include <vector>

#include "ihj/expr.hpp"
#include "ihj/hj.hpp"

namespace ihj {

// One line of the machine-readable report: `key value`, children indented by
// two spaces. A node with key "-" is a list item.
struct ReportNode {
    std::string key;
    std::string value;
    std::deque<ReportNode> children;  // stable references across add()

    ReportNode& add(const std::string& k, const std::string& v = "");
    ReportNode& item(const std::string& v = "");
};

struct Report {
    std::string command;
    ReportNode root;
    std::vector<std::string> human;  // lines for standard error
    int exit_code = 0;
    double seconds = 0.0;            // wall time, kept out of serialize()

    // `report-version 1` header followed by the node tree; LF line endings.
    std::string serialize() const;
};

// %.6g for plain numbers (|v| < 1e-12 prints 0), %.3e for residuals (below
// 1e-13 prints "<1e-13"); "inf" and "nan" spelled out.
std::string format_number(double v);
std::string format_residual(double v);
std::string format_bool(bool b);
std::string format_point(const Point& x);
std::string format_list(const std::vector<Expression>& c);

// name, pass, max_residual and worst sample of each check.
void add_checks(ReportNode& parent, const DiagnosticsReport& rep);

}  // namespace ihj
