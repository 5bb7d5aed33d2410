#include "ihj/report.hpp"

#include <cmath>
#include <cstdio>

namespace ihj {

ReportNode& ReportNode::add(const std::string& k, const std::string& v) {
    children.push_back({k, v, {}});
    return children.back();
}

ReportNode& ReportNode::item(const std::string& v) { return add("-", v); }

namespace {

void write(std::string& out, const ReportNode& node, int depth) {
    out.append(static_cast<size_t>(2 * depth), ' ');
    out += node.key;
    if (!node.value.empty()) {
        out += ' ';
        out += node.value;
    }
    out += '\n';
    for (const auto& c : node.children) write(out, c, depth + 1);
}

std::string special(double v) {
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string Report::serialize() const {
    std::string out = "report-version 1\n";
    for (const auto& c : root.children) write(out, c, 0);
    return out;
}

std::string format_number(double v) {
    if (!std::isfinite(v)) return special(v);
    if (std::abs(v) < 1e-12) return "0";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string format_residual(double v) {
    if (!std::isfinite(v)) return special(v);
    if (v == 0.0) return "0";
    if (std::abs(v) < 1e-13) return "<1e-13";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

std::string format_point(const Point& x) {
    std::string out;
    for (const auto& [k, v] : x) {
        if (!out.empty()) out += ' ';
        out += k + "=" + format_number(v);
    }
    return out;
}

std::string format_list(const std::vector<Expression>& c) {
    std::string out;
    for (const auto& e : c) {
        if (!out.empty()) out += "; ";
        out += to_string(e);
    }
    return out.empty() ? "none" : out;
}

void add_checks(ReportNode& parent, const DiagnosticsReport& rep) {
    for (const auto& c : rep.checks) {
        ReportNode& n = parent.item(c.name);
        n.add("pass", format_bool(c.pass));
        n.add("max_residual", format_residual(c.max_residual));
        n.add("worst_sample", std::to_string(c.worst));
    }
}

}  // namespace ihj
