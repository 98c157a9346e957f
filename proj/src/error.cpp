#include "bwsq/error.hpp"

#include <sstream>

namespace bwsq {

namespace {

std::string describe(const std::vector<RowIssue>& issues) {
    std::ostringstream out;
    out << issues.size() << " row(s) rejected";
    constexpr std::size_t shown = 5;
    for (std::size_t i = 0; i < issues.size() && i < shown; ++i) {
        const auto& issue = issues[i];
        out << (i == 0 ? ": " : "; ") << "row " << issue.row;
        if (!issue.field.empty()) out << " field '" << issue.field << "'";
        out << ": " << issue.message;
    }
    if (issues.size() > shown) out << "; ...";
    return out.str();
}

}  // namespace

RowError::RowError(std::vector<RowIssue> issues) : Error(describe(issues)), issues_(std::move(issues)) {}

}  // namespace bwsq
