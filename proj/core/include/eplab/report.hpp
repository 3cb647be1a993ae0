#ifndef EPLAB_REPORT_HPP
#define EPLAB_REPORT_HPP

#include <string>

#include "eplab/scenario.hpp"

namespace eplab {

enum class ReportFormat { text, json };

/// Renders a run summary. The json form is structurally stable across runs
/// with identical configs and round-trips through parse_summary_json.
std::string emit_report(const RunSummary& summary, ReportFormat format);

/// Inverse of emit_report(_, json). Throws parse_error on malformed input.
RunSummary parse_summary_json(const std::string& text);

}  // namespace eplab

#endif
