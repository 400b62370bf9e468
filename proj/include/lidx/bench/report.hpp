#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lidx/bench/runner.hpp"

namespace lidx::bench {

inline constexpr int kReportSchemaVersion = 1;

/// Pretty-printed JSON for one run. The field layout is fixed; see
/// json_schema() and the golden schema file under tests/golden.
std::string report_json(const RunReport& report);

/// One "path:type" line per leaf of a JSON document, sorted. Array elements
/// collapse to "[]". Throws nlohmann's parse_error on malformed input.
std::vector<std::string> json_schema(std::string_view json);

}  // namespace lidx::bench
