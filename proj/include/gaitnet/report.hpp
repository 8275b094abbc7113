#pragma once

#include <string>
#include <vector>

#include "gaitnet/train.hpp"

namespace gaitnet::report {

// JSON with alphabetically ordered keys, so identical reports are
// byte-identical documents.
std::string to_json(const EvalReport& report);
void write_json(const EvalReport& report, const std::string& path);

// Throws ParseError on malformed JSON, SchemaError on missing fields.
EvalReport from_json_file(const std::string& path);

// Plain-text placement x protocol table, grouped per task, best accuracy
// per group marked with '*'.
std::string summary_table(const std::vector<EvalReport>& reports);

// The same grouping as a JSON document.
std::string summary_json(const std::vector<EvalReport>& reports);

}  // namespace gaitnet::report
