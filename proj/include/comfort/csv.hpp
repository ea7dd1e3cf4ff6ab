#pragma once

#include <string>
#include <vector>

#include "comfort/schema.hpp"

namespace comfort {

// Loads a UTF-8, comma-separated survey file. First row is the header; empty
// cells and the sentinel "NA" are missing. Columns that match no feature or
// task name are ignored. Row-level problems (unparseable numbers, labels
// outside their scale) are collected and reported together with line numbers.
Dataset load_csv(const std::string& path, const DatasetSchema& schema);

// Same, from an in-memory document. `origin` names the source in errors.
Dataset parse_csv(const std::string& text, const DatasetSchema& schema,
                  const std::string& origin = "<memory>");

// One column per feature and per task label, in schema order. Missing cells
// are written as "NA". Deterministic: numeric cells use 17 significant
// digits so a written dataset reloads bit-exactly.
std::string dataset_to_csv(const Dataset& dataset);
void write_csv(const Dataset& dataset, const std::string& path);

// Low-level helpers shared with the prediction-output writer.
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_escape(const std::string& field);
std::string format_double(double v);  // %.17g, exact 64-bit round trip

}  // namespace comfort
