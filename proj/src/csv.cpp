#include "comfort/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace comfort {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool cell_missing(const std::string& cell) {
    return cell.empty() || cell == "NA";
}

bool parse_number(const std::string& cell, double& out) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    errno = 0;
    out = std::strtod(begin, &end);
    return end == begin + cell.size() && end != begin && errno == 0;
}

bool parse_int(const std::string& cell, int& out) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    errno = 0;
    long v = std::strtol(begin, &end, 10);
    if (end != begin + cell.size() || end == begin || errno != 0) return false;
    out = static_cast<int>(v);
    return true;
}

}  // namespace

Dataset parse_csv(const std::string& text, const DatasetSchema& schema,
                  const std::string& origin) {
    validate_schema(schema);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError(origin + ": empty file, header row required");
    }
    std::vector<std::string> header = split_csv_line(line);
    for (auto& h : header) h = trim(h);

    // Column index per feature / task; -1 when the column is absent.
    std::vector<int> feature_col(schema.features.size(), -1);
    std::vector<int> task_col(schema.tasks.size(), -1);
    for (std::size_t c = 0; c < header.size(); ++c) {
        for (std::size_t f = 0; f < schema.features.size(); ++f) {
            if (header[c] == schema.features[f].name) {
                feature_col[f] = static_cast<int>(c);
            }
        }
        for (std::size_t t = 0; t < schema.tasks.size(); ++t) {
            if (header[c] == schema.tasks[t].scale.task_name) {
                task_col[t] = static_cast<int>(c);
            }
        }
    }
    for (std::size_t f = 0; f < schema.features.size(); ++f) {
        if (schema.features[f].required && feature_col[f] < 0) {
            throw ValidationError(origin + ": missing required column \"" +
                                  schema.features[f].name + "\"");
        }
    }

    Dataset dataset;
    dataset.schema = schema;
    std::vector<std::string> row_errors;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        SurveyRecord rec;
        auto cell_at = [&](int col) -> std::string {
            if (col < 0 || static_cast<std::size_t>(col) >= cells.size())
                return "";
            return trim(cells[static_cast<std::size_t>(col)]);
        };
        for (std::size_t f = 0; f < schema.features.size(); ++f) {
            const auto& spec = schema.features[f];
            std::string cell = cell_at(feature_col[f]);
            if (feature_col[f] < 0 || cell_missing(cell)) {
                rec.values[spec.name] = Value{};
                continue;
            }
            if (spec.kind == FeatureKind::Numeric) {
                double v;
                if (!parse_number(cell, v)) {
                    row_errors.push_back("line " + std::to_string(line_no) +
                                         ": feature \"" + spec.name +
                                         "\": cannot parse \"" + cell +
                                         "\" as a number");
                    rec.values[spec.name] = Value{};
                } else {
                    rec.values[spec.name] = v;
                }
            } else {
                rec.values[spec.name] = cell;
            }
        }
        for (std::size_t t = 0; t < schema.tasks.size(); ++t) {
            const auto& scale = schema.tasks[t].scale;
            std::string cell = cell_at(task_col[t]);
            if (task_col[t] < 0 || cell_missing(cell)) continue;
            int v;
            if (!parse_int(cell, v)) {
                row_errors.push_back("line " + std::to_string(line_no) +
                                     ": label \"" + scale.task_name +
                                     "\": cannot parse \"" + cell +
                                     "\" as an integer class value");
            } else if (!scale.contains(v)) {
                row_errors.push_back("line " + std::to_string(line_no) +
                                     ": label \"" + scale.task_name + "\": " +
                                     std::to_string(v) + " outside scale");
            } else {
                rec.labels[scale.task_name] = v;
            }
        }
        dataset.records.push_back(std::move(rec));
    }
    if (!row_errors.empty()) {
        constexpr std::size_t kMaxShown = 20;
        std::string msg = origin + ": " + std::to_string(row_errors.size()) +
                          " row error(s)";
        for (std::size_t i = 0; i < row_errors.size() && i < kMaxShown; ++i) {
            msg += "\n  " + row_errors[i];
        }
        if (row_errors.size() > kMaxShown) msg += "\n  ...";
        throw ValidationError(msg);
    }
    return dataset;
}

Dataset load_csv(const std::string& path, const DatasetSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), schema, path);
}

std::string dataset_to_csv(const Dataset& dataset) {
    std::ostringstream out;
    const auto& schema = dataset.schema;
    bool first = true;
    for (const auto& f : schema.features) {
        if (!first) out << ',';
        out << csv_escape(f.name);
        first = false;
    }
    for (const auto& t : schema.tasks) {
        out << ',' << csv_escape(t.scale.task_name);
    }
    out << '\n';
    for (const auto& rec : dataset.records) {
        first = true;
        for (const auto& f : schema.features) {
            if (!first) out << ',';
            first = false;
            auto it = rec.values.find(f.name);
            if (it == rec.values.end() || is_missing(it->second)) {
                out << "NA";
            } else if (std::holds_alternative<double>(it->second)) {
                out << format_double(std::get<double>(it->second));
            } else {
                out << csv_escape(std::get<std::string>(it->second));
            }
        }
        for (const auto& t : schema.tasks) {
            out << ',';
            auto lab = rec.label(t.scale.task_name);
            if (lab) {
                out << *lab;
            } else {
                out << "NA";
            }
        }
        out << '\n';
    }
    return out.str();
}

void write_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << dataset_to_csv(dataset);
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace comfort
