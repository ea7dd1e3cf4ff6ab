#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "comfort/errors.hpp"

namespace comfort {

// One ordinal class on a vote scale: numeric value plus display label.
struct ScaleClass {
    int value = 0;
    std::string label;
};

// Ordered class set for one prediction task (TSV, TPV, TCV, ...).
// Class values are strictly increasing; label texts are presentation only.
struct ComfortScale {
    std::string task_name;
    std::vector<ScaleClass> classes;

    std::size_t size() const { return classes.size(); }
    bool contains(int value) const;
};

// Maps a scale value to its softmax output slot and back. The index order
// follows ascending class value; throws ValidationError for unknown values.
std::size_t class_index(const ComfortScale& scale, int value);
int index_class(const ComfortScale& scale, std::size_t index);

struct TaskSpec {
    ComfortScale scale;
    double loss_weight = 1.0;
};

enum class FeatureKind { Numeric, Categorical };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;
    std::string unit;                     // numeric features
    std::vector<std::string> categories;  // categorical features
    bool required = false;
};

struct DatasetSchema {
    std::vector<FeatureSpec> features;
    std::vector<TaskSpec> tasks;

    const FeatureSpec* find_feature(const std::string& name) const;
    const TaskSpec* find_task(const std::string& name) const;
    std::size_t task_index(const std::string& name) const;
};

// A feature cell: absent, numeric, or category text.
using Value = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Value& v) {
    return std::holds_alternative<std::monostate>(v);
}

// One questionnaire row. Labels are optional per task so partially labeled
// exports can flow through the same pipeline.
struct SurveyRecord {
    std::map<std::string, Value> values;
    std::map<std::string, int> labels;

    std::optional<int> label(const std::string& task) const {
        auto it = labels.find(task);
        if (it == labels.end()) return std::nullopt;
        return it->second;
    }
};

struct Dataset {
    DatasetSchema schema;
    std::vector<SurveyRecord> records;

    std::size_t size() const { return records.size(); }
};

struct Violation {
    std::string field;
    std::string message;
};

// The study schema: eight numeric features (indoor/outdoor conditions,
// daily weather, clothing insulation), five categorical ones (gender, grade,
// school, time slot, survey day), and the TSV/TPV/TCV scales (7/5/6 classes).
DatasetSchema default_schema();

// Throws ConfigError if the schema breaks its invariants (duplicate names,
// non-increasing scale values, all-zero loss weights, ...).
void validate_schema(const DatasetSchema& schema);

// Returns every violation; an empty list means the record is valid.
// Violations are data, not faults: nothing throws here.
std::vector<Violation> validate_record(const DatasetSchema& schema,
                                       const SurveyRecord& record);

// Schema <-> JSON document (see README for the layout).
std::string schema_to_json(const DatasetSchema& schema);
DatasetSchema schema_from_json(const std::string& text);

}  // namespace comfort
