#include "comfort/schema.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

namespace comfort {

using nlohmann::json;

bool ComfortScale::contains(int value) const {
    return std::any_of(classes.begin(), classes.end(),
                       [&](const ScaleClass& c) { return c.value == value; });
}

std::size_t class_index(const ComfortScale& scale, int value) {
    for (std::size_t i = 0; i < scale.classes.size(); ++i) {
        if (scale.classes[i].value == value) return i;
    }
    throw ValidationError("unknown class " + std::to_string(value) +
                          " for task " + scale.task_name);
}

int index_class(const ComfortScale& scale, std::size_t index) {
    if (index >= scale.classes.size()) {
        throw ValidationError("class index " + std::to_string(index) +
                              " out of range for task " + scale.task_name);
    }
    return scale.classes[index].value;
}

const FeatureSpec* DatasetSchema::find_feature(const std::string& name) const {
    for (const auto& f : features) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

const TaskSpec* DatasetSchema::find_task(const std::string& name) const {
    for (const auto& t : tasks) {
        if (t.scale.task_name == name) return &t;
    }
    return nullptr;
}

std::size_t DatasetSchema::task_index(const std::string& name) const {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].scale.task_name == name) return i;
    }
    throw ValidationError("unknown task " + name);
}

namespace {

ComfortScale make_scale(std::string name,
                        std::initializer_list<ScaleClass> classes) {
    ComfortScale s;
    s.task_name = std::move(name);
    s.classes = classes;
    return s;
}

FeatureSpec numeric_feature(std::string name, std::string unit,
                            bool required = false) {
    FeatureSpec f;
    f.name = std::move(name);
    f.kind = FeatureKind::Numeric;
    f.unit = std::move(unit);
    f.required = required;
    return f;
}

FeatureSpec categorical_feature(std::string name,
                                std::vector<std::string> categories) {
    FeatureSpec f;
    f.name = std::move(name);
    f.kind = FeatureKind::Categorical;
    f.categories = std::move(categories);
    return f;
}

}  // namespace

DatasetSchema default_schema() {
    DatasetSchema s;
    s.features = {
        numeric_feature("indoor_temp", "degC", /*required=*/true),
        numeric_feature("rel_humidity", "%"),
        numeric_feature("air_speed", "m/s"),
        numeric_feature("outdoor_temp", "degC"),
        numeric_feature("daily_max_temp", "degC"),
        numeric_feature("daily_min_temp", "degC"),
        numeric_feature("daily_avg_temp", "degC"),
        numeric_feature("clo", "clo"),
        categorical_feature("gender", {"female", "male"}),
        categorical_feature("grade", {"grade3", "grade4", "grade5"}),
        categorical_feature("school", {"school1", "school2", "school3",
                                       "school4", "school5"}),
        categorical_feature("slot", {"slot1", "slot2", "slot3", "slot4",
                                     "slot5", "slot6"}),
        categorical_feature("day", {"day1", "day2", "day3", "day4", "day5"}),
    };
    // 7-point sensation, 5-point preference, 6-point comfort (no neutral).
    // Label texts are configurable via schema JSON; only the class counts and
    // value ordering are contractual.
    s.tasks = {
        TaskSpec{make_scale("TSV", {{-3, "Cold"},
                                    {-2, "Cool"},
                                    {-1, "Slightly Cool"},
                                    {0, "Neutral"},
                                    {1, "Slightly Warm"},
                                    {2, "Warm"},
                                    {3, "Hot"}}),
                 1.0},
        TaskSpec{make_scale("TPV", {{-2, "Much Cooler"},
                                    {-1, "Bit Cooler"},
                                    {0, "No Change"},
                                    {1, "Bit Warmer"},
                                    {2, "Much Warmer"}}),
                 1.0},
        TaskSpec{make_scale("TCV", {{-3, "Very Uncomfortable"},
                                    {-2, "Uncomfortable"},
                                    {-1, "Slightly Uncomfortable"},
                                    {1, "Slightly Comfortable"},
                                    {2, "Comfortable"},
                                    {3, "Very Comfortable"}}),
                 1.0},
    };
    return s;
}

void validate_schema(const DatasetSchema& schema) {
    if (schema.features.empty()) throw ConfigError("schema has no features");
    std::set<std::string> names;
    for (const auto& f : schema.features) {
        if (f.name.empty()) throw ConfigError("feature with empty name");
        if (!names.insert(f.name).second) {
            throw ConfigError("duplicate feature name: " + f.name);
        }
        if (f.kind == FeatureKind::Categorical) {
            std::set<std::string> cats(f.categories.begin(),
                                       f.categories.end());
            if (cats.size() != f.categories.size()) {
                throw ConfigError("duplicate category in feature " + f.name);
            }
            if (f.categories.empty()) {
                throw ConfigError("categorical feature " + f.name +
                                  " has no categories");
            }
        }
    }
    if (schema.tasks.empty()) throw ConfigError("schema has no tasks");
    bool any_positive = false;
    for (const auto& t : schema.tasks) {
        const auto& sc = t.scale;
        if (!names.insert(sc.task_name).second) {
            throw ConfigError("task name collides with a feature or task: " +
                              sc.task_name);
        }
        if (sc.classes.size() < 2) {
            throw ConfigError("scale " + sc.task_name +
                              " needs at least 2 classes");
        }
        for (std::size_t i = 1; i < sc.classes.size(); ++i) {
            if (sc.classes[i].value <= sc.classes[i - 1].value) {
                throw ConfigError("scale " + sc.task_name +
                                  " class values must be strictly increasing");
            }
        }
        if (!(t.loss_weight >= 0.0) || !std::isfinite(t.loss_weight)) {
            throw ConfigError("task " + sc.task_name +
                              " loss weight must be finite and >= 0");
        }
        any_positive = any_positive || t.loss_weight > 0.0;
    }
    if (!any_positive) {
        throw ConfigError("at least one task must have loss weight > 0");
    }
}

std::vector<Violation> validate_record(const DatasetSchema& schema,
                                       const SurveyRecord& record) {
    std::vector<Violation> out;
    for (const auto& [name, value] : record.values) {
        const FeatureSpec* spec = schema.find_feature(name);
        if (spec == nullptr) {
            out.push_back({name, "unknown feature"});
            continue;
        }
        if (is_missing(value)) continue;
        if (spec->kind == FeatureKind::Numeric) {
            if (!std::holds_alternative<double>(value)) {
                out.push_back({name, "expected a number"});
            } else if (!std::isfinite(std::get<double>(value))) {
                out.push_back({name, "non-finite number"});
            }
        } else {
            if (!std::holds_alternative<std::string>(value)) {
                out.push_back({name, "expected a category"});
            } else {
                const auto& cat = std::get<std::string>(value);
                if (std::find(spec->categories.begin(), spec->categories.end(),
                              cat) == spec->categories.end()) {
                    out.push_back({name, "unknown category \"" + cat + "\""});
                }
            }
        }
    }
    for (const auto& f : schema.features) {
        if (!f.required) continue;
        auto it = record.values.find(f.name);
        if (it == record.values.end() || is_missing(it->second)) {
            out.push_back({f.name, "missing required feature"});
        }
    }
    for (const auto& [task, value] : record.labels) {
        const TaskSpec* spec = schema.find_task(task);
        if (spec == nullptr) {
            out.push_back({task, "unknown task"});
        } else if (!spec->scale.contains(value)) {
            out.push_back({task, "label " + std::to_string(value) +
                                     " outside scale"});
        }
    }
    return out;
}

namespace {

json scale_to_json(const ComfortScale& s) {
    json classes = json::array();
    for (const auto& c : s.classes) {
        classes.push_back({{"value", c.value}, {"label", c.label}});
    }
    return classes;
}

}  // namespace

std::string schema_to_json(const DatasetSchema& schema) {
    json doc;
    doc["features"] = json::array();
    for (const auto& f : schema.features) {
        json jf;
        jf["name"] = f.name;
        jf["kind"] =
            f.kind == FeatureKind::Numeric ? "numeric" : "categorical";
        if (f.kind == FeatureKind::Numeric) {
            jf["unit"] = f.unit;
        } else {
            jf["categories"] = f.categories;
        }
        jf["required"] = f.required;
        doc["features"].push_back(jf);
    }
    doc["tasks"] = json::array();
    for (const auto& t : schema.tasks) {
        doc["tasks"].push_back({{"name", t.scale.task_name},
                                {"classes", scale_to_json(t.scale)},
                                {"loss_weight", t.loss_weight}});
    }
    return doc.dump(2);
}

DatasetSchema schema_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("schema JSON parse error: ") + e.what());
    }
    DatasetSchema schema;
    try {
        for (const auto& jf : doc.at("features")) {
            FeatureSpec f;
            f.name = jf.at("name").get<std::string>();
            const auto kind = jf.at("kind").get<std::string>();
            if (kind == "numeric") {
                f.kind = FeatureKind::Numeric;
                f.unit = jf.value("unit", "");
            } else if (kind == "categorical") {
                f.kind = FeatureKind::Categorical;
                f.categories =
                    jf.at("categories").get<std::vector<std::string>>();
            } else {
                throw ConfigError("unknown feature kind: " + kind);
            }
            f.required = jf.value("required", false);
            schema.features.push_back(std::move(f));
        }
        for (const auto& jt : doc.at("tasks")) {
            TaskSpec t;
            t.scale.task_name = jt.at("name").get<std::string>();
            for (const auto& jc : jt.at("classes")) {
                t.scale.classes.push_back({jc.at("value").get<int>(),
                                           jc.value("label", "")});
            }
            t.loss_weight = jt.value("loss_weight", 1.0);
            schema.tasks.push_back(std::move(t));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("schema JSON layout error: ") +
                          e.what());
    }
    validate_schema(schema);
    return schema;
}

}  // namespace comfort
