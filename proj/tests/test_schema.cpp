#include <doctest.h>

#include <limits>
#include <string>
#include <vector>

#include "comfort/errors.hpp"
#include "comfort/schema.hpp"

using namespace comfort;

TEST_CASE("default schema exposes the study layout") {
    DatasetSchema s = default_schema();
    CHECK(s.features.size() == 13);
    REQUIRE(s.tasks.size() == 3);
    CHECK(s.tasks[0].scale.task_name == "TSV");
    CHECK(s.tasks[1].scale.task_name == "TPV");
    CHECK(s.tasks[2].scale.task_name == "TCV");
    CHECK(s.tasks[0].scale.size() == 7);
    CHECK(s.tasks[1].scale.size() == 5);
    CHECK(s.tasks[2].scale.size() == 6);
    // TCV has no neutral value.
    CHECK_FALSE(s.tasks[2].scale.contains(0));
    CHECK(s.tasks[2].scale.contains(-3));
    CHECK(s.tasks[2].scale.contains(3));
    // Only indoor temperature is required at prediction time.
    const FeatureSpec* temp = s.find_feature("indoor_temp");
    REQUIRE(temp != nullptr);
    CHECK(temp->required);
    const FeatureSpec* clo = s.find_feature("clo");
    REQUIRE(clo != nullptr);
    CHECK_FALSE(clo->required);
    CHECK(s.find_feature("no_such_feature") == nullptr);
    CHECK_NOTHROW(validate_schema(s));
}

TEST_CASE("class_index maps scale values to ascending slots and back") {
    DatasetSchema s = default_schema();
    const ComfortScale& tsv = s.tasks[0].scale;
    for (std::size_t i = 0; i < tsv.size(); ++i) {
        const int value = tsv.classes[i].value;
        CHECK(class_index(tsv, value) == i);
        CHECK(index_class(tsv, i) == value);
    }
    CHECK(class_index(tsv, -3) == 0);
    CHECK(class_index(tsv, 3) == 6);
    CHECK_THROWS_AS(class_index(tsv, 4), ValidationError);
    CHECK_THROWS_AS(class_index(tsv, -4), ValidationError);

    const ComfortScale& tcv = s.tasks[2].scale;
    CHECK(class_index(tcv, -1) == 2);
    CHECK(class_index(tcv, 1) == 3);  // the gap at zero does not shift slots
    CHECK_THROWS_AS(class_index(tcv, 0), ValidationError);
}

TEST_CASE("validate_schema rejects broken invariants") {
    SUBCASE("duplicate feature names") {
        DatasetSchema s = default_schema();
        s.features.push_back(s.features.front());
        CHECK_THROWS_AS(validate_schema(s), ConfigError);
    }
    SUBCASE("duplicate task names") {
        DatasetSchema s = default_schema();
        s.tasks.push_back(s.tasks.front());
        CHECK_THROWS_AS(validate_schema(s), ConfigError);
    }
    SUBCASE("non-increasing scale values") {
        DatasetSchema s = default_schema();
        s.tasks[0].scale.classes[1].value = s.tasks[0].scale.classes[0].value;
        CHECK_THROWS_AS(validate_schema(s), ConfigError);
    }
    SUBCASE("empty scale") {
        DatasetSchema s = default_schema();
        s.tasks[0].scale.classes.clear();
        CHECK_THROWS_AS(validate_schema(s), ConfigError);
    }
    SUBCASE("categorical feature without categories") {
        DatasetSchema s = default_schema();
        for (auto& f : s.features)
            if (f.kind == FeatureKind::Categorical) f.categories.clear();
        CHECK_THROWS_AS(validate_schema(s), ConfigError);
    }
    SUBCASE("all-zero loss weights") {
        DatasetSchema s = default_schema();
        for (auto& t : s.tasks) t.loss_weight = 0.0;
        CHECK_THROWS_AS(validate_schema(s), ConfigError);
    }
    SUBCASE("negative loss weight") {
        DatasetSchema s = default_schema();
        s.tasks[0].loss_weight = -1.0;
        CHECK_THROWS_AS(validate_schema(s), ConfigError);
    }
    SUBCASE("no features") {
        DatasetSchema s = default_schema();
        s.features.clear();
        CHECK_THROWS_AS(validate_schema(s), ConfigError);
    }
}

TEST_CASE("validate_record reports violations without throwing") {
    DatasetSchema s = default_schema();

    SurveyRecord good;
    good.values["indoor_temp"] = 16.2;
    good.values["clo"] = 1.4;
    good.values["gender"] = std::string("female");
    good.labels["TSV"] = -1;
    CHECK(validate_record(s, good).empty());

    SUBCASE("missing required feature is named") {
        SurveyRecord r = good;
        r.values.erase("indoor_temp");
        auto v = validate_record(s, r);
        REQUIRE(v.size() == 1);
        CHECK(v[0].field == "indoor_temp");
    }
    SUBCASE("required feature present but missing-valued") {
        SurveyRecord r = good;
        r.values["indoor_temp"] = Value{};
        auto v = validate_record(s, r);
        REQUIRE(v.size() == 1);
        CHECK(v[0].field == "indoor_temp");
    }
    SUBCASE("category text on a numeric feature") {
        SurveyRecord r = good;
        r.values["clo"] = std::string("warm");
        auto v = validate_record(s, r);
        REQUIRE(v.size() == 1);
        CHECK(v[0].field == "clo");
    }
    SUBCASE("number on a categorical feature") {
        SurveyRecord r = good;
        r.values["gender"] = 1.0;
        auto v = validate_record(s, r);
        REQUIRE(v.size() == 1);
        CHECK(v[0].field == "gender");
    }
    SUBCASE("category outside the declared list") {
        SurveyRecord r = good;
        r.values["gender"] = std::string("unlisted");
        auto v = validate_record(s, r);
        REQUIRE(v.size() == 1);
        CHECK(v[0].field == "gender");
        CHECK(v[0].message.find("unlisted") != std::string::npos);
    }
    SUBCASE("non-finite number") {
        SurveyRecord r = good;
        r.values["clo"] = std::numeric_limits<double>::quiet_NaN();
        auto v = validate_record(s, r);
        REQUIRE(v.size() == 1);
        CHECK(v[0].field == "clo");
    }
    SUBCASE("label outside its scale") {
        SurveyRecord r = good;
        r.labels["TSV"] = 9;
        auto v = validate_record(s, r);
        REQUIRE(v.size() == 1);
        CHECK(v[0].field == "TSV");
    }
    SUBCASE("TCV zero is out of scale") {
        SurveyRecord r = good;
        r.labels["TCV"] = 0;
        auto v = validate_record(s, r);
        REQUIRE(v.size() == 1);
        CHECK(v[0].field == "TCV");
    }
    SUBCASE("unknown field is a violation") {
        SurveyRecord r = good;
        r.values["height"] = 1.52;
        auto v = validate_record(s, r);
        REQUIRE(v.size() == 1);
        CHECK(v[0].field == "height");
    }
    SUBCASE("violations accumulate") {
        SurveyRecord r;
        r.values["clo"] = std::string("warm");
        r.labels["TPV"] = 7;
        auto v = validate_record(s, r);
        CHECK(v.size() == 3);  // missing indoor_temp + bad clo + bad TPV
    }
}

TEST_CASE("schema JSON round trip preserves every field") {
    DatasetSchema s = default_schema();
    s.tasks[1].loss_weight = 0.25;
    const std::string j = schema_to_json(s);
    DatasetSchema back = schema_from_json(j);
    CHECK(schema_to_json(back) == j);
    CHECK(back.features.size() == s.features.size());
    REQUIRE(back.tasks.size() == 3);
    CHECK(back.tasks[1].loss_weight == 0.25);
    CHECK(back.tasks[2].scale.classes[0].label ==
          s.tasks[2].scale.classes[0].label);
    const FeatureSpec* f = back.find_feature("school");
    REQUIRE(f != nullptr);
    CHECK(f->kind == FeatureKind::Categorical);
    CHECK(f->categories.size() == 5);
}

TEST_CASE("schema_from_json rejects malformed documents") {
    CHECK_THROWS_AS(schema_from_json("not json"), ConfigError);
    CHECK_THROWS_AS(schema_from_json("[]"), ConfigError);
    CHECK_THROWS_AS(schema_from_json("{}"), ConfigError);
}

TEST_CASE("task_index follows declaration order") {
    DatasetSchema s = default_schema();
    CHECK(s.task_index("TSV") == 0);
    CHECK(s.task_index("TPV") == 1);
    CHECK(s.task_index("TCV") == 2);
    CHECK_THROWS_AS(s.task_index("XYZ"), ValidationError);
    CHECK(s.find_task("TPV") != nullptr);
    CHECK(s.find_task("XYZ") == nullptr);
}
