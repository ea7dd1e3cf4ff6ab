#include "comfort/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "comfort/rng.hpp"

namespace comfort {

using nlohmann::json;

namespace {

FeatureDist normal_dist(double mean, double sd) {
    FeatureDist d;
    d.kind = FeatureDist::Kind::Normal;
    d.mean = mean;
    d.sd = sd;
    return d;
}

FeatureDist uniform_dist(double low, double high) {
    FeatureDist d;
    d.kind = FeatureDist::Kind::Uniform;
    d.low = low;
    d.high = high;
    return d;
}

FeatureDist categorical_dist() {
    FeatureDist d;
    d.kind = FeatureDist::Kind::Categorical;
    return d;
}

int clamp_round(double v, int lo, int hi) {
    long r = std::lround(v);
    if (r < lo) return lo;
    if (r > hi) return hi;
    return static_cast<int>(r);
}

}  // namespace

SynthSpec default_synth_spec() { return default_synth_spec(default_schema()); }

SynthSpec default_synth_spec(const DatasetSchema& schema) {
    SynthSpec spec;
    spec.schema = schema;
    spec.features["indoor_temp"] = normal_dist(15.0, 2.5);
    spec.features["rel_humidity"] = normal_dist(55.0, 10.0);
    spec.features["air_speed"] = uniform_dist(0.0, 0.3);  // placeholder
    spec.features["outdoor_temp"] = normal_dist(18.0, 3.0);
    spec.features["daily_max_temp"] = normal_dist(21.5, 1.5);
    spec.features["daily_min_temp"] = normal_dist(6.0, 2.0);
    spec.features["daily_avg_temp"] = normal_dist(14.0, 2.0);
    FeatureDist clo = normal_dist(1.40, 0.15);
    clo.mean_by_feature = "grade";
    clo.mean_by = {{"grade3", 1.375}, {"grade4", 1.398}, {"grade5", 1.451}};
    spec.features["clo"] = clo;
    for (const auto& f : schema.features) {
        if (f.kind == FeatureKind::Categorical &&
            spec.features.find(f.name) == spec.features.end()) {
            spec.features[f.name] = categorical_dist();
        }
    }
    return spec;
}

void validate_synth_spec(const SynthSpec& spec) {
    validate_schema(spec.schema);
    if (!(spec.illogical_fraction >= 0.0 && spec.illogical_fraction <= 1.0)) {
        throw ConfigError("illogical_fraction must be in [0, 1]");
    }
    for (const auto& [name, dist] : spec.features) {
        const FeatureSpec* f = spec.schema.find_feature(name);
        if (f == nullptr) {
            throw ConfigError("synthetic spec names unknown feature \"" +
                              name + "\"");
        }
        bool wants_categorical = dist.kind == FeatureDist::Kind::Categorical;
        bool is_categorical = f->kind == FeatureKind::Categorical;
        if (wants_categorical != is_categorical) {
            throw ConfigError("distribution kind does not match feature \"" +
                              name + "\"");
        }
        if (dist.kind == FeatureDist::Kind::Normal && dist.sd < 0.0) {
            throw ConfigError("negative standard deviation for \"" + name +
                              "\"");
        }
        if (dist.kind == FeatureDist::Kind::Uniform &&
            dist.high < dist.low) {
            throw ConfigError("uniform bounds reversed for \"" + name + "\"");
        }
        if (dist.kind == FeatureDist::Kind::Categorical &&
            !dist.weights.empty()) {
            if (dist.weights.size() != f->categories.size()) {
                throw ConfigError("category weights length mismatch for \"" +
                                  name + "\"");
            }
            double sum = 0.0;
            for (double w : dist.weights) {
                if (w < 0.0) {
                    throw ConfigError("negative category weight for \"" +
                                      name + "\"");
                }
                sum += w;
            }
            if (sum <= 0.0) {
                throw ConfigError("category weights sum to zero for \"" +
                                  name + "\"");
            }
        }
        if (!dist.mean_by_feature.empty()) {
            const FeatureSpec* by = spec.schema.find_feature(
                dist.mean_by_feature);
            if (by == nullptr || by->kind != FeatureKind::Categorical) {
                throw ConfigError("mean_by feature for \"" + name +
                                  "\" must be an existing categorical "
                                  "feature");
            }
        }
    }
    for (const auto& f : spec.schema.features) {
        if (spec.features.find(f.name) == spec.features.end()) {
            throw ConfigError("synthetic spec missing distribution for \"" +
                              f.name + "\"");
        }
    }
    const auto& lt = spec.latent;
    if (lt.noise_sd < 0.0) throw ConfigError("latent noise_sd must be >= 0");
    if (lt.tcv_thresholds.size() != 5 ||
        !std::is_sorted(lt.tcv_thresholds.begin(), lt.tcv_thresholds.end())) {
        throw ConfigError("tcv_thresholds must be 5 ascending values");
    }
    if (spec.schema.find_feature(lt.temp_feature) == nullptr ||
        spec.schema.find_feature(lt.clo_feature) == nullptr) {
        throw ConfigError("latent map names unknown features");
    }
    // Secondary drivers are optional: a zero coefficient skips the lookup.
    if ((lt.humidity_coeff != 0.0 &&
         spec.schema.find_feature(lt.humidity_feature) == nullptr) ||
        (lt.airspeed_coeff != 0.0 &&
         spec.schema.find_feature(lt.airspeed_feature) == nullptr) ||
        (lt.outdoor_coeff != 0.0 &&
         spec.schema.find_feature(lt.outdoor_feature) == nullptr)) {
        throw ConfigError("latent map names unknown features");
    }
}

LatentLabels labels_from_latent(double z, const SynthSpec& spec) {
    const auto& lt = spec.latent;
    LatentLabels out{};
    out.tsv = clamp_round(z, -3, 3);
    out.tpv = clamp_round(-lt.tpv_scale * z, -2, 2);
    double a = std::fabs(z);
    static const int kComfort[6] = {3, 2, 1, -1, -2, -3};
    std::size_t band = 5;
    for (std::size_t i = 0; i < lt.tcv_thresholds.size(); ++i) {
        if (a < lt.tcv_thresholds[i]) {
            band = i;
            break;
        }
    }
    out.tcv = kComfort[band];
    return out;
}

Dataset generate_synthetic(std::size_t n, std::uint64_t seed,
                           const SynthSpec& spec) {
    if (n < 1) throw ConfigError("n must be >= 1");
    validate_synth_spec(spec);
    const auto& schema = spec.schema;
    const auto& lt = spec.latent;

    // Three task scales are assumed by the latent map.
    const TaskSpec* tsv = schema.find_task("TSV");
    const TaskSpec* tpv = schema.find_task("TPV");
    const TaskSpec* tcv = schema.find_task("TCV");
    if (!tsv || !tpv || !tcv) {
        throw ConfigError("synthetic generation needs TSV, TPV and TCV tasks");
    }

    Rng rng(derive_seed(seed, "synth"));
    Dataset out;
    out.schema = schema;
    out.records.reserve(n);

    // Split features so conditioning categoricals are available to numerics.
    std::vector<const FeatureSpec*> categoricals;
    std::vector<const FeatureSpec*> numerics;
    for (const auto& f : schema.features) {
        (f.kind == FeatureKind::Categorical ? categoricals : numerics)
            .push_back(&f);
    }

    for (std::size_t i = 0; i < n; ++i) {
        SurveyRecord rec;
        for (const FeatureSpec* f : categoricals) {
            const FeatureDist& dist = spec.features.at(f->name);
            std::size_t idx;
            if (dist.weights.empty()) {
                idx = static_cast<std::size_t>(
                    rng.bounded(f->categories.size()));
            } else {
                double total = 0.0;
                for (double w : dist.weights) total += w;
                double u = rng.uniform() * total;
                idx = dist.weights.size() - 1;
                double acc = 0.0;
                for (std::size_t c = 0; c < dist.weights.size(); ++c) {
                    acc += dist.weights[c];
                    if (u < acc) {
                        idx = c;
                        break;
                    }
                }
            }
            rec.values[f->name] = f->categories[idx];
        }
        for (const FeatureSpec* f : numerics) {
            const FeatureDist& dist = spec.features.at(f->name);
            double v;
            if (dist.kind == FeatureDist::Kind::Uniform) {
                v = rng.uniform(dist.low, dist.high);
            } else {
                double mean = dist.mean;
                if (!dist.mean_by_feature.empty()) {
                    auto it = rec.values.find(dist.mean_by_feature);
                    if (it != rec.values.end() &&
                        std::holds_alternative<std::string>(it->second)) {
                        auto ov = dist.mean_by.find(
                            std::get<std::string>(it->second));
                        if (ov != dist.mean_by.end()) mean = ov->second;
                    }
                }
                v = rng.normal(mean, dist.sd);
            }
            rec.values[f->name] = v;
        }

        auto numeric_at = [&rec](const std::string& name) {
            return std::get<double>(rec.values.at(name));
        };
        const double dt = numeric_at(lt.temp_feature) - lt.temp_center;
        const double dc = numeric_at(lt.clo_feature) - lt.clo_center;
        double z = lt.bias + lt.temp_coeff * dt + lt.clo_coeff * dc +
                   lt.interact_coeff * dt * dc;
        if (lt.humidity_coeff != 0.0)
            z += lt.humidity_coeff *
                 (numeric_at(lt.humidity_feature) - lt.humidity_center);
        if (lt.airspeed_coeff != 0.0)
            z += lt.airspeed_coeff *
                 (numeric_at(lt.airspeed_feature) - lt.airspeed_center);
        if (lt.outdoor_coeff != 0.0)
            z += lt.outdoor_coeff *
                 (numeric_at(lt.outdoor_feature) - lt.outdoor_center);
        // Each vote gets its own response noise: three subjective answers
        // to one underlying comfort state.
        rec.labels["TSV"] =
            labels_from_latent(z + rng.normal(0.0, lt.noise_sd), spec).tsv;
        rec.labels["TPV"] =
            labels_from_latent(z + rng.normal(0.0, lt.noise_sd), spec).tpv;
        rec.labels["TCV"] =
            labels_from_latent(z + rng.normal(0.0, lt.noise_sd), spec).tcv;
        if (rng.uniform() < spec.illogical_fraction) {
            std::size_t j = static_cast<std::size_t>(
                rng.bounded(tcv->scale.classes.size()));
            rec.labels["TCV"] = tcv->scale.classes[j].value;
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

namespace {

json dist_to_json(const FeatureDist& d) {
    json j;
    switch (d.kind) {
        case FeatureDist::Kind::Normal:
            j["dist"] = "normal";
            j["mean"] = d.mean;
            j["sd"] = d.sd;
            break;
        case FeatureDist::Kind::Uniform:
            j["dist"] = "uniform";
            j["low"] = d.low;
            j["high"] = d.high;
            break;
        case FeatureDist::Kind::Categorical:
            j["dist"] = "categorical";
            if (!d.weights.empty()) j["weights"] = d.weights;
            break;
    }
    if (!d.mean_by_feature.empty()) {
        j["mean_by"] = {{"feature", d.mean_by_feature},
                        {"means", d.mean_by}};
    }
    return j;
}

FeatureDist dist_from_json(const json& j) {
    FeatureDist d;
    const auto kind = j.at("dist").get<std::string>();
    if (kind == "normal") {
        d.kind = FeatureDist::Kind::Normal;
        d.mean = j.value("mean", 0.0);
        d.sd = j.value("sd", 1.0);
    } else if (kind == "uniform") {
        d.kind = FeatureDist::Kind::Uniform;
        d.low = j.value("low", 0.0);
        d.high = j.value("high", 1.0);
    } else if (kind == "categorical") {
        d.kind = FeatureDist::Kind::Categorical;
        if (j.contains("weights")) {
            d.weights = j.at("weights").get<std::vector<double>>();
        }
    } else {
        throw ConfigError("unknown distribution kind: " + kind);
    }
    if (j.contains("mean_by")) {
        d.mean_by_feature = j.at("mean_by").at("feature").get<std::string>();
        d.mean_by = j.at("mean_by")
                        .at("means")
                        .get<std::map<std::string, double>>();
    }
    return d;
}

}  // namespace

std::string synth_spec_to_json(const SynthSpec& spec) {
    json doc;
    doc["illogical_fraction"] = spec.illogical_fraction;
    doc["features"] = json::object();
    for (const auto& [name, dist] : spec.features) {
        doc["features"][name] = dist_to_json(dist);
    }
    const auto& lt = spec.latent;
    doc["latent"] = {{"temp_feature", lt.temp_feature},
                     {"clo_feature", lt.clo_feature},
                     {"humidity_feature", lt.humidity_feature},
                     {"airspeed_feature", lt.airspeed_feature},
                     {"outdoor_feature", lt.outdoor_feature},
                     {"bias", lt.bias},
                     {"temp_coeff", lt.temp_coeff},
                     {"temp_center", lt.temp_center},
                     {"clo_coeff", lt.clo_coeff},
                     {"clo_center", lt.clo_center},
                     {"humidity_coeff", lt.humidity_coeff},
                     {"humidity_center", lt.humidity_center},
                     {"airspeed_coeff", lt.airspeed_coeff},
                     {"airspeed_center", lt.airspeed_center},
                     {"outdoor_coeff", lt.outdoor_coeff},
                     {"outdoor_center", lt.outdoor_center},
                     {"interact_coeff", lt.interact_coeff},
                     {"noise_sd", lt.noise_sd},
                     {"tpv_scale", lt.tpv_scale},
                     {"tcv_thresholds", lt.tcv_thresholds}};
    return doc.dump(2);
}

SynthSpec synth_spec_from_json(const std::string& text,
                               const DatasetSchema& schema) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("synthetic spec parse error: ") +
                          e.what());
    }
    SynthSpec spec = default_synth_spec(schema);
    try {
        if (doc.contains("illogical_fraction")) {
            spec.illogical_fraction = doc.at("illogical_fraction").get<double>();
        }
        if (doc.contains("features")) {
            for (auto it = doc["features"].begin(); it != doc["features"].end();
                 ++it) {
                spec.features[it.key()] = dist_from_json(it.value());
            }
        }
        if (doc.contains("latent")) {
            const json& jl = doc["latent"];
            auto& lt = spec.latent;
            lt.temp_feature = jl.value("temp_feature", lt.temp_feature);
            lt.clo_feature = jl.value("clo_feature", lt.clo_feature);
            lt.humidity_feature =
                jl.value("humidity_feature", lt.humidity_feature);
            lt.airspeed_feature =
                jl.value("airspeed_feature", lt.airspeed_feature);
            lt.outdoor_feature =
                jl.value("outdoor_feature", lt.outdoor_feature);
            lt.bias = jl.value("bias", lt.bias);
            lt.temp_coeff = jl.value("temp_coeff", lt.temp_coeff);
            lt.temp_center = jl.value("temp_center", lt.temp_center);
            lt.clo_coeff = jl.value("clo_coeff", lt.clo_coeff);
            lt.clo_center = jl.value("clo_center", lt.clo_center);
            lt.humidity_coeff =
                jl.value("humidity_coeff", lt.humidity_coeff);
            lt.humidity_center =
                jl.value("humidity_center", lt.humidity_center);
            lt.airspeed_coeff =
                jl.value("airspeed_coeff", lt.airspeed_coeff);
            lt.airspeed_center =
                jl.value("airspeed_center", lt.airspeed_center);
            lt.outdoor_coeff = jl.value("outdoor_coeff", lt.outdoor_coeff);
            lt.outdoor_center =
                jl.value("outdoor_center", lt.outdoor_center);
            lt.interact_coeff =
                jl.value("interact_coeff", lt.interact_coeff);
            lt.noise_sd = jl.value("noise_sd", lt.noise_sd);
            lt.tpv_scale = jl.value("tpv_scale", lt.tpv_scale);
            if (jl.contains("tcv_thresholds")) {
                lt.tcv_thresholds =
                    jl.at("tcv_thresholds").get<std::vector<double>>();
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("synthetic spec layout error: ") +
                          e.what());
    }
    validate_synth_spec(spec);
    return spec;
}

}  // namespace comfort
