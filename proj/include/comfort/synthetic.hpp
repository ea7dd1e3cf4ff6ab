#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "comfort/schema.hpp"

namespace comfort {

// Distribution for one synthetic feature. Numeric features draw normal or
// uniform; categorical features draw from the schema's category list, by
// default uniformly. A numeric mean may be conditioned on a categorical
// feature drawn earlier (categoricals are always drawn before numerics), so
// e.g. clothing insulation can carry grade-specific means.
struct FeatureDist {
    enum class Kind { Normal, Uniform, Categorical };
    Kind kind = Kind::Normal;
    double mean = 0.0;
    double sd = 1.0;
    double low = 0.0;
    double high = 1.0;
    std::vector<double> weights;  // categorical; empty = uniform
    std::string mean_by_feature;  // optional conditioning categorical
    std::map<std::string, double> mean_by;  // category -> mean override
};

// The latent comfort score behind all three labels. With dT = temp -
// temp_center, dC = clo - clo_center and so on:
//
//   z = bias + temp_coeff * dT + clo_coeff * dC + humidity_coeff * dH
//            + airspeed_coeff * dA + outdoor_coeff * dO
//            + interact_coeff * dT * dC
//
// Temperature dominates; humidity, air speed and outdoor temperature are
// weak secondary drivers, and the interaction term makes clothing matter
// more the colder it gets. A secondary coefficient of zero skips its
// feature entirely, so custom schemas only need the features they use.
//
// Each label reads z through its own response noise, z_t = z +
// Normal(0, noise_sd) drawn independently per task: one comfort state,
// three subjective answers. TSV rises with z_t (clamped nearest integer),
// TPV falls with z_t (clamped nearest integer of -tpv_scale * z_t), and
// TCV falls with |z_t| through the ascending thresholds: |z_t| below
// thresholds[0] maps to the top comfort class, beyond thresholds[4] to the
// bottom one.
struct LatentMap {
    std::string temp_feature = "indoor_temp";
    std::string clo_feature = "clo";
    std::string humidity_feature = "rel_humidity";
    std::string airspeed_feature = "air_speed";
    std::string outdoor_feature = "outdoor_temp";
    double bias = -0.4;
    double temp_coeff = 0.45;
    double temp_center = 15.0;
    double clo_coeff = 1.5;
    double clo_center = 1.4;
    double humidity_coeff = 0.018;
    double humidity_center = 55.0;
    double airspeed_coeff = -1.3;
    double airspeed_center = 0.15;
    double outdoor_coeff = 0.06;
    double outdoor_center = 18.0;
    double interact_coeff = 0.35;
    double noise_sd = 0.55;
    double tpv_scale = 0.8;
    std::vector<double> tcv_thresholds = {0.5, 1.0, 1.5, 2.0, 2.5};
};

struct SynthSpec {
    DatasetSchema schema;
    std::map<std::string, FeatureDist> features;
    LatentMap latent;
    // Fraction of records whose TCV is resampled uniformly, modeling
    // contradictory survey answers. Labels stay inside the scale.
    double illogical_fraction = 0.1;
};

// Defaults match the study setting: indoor temperature Normal(15.0, 2.5),
// clothing Normal with grade-conditional means 1.375/1.398/1.451, uniform
// categoricals. Air speed is a Uniform(0, 0.3) placeholder; no summary
// statistic anchors it.
SynthSpec default_synth_spec();
SynthSpec default_synth_spec(const DatasetSchema& schema);

// Throws ConfigError for invalid specs (negative deviations, fraction
// outside [0,1], unknown feature names, non-ascending thresholds).
void validate_synth_spec(const SynthSpec& spec);

// Deterministic for fixed (n, seed, spec); exports byte-identically.
Dataset generate_synthetic(std::size_t n, std::uint64_t seed,
                           const SynthSpec& spec);

// Label triple for a latent score; exposed so tests can re-derive labels.
struct LatentLabels {
    int tsv;
    int tpv;
    int tcv;
};
LatentLabels labels_from_latent(double z, const SynthSpec& spec);

// SynthSpec <-> JSON (schema omitted; the caller supplies it).
std::string synth_spec_to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const std::string& text,
                               const DatasetSchema& schema);

}  // namespace comfort
