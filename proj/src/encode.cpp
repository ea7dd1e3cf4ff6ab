#include "comfort/encode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "comfort/rng.hpp"

namespace comfort {

ImputeStats compute_impute_stats(const Dataset& dataset) {
    ImputeStats stats;
    for (const auto& f : dataset.schema.features) {
        if (f.kind == FeatureKind::Numeric) {
            std::vector<double> vals;
            for (const auto& rec : dataset.records) {
                auto it = rec.values.find(f.name);
                if (it != rec.values.end() &&
                    std::holds_alternative<double>(it->second)) {
                    vals.push_back(std::get<double>(it->second));
                }
            }
            if (vals.empty()) {
                throw ValidationError("cannot impute empty column \"" +
                                      f.name + "\"");
            }
            std::sort(vals.begin(), vals.end());
            std::size_t m = vals.size();
            double median = (m % 2 == 1)
                                ? vals[m / 2]
                                : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
            stats.medians[f.name] = median;
        } else {
            // Mode; ties broken by schema category order.
            std::vector<std::size_t> counts(f.categories.size(), 0);
            for (const auto& rec : dataset.records) {
                auto it = rec.values.find(f.name);
                if (it == rec.values.end() ||
                    !std::holds_alternative<std::string>(it->second)) {
                    continue;
                }
                const auto& cat = std::get<std::string>(it->second);
                auto pos = std::find(f.categories.begin(), f.categories.end(),
                                     cat);
                if (pos != f.categories.end()) {
                    counts[static_cast<std::size_t>(
                        pos - f.categories.begin())]++;
                }
            }
            std::size_t best = 0;
            bool any = false;
            for (std::size_t i = 0; i < counts.size(); ++i) {
                if (counts[i] > 0 && (!any || counts[i] > counts[best])) {
                    best = i;
                    any = true;
                }
            }
            if (!any) {
                throw ValidationError("cannot impute empty column \"" +
                                      f.name + "\"");
            }
            stats.modes[f.name] = f.categories[best];
        }
    }
    return stats;
}

Dataset impute_with(const Dataset& dataset, const ImputeStats& stats) {
    Dataset out = dataset;
    for (auto& rec : out.records) {
        for (const auto& f : out.schema.features) {
            auto it = rec.values.find(f.name);
            bool missing = it == rec.values.end() || is_missing(it->second);
            if (!missing) continue;
            if (f.kind == FeatureKind::Numeric) {
                auto st = stats.medians.find(f.name);
                if (st == stats.medians.end()) {
                    throw ValidationError("no imputation value for \"" +
                                          f.name + "\"");
                }
                rec.values[f.name] = st->second;
            } else {
                auto st = stats.modes.find(f.name);
                if (st == stats.modes.end()) {
                    throw ValidationError("no imputation value for \"" +
                                          f.name + "\"");
                }
                rec.values[f.name] = st->second;
            }
        }
    }
    return out;
}

Dataset impute(const Dataset& dataset) {
    return impute_with(dataset, compute_impute_stats(dataset));
}

std::size_t Encoder::dim() const {
    std::size_t d = numeric.size();
    for (const auto& c : categorical) d += c.categories.size() + 1;
    return d;
}

Encoder fit_encoder(const Dataset& train) {
    Encoder enc;
    for (const auto& f : train.schema.features) {
        if (f.kind == FeatureKind::Numeric) {
            double sum = 0.0;
            std::size_t m = 0;
            for (const auto& rec : train.records) {
                auto it = rec.values.find(f.name);
                if (it != rec.values.end() &&
                    std::holds_alternative<double>(it->second)) {
                    sum += std::get<double>(it->second);
                    ++m;
                }
            }
            double mean = m > 0 ? sum / static_cast<double>(m) : 0.0;
            double ss = 0.0;
            for (const auto& rec : train.records) {
                auto it = rec.values.find(f.name);
                if (it != rec.values.end() &&
                    std::holds_alternative<double>(it->second)) {
                    double dlt = std::get<double>(it->second) - mean;
                    ss += dlt * dlt;
                }
            }
            double std = m > 0 ? std::sqrt(ss / static_cast<double>(m)) : 0.0;
            enc.numeric.push_back({f.name, mean, std});
        } else {
            // Categories observed in training, kept in schema-declared order.
            std::vector<bool> seen(f.categories.size(), false);
            for (const auto& rec : train.records) {
                auto it = rec.values.find(f.name);
                if (it == rec.values.end() ||
                    !std::holds_alternative<std::string>(it->second)) {
                    continue;
                }
                auto pos = std::find(f.categories.begin(), f.categories.end(),
                                     std::get<std::string>(it->second));
                if (pos != f.categories.end()) {
                    seen[static_cast<std::size_t>(pos - f.categories.begin())] =
                        true;
                }
            }
            Encoder::CategoricalSlots slots;
            slots.name = f.name;
            for (std::size_t i = 0; i < f.categories.size(); ++i) {
                if (seen[i]) slots.categories.push_back(f.categories[i]);
            }
            enc.categorical.push_back(std::move(slots));
        }
    }
    enc.fitted = true;
    return enc;
}

void encode_record(const Encoder& encoder, const DatasetSchema& schema,
                   const SurveyRecord& record, double* out) {
    if (!encoder.fitted) throw ConfigError("encoder not fitted");
    (void)schema;
    std::size_t col = 0;
    for (const auto& ns : encoder.numeric) {
        auto it = record.values.find(ns.name);
        if (it == record.values.end() ||
            !std::holds_alternative<double>(it->second)) {
            throw ValidationError("feature \"" + ns.name +
                                  "\" missing or non-numeric at encode time");
        }
        double v = std::get<double>(it->second);
        out[col++] = ns.std > 0.0 ? (v - ns.mean) / ns.std : 0.0;
    }
    for (const auto& cs : encoder.categorical) {
        auto it = record.values.find(cs.name);
        if (it == record.values.end() ||
            !std::holds_alternative<std::string>(it->second)) {
            throw ValidationError("feature \"" + cs.name +
                                  "\" missing or non-categorical at encode "
                                  "time");
        }
        const auto& cat = std::get<std::string>(it->second);
        std::size_t base = col;
        std::size_t width = cs.categories.size() + 1;
        for (std::size_t i = 0; i < width; ++i) out[base + i] = 0.0;
        auto pos = std::find(cs.categories.begin(), cs.categories.end(), cat);
        if (pos != cs.categories.end()) {
            out[base + static_cast<std::size_t>(pos - cs.categories.begin())] =
                1.0;
        } else {
            out[base + width - 1] = 1.0;  // OTHER slot
        }
        col += width;
    }
}

EncodedDataset encode(const Encoder& encoder, const Dataset& dataset) {
    if (!encoder.fitted) throw ConfigError("encoder not fitted");
    EncodedDataset out;
    out.schema = dataset.schema;
    out.encoder = encoder;
    out.n = dataset.records.size();
    out.d = encoder.dim();
    out.x.assign(out.n * out.d, 0.0);
    for (std::size_t i = 0; i < out.n; ++i) {
        encode_record(encoder, dataset.schema, dataset.records[i],
                      out.x.data() + i * out.d);
    }
    out.label_index.resize(dataset.schema.tasks.size());
    out.label_present.resize(dataset.schema.tasks.size());
    for (std::size_t t = 0; t < dataset.schema.tasks.size(); ++t) {
        const auto& scale = dataset.schema.tasks[t].scale;
        out.label_index[t].assign(out.n, 0);
        out.label_present[t].assign(out.n, false);
        for (std::size_t i = 0; i < out.n; ++i) {
            auto lab = dataset.records[i].label(scale.task_name);
            if (lab) {
                out.label_index[t][i] = class_index(scale, *lab);
                out.label_present[t][i] = true;
            }
        }
    }
    return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t f : assignment) sizes[f]++;
    return sizes;
}

std::vector<std::size_t> FoldPlan::validation_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] == fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::training_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] != fold) out.push_back(i);
    }
    return out;
}

FoldPlan kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("k must be at least 2");
    if (k > n) throw ConfigError("more folds than samples");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "kfold"));
    rng.shuffle(order);

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignment.assign(n, 0);
    // Contiguous partition of the shuffled order; the first n % k folds take
    // the extra sample.
    std::size_t base = n / k;
    std::size_t extra = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        std::size_t len = base + (f < extra ? 1 : 0);
        for (std::size_t j = 0; j < len; ++j) {
            plan.assignment[order[pos++]] = f;
        }
    }
    return plan;
}

}  // namespace comfort
