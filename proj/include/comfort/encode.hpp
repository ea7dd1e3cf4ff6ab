#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "comfort/schema.hpp"

namespace comfort {

// Training-set statistics used to fill missing feature cells: column medians
// for numeric features, column modes for categorical ones. Labels are never
// imputed.
struct ImputeStats {
    std::map<std::string, double> medians;
    std::map<std::string, std::string> modes;
};

// Throws ValidationError when a feature is entirely missing (no statistic
// can be computed for it).
ImputeStats compute_impute_stats(const Dataset& dataset);
Dataset impute_with(const Dataset& dataset, const ImputeStats& stats);
Dataset impute(const Dataset& dataset);

// Fitted feature-encoding statistics. Numeric features standardize with the
// training mean and population standard deviation (zero-deviation features
// encode to constant 0). Categorical features one-hot over the categories
// observed in training, in schema-declared order, with a reserved OTHER slot
// last for categories unseen at fit time.
struct Encoder {
    struct NumericStats {
        std::string name;
        double mean = 0.0;
        double std = 0.0;
    };
    struct CategoricalSlots {
        std::string name;
        std::vector<std::string> categories;  // fitted order; OTHER implicit
    };

    std::vector<NumericStats> numeric;
    std::vector<CategoricalSlots> categorical;
    bool fitted = false;

    // Encoding dimensionality: #numeric + sum(#categories + 1).
    std::size_t dim() const;
};

// Leakage contract: fit only on training rows. Cross-validation fits one
// encoder per fold on the k-1 training folds.
Encoder fit_encoder(const Dataset& train);

struct EncodedDataset {
    DatasetSchema schema;
    Encoder encoder;  // the encoder that produced x
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> x;  // row-major n*d

    // Per task: label class indices plus presence mask.
    std::vector<std::vector<std::size_t>> label_index;
    std::vector<std::vector<bool>> label_present;

    const double* row(std::size_t i) const { return x.data() + i * d; }
};

// Pure function of (encoder, dataset); repeated calls are byte-identical.
// Rows must have no missing feature cells (run impute first). Throws
// ConfigError when the encoder is not fitted.
EncodedDataset encode(const Encoder& encoder, const Dataset& dataset);

// Encodes a single record into an existing buffer of length encoder.dim().
void encode_record(const Encoder& encoder, const DatasetSchema& schema,
                   const SurveyRecord& record, double* out);

struct FoldPlan {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> assignment;  // record index -> fold id

    std::vector<std::size_t> fold_sizes() const;
    std::vector<std::size_t> validation_indices(std::size_t fold) const;
    std::vector<std::size_t> training_indices(std::size_t fold) const;
};

// Seeded uniform shuffle followed by a contiguous partition; fold sizes
// differ by at most one. Deterministic for fixed (n, k, seed).
FoldPlan kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

}  // namespace comfort
