#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "comfort/baselines.hpp"
#include "comfort/encode.hpp"
#include "comfort/metrics.hpp"
#include "comfort/mtl.hpp"
#include "comfort/schema.hpp"

namespace comfort {

struct ModelSpec {
    ModelKind kind = ModelKind::Mtl;
    Hyperparams hp;            // mtl
    BaselineParams baseline;   // single-task models (dnn settings included)
    Averaging averaging = Averaging::Macro;
};

struct FoldTaskResult {
    bool present = true;  // false when the fold had no labeled rows
    TaskMetrics metrics;
    ConfusionMatrix cm;
};

struct CvReport {
    std::string model;
    std::string display;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    Averaging averaging = Averaging::Macro;
    std::vector<std::string> tasks;
    std::vector<std::size_t> fold_sizes;
    std::vector<std::vector<FoldTaskResult>> folds;  // [fold][task]
    std::vector<ConfusionMatrix> total_cm;           // elementwise fold sum
    std::vector<TaskMetrics> mean;                   // unweighted fold mean
    std::vector<TaskMetrics> aggregate;              // metrics of total_cm
    std::vector<std::string> notes;                  // absent-fold flags etc.
    std::string config_json;                         // provenance
};

// Per fold: impute statistics and the encoder are fitted on the k-1
// training folds only, the model on the encoded training rows, metrics on
// the held-out fold. Per-fold model seeds derive from `seed`, so serial and
// parallel runs report identical numbers.
CvReport cross_validate(const ModelSpec& spec, const Dataset& dataset,
                        std::size_t k, std::uint64_t seed,
                        std::size_t threads = 1);

// Sweep axes; an empty axis pins that hyperparameter to the base value.
// Cells enumerate in row-major order over (trunk_sizes, epochs,
// learning_rates, dropout_rates, batch_sizes).
struct GridAxes {
    std::vector<std::vector<std::size_t>> trunk_sizes;
    std::vector<std::size_t> epochs;
    std::vector<double> learning_rates;
    std::vector<double> dropout_rates;
    std::vector<std::size_t> batch_sizes;
};

struct GridCell {
    std::size_t index = 0;
    Hyperparams hp;
    bool failed = false;
    std::string error;
    double objective = 0.0;           // mean over tasks of fold-mean F1
    std::vector<double> task_f1;      // fold-mean avg F1 per task
    std::vector<double> task_accuracy;
    std::size_t params = 0;           // tie-break: fewer parameters first
};

struct GridResult {
    std::vector<GridCell> cells;       // grid order
    std::vector<std::size_t> ranking;  // positions into cells, best first
    std::size_t best = 0;
    Hyperparams best_hp;
};

// Full Cartesian product evaluated by cross_validate with a shared fold
// plan; a diverging cell is recorded as failed and the search continues.
GridResult grid_search(const ModelSpec& base, const GridAxes& axes,
                       const Dataset& dataset, std::size_t k,
                       std::uint64_t seed, std::size_t threads = 1);

struct SliceReport {
    std::string feature;
    std::vector<std::string> tasks;
    struct Category {
        std::string category;
        std::vector<std::size_t> support;  // labeled rows per task
        std::vector<double> accuracy;      // valid only when support > 0
    };
    std::vector<Category> categories;
    std::vector<std::size_t> overall_support;
    std::vector<double> overall_accuracy;
};

// Partitions evaluation rows of a trained model by the categories of one
// categorical feature (rows with the value missing are excluded).
SliceReport slice_report(const MtlNetwork& net, const Dataset& dataset,
                         const std::string& feature);

struct AblationReport {
    std::vector<std::string> tasks;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<double> baseline_accuracy;  // fold mean per task
    std::vector<std::vector<double>> baseline_fold_accuracy;  // [task][fold]
    std::vector<double> baseline_std;  // sample std over folds per task
    struct Entry {
        std::string feature;
        std::vector<double> accuracy;
        std::vector<double> delta;  // ablated minus baseline
        std::vector<std::vector<double>> fold_accuracy;
    };
    std::vector<Entry> entries;
};

// Re-runs cross-validation once per dropped feature against the same fold
// plan, so deltas are paired comparisons.
AblationReport feature_ablation(const ModelSpec& spec, const Dataset& dataset,
                                const std::vector<std::string>& features,
                                std::size_t k, std::uint64_t seed,
                                std::size_t threads = 1);

struct NumericSummary {
    std::string name;
    std::size_t count = 0;    // non-missing
    std::size_t missing = 0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double median = 0.0;
    double variance = 0.0;  // sample variance (n-1)
    double std = 0.0;
};

struct CategoricalSummary {
    std::string name;
    std::vector<std::pair<std::string, std::size_t>> counts;
    std::size_t missing = 0;
};

struct TaskSummary {
    std::string name;
    std::size_t labeled = 0;
    std::vector<std::size_t> counts;    // per class, scale order
    std::vector<double> frequency;
    std::vector<std::pair<int, double>> ecdf;  // class value -> cumulative
};

struct DatasetSummaryReport {
    std::size_t rows = 0;
    std::vector<NumericSummary> numeric;
    std::vector<CategoricalSummary> categorical;
    std::vector<TaskSummary> tasks;
};

DatasetSummaryReport dataset_summary(const Dataset& dataset);

// Plain-text table in the technique x task x P/R/F1 layout, values in
// percent, averaging mode printed in the header.
std::string render_table(const std::vector<CvReport>& reports);

std::string cv_reports_to_json(const std::vector<CvReport>& reports);
std::string grid_result_to_json(const GridResult& result);
std::string render_grid(const GridResult& result);
std::string slice_reports_to_json(const std::vector<SliceReport>& reports);
std::string render_slices(const std::vector<SliceReport>& reports);
std::string ablation_to_json(const AblationReport& report);
std::string render_ablation(const AblationReport& report);
std::string summary_to_json(const DatasetSummaryReport& report);
std::string render_summary(const DatasetSummaryReport& report);

}  // namespace comfort
