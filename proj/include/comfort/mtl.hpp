#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "comfort/encode.hpp"
#include "comfort/nn.hpp"
#include "comfort/schema.hpp"

namespace comfort {

struct Hyperparams {
    std::vector<std::size_t> trunk_sizes = {20, 50, 80, 100, 120};
    // Hidden sizes per head, keyed by task name; a missing entry means a
    // single output layer for that head.
    std::map<std::string, std::vector<std::size_t>> head_hidden_sizes;
    double dropout_rate = 0.2;
    double learning_rate = 0.001;
    std::size_t epochs = 750;
    std::size_t batch_size = 32;
    // Per-task loss weight, default 1.0 when absent. A zero-weight task is
    // excluded from the loss and receives no gradient.
    std::map<std::string, double> loss_weights;
    // Optional per-class cross-entropy weights per task, default off.
    std::map<std::string, std::vector<double>> class_weights;
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::uint64_t seed = 0;
};

void validate_hyperparams(const Hyperparams& hp);

std::string hyperparams_to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const std::string& text);

// Shared tanh trunk with one softmax head per task. The head for a task is
// a stack of zero or more tanh hidden layers followed by a linear layer of
// width equal to the task's class count.
struct MtlNetwork {
    DatasetSchema schema;
    Encoder encoder;
    ImputeStats impute;
    Hyperparams hp;
    std::vector<DenseLayer> trunk;
    std::vector<std::vector<DenseLayer>> heads;  // schema task order

    std::size_t input_dim() const { return encoder.dim(); }
    std::size_t trunk_out_dim() const {
        return trunk.empty() ? encoder.dim() : trunk.back().fan_out();
    }
    double loss_weight(std::size_t task) const;
    std::size_t param_count() const;
};

struct TrainHistory {
    std::vector<double> joint_loss;               // per-epoch mean per row
    std::vector<std::vector<double>> task_loss;   // [epoch][task], mean CE
    std::vector<std::vector<double>> val_accuracy;  // [epoch][task]
};

// Seeded deterministic initialization. Parameter streams are keyed by layer
// role and task name, never by task position, so a single-task network and
// a multi-task network sharing a seed start from identical trunk and head
// parameters for the tasks they have in common.
MtlNetwork init_network(const DatasetSchema& schema, const Encoder& encoder,
                        const Hyperparams& hp,
                        const ImputeStats& impute = {});

// One distribution per task, trunk computed once. Training mode draws
// dropout masks from `dropout_rng` (required when the rate is positive).
std::vector<std::vector<double>> forward_multi(const MtlNetwork& net,
                                               std::span<const double> x,
                                               bool training,
                                               Rng* dropout_rng = nullptr);

// Weighted cross-entropy over present labels; absent labels contribute
// nothing. Returns nullopt when every label is absent (skip-sample signal).
std::optional<double> joint_loss(
    const MtlNetwork& net, std::span<const double> x,
    const std::vector<std::optional<std::size_t>>& label_indices);

// Mini-batch training with per-epoch reshuffling and fresh dropout masks
// per batch. Deterministic for a fixed seed. Rows with no present label
// among positive-weight tasks are excluded up front. Throws DivergenceError
// naming the epoch when the loss or a gradient goes non-finite.
TrainHistory train(MtlNetwork& net, const EncodedDataset& data,
                   const EncodedDataset* validation = nullptr);

struct TaskPrediction {
    std::string task;
    int class_value = 0;
    std::string label;
    std::vector<double> probabilities;
};

// Imputes missing features from the stored training statistics, encodes,
// and runs an inference forward pass. Argmax ties break toward the lower
// class value.
std::vector<TaskPrediction> predict(const MtlNetwork& net,
                                    const SurveyRecord& record);

// Batch inference over already-encoded rows: per task, the predicted class
// index for every row.
std::vector<std::vector<std::size_t>> predict_indices(
    const MtlNetwork& net, const EncodedDataset& data);

void save_model(const MtlNetwork& net, const std::string& path);
MtlNetwork load_model(const std::string& path);

// Analytic-vs-central-difference comparison with dropout disabled, over all
// parameters or a seeded sample of max_checked entries.
GradCheckReport gradient_check(MtlNetwork& net, const EncodedDataset& data,
                               std::size_t max_rows, double h,
                               double tolerance, std::size_t max_checked = 0,
                               std::uint64_t seed = 0);

}  // namespace comfort
