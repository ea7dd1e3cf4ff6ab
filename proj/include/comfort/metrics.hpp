#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace comfort {

// Rows are true class indices, columns predicted.
struct ConfusionMatrix {
    std::string task;
    std::size_t k = 0;
    std::vector<std::size_t> counts;  // row-major k*k

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t k_, std::string task_ = "")
        : task(std::move(task_)), k(k_), counts(k_ * k_, 0) {}

    std::size_t& at(std::size_t truth, std::size_t pred) {
        return counts[truth * k + pred];
    }
    std::size_t at(std::size_t truth, std::size_t pred) const {
        return counts[truth * k + pred];
    }
    std::size_t total() const;
    std::size_t row_total(std::size_t truth) const;
    std::size_t col_total(std::size_t pred) const;
    // Elementwise sum; shapes must match.
    void add(const ConfusionMatrix& other);
};

ConfusionMatrix confusion(const std::vector<std::size_t>& truth,
                          const std::vector<std::size_t>& pred,
                          std::size_t k);

enum class Averaging { Macro, Weighted };

const char* averaging_name(Averaging mode);
Averaging averaging_from_name(const std::string& name);

// Per-class precision/recall/F1 plus the averaged headline numbers. Every
// 0/0 cell is defined as 0: an unpredicted, absent class earns no credit.
struct TaskMetrics {
    double accuracy = 0.0;
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> f1;
    double avg_precision = 0.0;  // macro or support-weighted per `averaging`
    double avg_recall = 0.0;
    double avg_f1 = 0.0;
    Averaging averaging = Averaging::Macro;
};

TaskMetrics macro_metrics(const ConfusionMatrix& cm,
                          Averaging mode = Averaging::Macro);

}  // namespace comfort
