#include "comfort/metrics.hpp"

#include "comfort/errors.hpp"

namespace comfort {

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (std::size_t c : counts) n += c;
    return n;
}

std::size_t ConfusionMatrix::row_total(std::size_t truth) const {
    std::size_t n = 0;
    for (std::size_t p = 0; p < k; ++p) n += at(truth, p);
    return n;
}

std::size_t ConfusionMatrix::col_total(std::size_t pred) const {
    std::size_t n = 0;
    for (std::size_t t = 0; t < k; ++t) n += at(t, pred);
    return n;
}

void ConfusionMatrix::add(const ConfusionMatrix& other) {
    if (other.k != k)
        throw ValidationError("confusion matrix size mismatch");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

ConfusionMatrix confusion(const std::vector<std::size_t>& truth,
                          const std::vector<std::size_t>& pred,
                          std::size_t k) {
    if (truth.size() != pred.size())
        throw ValidationError("confusion: truth/pred length mismatch");
    ConfusionMatrix cm(k);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= k || pred[i] >= k)
            throw ValidationError("confusion: class index out of range");
        cm.at(truth[i], pred[i]) += 1;
    }
    return cm;
}

const char* averaging_name(Averaging mode) {
    return mode == Averaging::Macro ? "macro" : "weighted";
}

Averaging averaging_from_name(const std::string& name) {
    if (name == "macro") return Averaging::Macro;
    if (name == "weighted") return Averaging::Weighted;
    throw ConfigError("unknown averaging mode \"" + name + "\"");
}

TaskMetrics macro_metrics(const ConfusionMatrix& cm, Averaging mode) {
    TaskMetrics m;
    m.averaging = mode;
    m.precision.assign(cm.k, 0.0);
    m.recall.assign(cm.k, 0.0);
    m.f1.assign(cm.k, 0.0);
    const std::size_t total = cm.total();
    std::size_t trace = 0;
    for (std::size_t c = 0; c < cm.k; ++c) {
        trace += cm.at(c, c);
        const std::size_t col = cm.col_total(c);
        const std::size_t row = cm.row_total(c);
        const double p = col ? static_cast<double>(cm.at(c, c)) /
                                   static_cast<double>(col)
                             : 0.0;
        const double r = row ? static_cast<double>(cm.at(c, c)) /
                                   static_cast<double>(row)
                             : 0.0;
        m.precision[c] = p;
        m.recall[c] = r;
        m.f1[c] = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    m.accuracy = total ? static_cast<double>(trace) /
                             static_cast<double>(total)
                       : 0.0;
    if (mode == Averaging::Macro) {
        for (std::size_t c = 0; c < cm.k; ++c) {
            m.avg_precision += m.precision[c];
            m.avg_recall += m.recall[c];
            m.avg_f1 += m.f1[c];
        }
        if (cm.k) {
            m.avg_precision /= static_cast<double>(cm.k);
            m.avg_recall /= static_cast<double>(cm.k);
            m.avg_f1 /= static_cast<double>(cm.k);
        }
    } else if (total) {
        for (std::size_t c = 0; c < cm.k; ++c) {
            const double w = static_cast<double>(cm.row_total(c)) /
                             static_cast<double>(total);
            m.avg_precision += w * m.precision[c];
            m.avg_recall += w * m.recall[c];
            m.avg_f1 += w * m.f1[c];
        }
    }
    return m;
}

}  // namespace comfort
