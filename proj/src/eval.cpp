#include "comfort/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace comfort {

using nlohmann::json;

namespace {

struct FoldOutcome {
    std::vector<FoldTaskResult> tasks;
    std::vector<std::string> notes;
};

Dataset select_rows(const Dataset& dataset,
                    const std::vector<std::size_t>& idx) {
    Dataset out;
    out.schema = dataset.schema;
    out.records.reserve(idx.size());
    for (std::size_t i : idx) out.records.push_back(dataset.records[i]);
    return out;
}

FoldOutcome run_fold(const ModelSpec& spec, const Dataset& dataset,
                     const FoldPlan& plan, std::size_t fold,
                     std::uint64_t fold_seed) {
    FoldOutcome outcome;
    Dataset train = select_rows(dataset, plan.training_indices(fold));
    Dataset val = select_rows(dataset, plan.validation_indices(fold));

    const ImputeStats stats = compute_impute_stats(train);
    const Dataset train_imp = impute_with(train, stats);
    const Dataset val_imp = impute_with(val, stats);
    const Encoder enc = fit_encoder(train_imp);
    const EncodedDataset enc_train = encode(enc, train_imp);
    const EncodedDataset enc_val = encode(enc, val_imp);

    const std::size_t tasks = dataset.schema.tasks.size();
    std::vector<std::vector<std::size_t>> preds(tasks);
    std::vector<char> fitted(tasks, 0);

    if (spec.kind == ModelKind::Mtl) {
        Hyperparams hp = spec.hp;
        hp.seed = fold_seed;
        MtlNetwork net = init_network(dataset.schema, enc, hp, stats);
        comfort::train(net, enc_train);
        preds = predict_indices(net, enc_val);
        std::fill(fitted.begin(), fitted.end(), 1);
    } else {
        for (std::size_t t = 0; t < tasks; ++t) {
            auto model = make_baseline(spec.kind, spec.baseline);
            try {
                model->fit(enc_train, t, derive_seed(fold_seed, "task", t));
            } catch (const ValidationError& e) {
                outcome.notes.push_back(
                    "fold " + std::to_string(fold) + ": " +
                    dataset.schema.tasks[t].scale.task_name +
                    " not fitted (" + e.what() + ")");
                continue;
            }
            model->predict_batch(enc_val, preds[t]);
            fitted[t] = 1;
        }
    }

    for (std::size_t t = 0; t < tasks; ++t) {
        const auto& scale = dataset.schema.tasks[t].scale;
        FoldTaskResult result;
        result.cm = ConfusionMatrix(scale.size(), scale.task_name);
        std::vector<std::size_t> truth;
        std::vector<std::size_t> pred;
        if (fitted[t]) {
            for (std::size_t i = 0; i < enc_val.n; ++i) {
                if (!enc_val.label_present[t][i]) continue;
                truth.push_back(enc_val.label_index[t][i]);
                pred.push_back(preds[t][i]);
            }
        }
        if (truth.empty()) {
            result.present = false;
            if (fitted[t]) {
                outcome.notes.push_back(
                    "fold " + std::to_string(fold) +
                    ": no labeled validation rows for " + scale.task_name);
            }
        } else {
            result.cm = confusion(truth, pred, scale.size());
            result.cm.task = scale.task_name;
            result.metrics = macro_metrics(result.cm, spec.averaging);
        }
        outcome.tasks.push_back(std::move(result));
    }
    return outcome;
}

TaskMetrics fold_mean(const std::vector<std::vector<FoldTaskResult>>& folds,
                      std::size_t t, std::size_t classes, Averaging avg) {
    TaskMetrics m;
    m.averaging = avg;
    m.precision.assign(classes, 0.0);
    m.recall.assign(classes, 0.0);
    m.f1.assign(classes, 0.0);
    std::size_t n = 0;
    for (const auto& fold : folds) {
        if (!fold[t].present) continue;
        const TaskMetrics& fm = fold[t].metrics;
        m.accuracy += fm.accuracy;
        m.avg_precision += fm.avg_precision;
        m.avg_recall += fm.avg_recall;
        m.avg_f1 += fm.avg_f1;
        for (std::size_t c = 0; c < classes; ++c) {
            m.precision[c] += fm.precision[c];
            m.recall[c] += fm.recall[c];
            m.f1[c] += fm.f1[c];
        }
        n += 1;
    }
    if (n) {
        const double inv = 1.0 / static_cast<double>(n);
        m.accuracy *= inv;
        m.avg_precision *= inv;
        m.avg_recall *= inv;
        m.avg_f1 *= inv;
        for (std::size_t c = 0; c < classes; ++c) {
            m.precision[c] *= inv;
            m.recall[c] *= inv;
            m.f1[c] *= inv;
        }
    }
    return m;
}

std::size_t arch_param_count(std::size_t d, const DatasetSchema& schema,
                             const Hyperparams& hp) {
    std::size_t total = 0;
    std::size_t in = d;
    for (std::size_t s : hp.trunk_sizes) {
        total += in * s + s;
        in = s;
    }
    for (const auto& task : schema.tasks) {
        std::size_t hin = in;
        auto it = hp.head_hidden_sizes.find(task.scale.task_name);
        if (it != hp.head_hidden_sizes.end()) {
            for (std::size_t s : it->second) {
                total += hin * s + s;
                hin = s;
            }
        }
        total += hin * task.scale.size() + task.scale.size();
    }
    return total;
}

Dataset drop_feature(const Dataset& dataset, const std::string& name) {
    Dataset out;
    out.schema = dataset.schema;
    auto& fs = out.schema.features;
    fs.erase(std::remove_if(fs.begin(), fs.end(),
                            [&](const FeatureSpec& f) {
                                return f.name == name;
                            }),
             fs.end());
    out.records = dataset.records;
    for (auto& rec : out.records) rec.values.erase(name);
    return out;
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

json metrics_json(const TaskMetrics& m) {
    return json{{"accuracy", m.accuracy},
                {"precision", m.precision},
                {"recall", m.recall},
                {"f1", m.f1},
                {"avg_precision", m.avg_precision},
                {"avg_recall", m.avg_recall},
                {"avg_f1", m.avg_f1},
                {"averaging", averaging_name(m.averaging)}};
}

json cm_json(const ConfusionMatrix& cm) {
    json rows = json::array();
    for (std::size_t t = 0; t < cm.k; ++t) {
        json row = json::array();
        for (std::size_t p = 0; p < cm.k; ++p) row.push_back(cm.at(t, p));
        rows.push_back(row);
    }
    return rows;
}

json report_json(const CvReport& r) {
    json j;
    j["model"] = r.model;
    j["display"] = r.display;
    j["k"] = r.k;
    j["seed"] = r.seed;
    j["averaging"] = averaging_name(r.averaging);
    j["tasks"] = r.tasks;
    j["fold_sizes"] = r.fold_sizes;
    j["notes"] = r.notes;
    j["config"] = json::parse(r.config_json);
    json mean = json::object();
    json aggregate = json::object();
    json total_cm = json::object();
    for (std::size_t t = 0; t < r.tasks.size(); ++t) {
        mean[r.tasks[t]] = metrics_json(r.mean[t]);
        aggregate[r.tasks[t]] = metrics_json(r.aggregate[t]);
        total_cm[r.tasks[t]] = cm_json(r.total_cm[t]);
    }
    j["mean"] = mean;
    j["aggregate"] = aggregate;
    j["total_confusion"] = total_cm;
    json folds = json::array();
    for (const auto& fold : r.folds) {
        json jf = json::object();
        for (std::size_t t = 0; t < r.tasks.size(); ++t) {
            json entry;
            entry["present"] = fold[t].present;
            if (fold[t].present) {
                entry["metrics"] = metrics_json(fold[t].metrics);
                entry["confusion"] = cm_json(fold[t].cm);
            }
            jf[r.tasks[t]] = entry;
        }
        folds.push_back(jf);
    }
    j["folds"] = folds;
    return j;
}

}  // namespace

CvReport cross_validate(const ModelSpec& spec, const Dataset& dataset,
                        std::size_t k, std::uint64_t seed,
                        std::size_t threads) {
    validate_schema(dataset.schema);
    if (k < 2) throw ConfigError("k must be at least 2");
    for (const auto& task : dataset.schema.tasks) {
        std::size_t labeled = 0;
        for (const auto& rec : dataset.records)
            if (rec.label(task.scale.task_name)) labeled += 1;
        if (labeled < k)
            throw ValidationError("task " + task.scale.task_name + " has " +
                                  std::to_string(labeled) +
                                  " labeled rows, fewer than k=" +
                                  std::to_string(k));
    }
    const FoldPlan plan = kfold_split(dataset.records.size(), k, seed);

    CvReport report;
    report.model = model_kind_name(spec.kind);
    report.display = model_display_name(spec.kind);
    report.k = k;
    report.seed = seed;
    report.averaging = spec.averaging;
    for (const auto& task : dataset.schema.tasks)
        report.tasks.push_back(task.scale.task_name);
    report.fold_sizes = plan.fold_sizes();
    report.config_json = spec.kind == ModelKind::Mtl
                             ? hyperparams_to_json(spec.hp)
                             : baseline_params_to_json(spec.baseline);

    std::vector<FoldOutcome> outcomes(k);
    if (threads > 1) {
        std::vector<std::future<FoldOutcome>> futures;
        futures.reserve(k);
        for (std::size_t f = 0; f < k; ++f) {
            futures.push_back(std::async(
                std::launch::async, [&spec, &dataset, &plan, f, seed]() {
                    return run_fold(spec, dataset, plan, f,
                                    derive_seed(seed, "fold", f));
                }));
        }
        for (std::size_t f = 0; f < k; ++f) outcomes[f] = futures[f].get();
    } else {
        for (std::size_t f = 0; f < k; ++f)
            outcomes[f] = run_fold(spec, dataset, plan, f,
                                   derive_seed(seed, "fold", f));
    }

    for (std::size_t f = 0; f < k; ++f) {
        report.folds.push_back(std::move(outcomes[f].tasks));
        for (auto& note : outcomes[f].notes)
            report.notes.push_back(std::move(note));
    }

    for (std::size_t t = 0; t < report.tasks.size(); ++t) {
        const auto& scale = dataset.schema.tasks[t].scale;
        ConfusionMatrix total(scale.size(), scale.task_name);
        for (const auto& fold : report.folds)
            if (fold[t].present) total.add(fold[t].cm);
        report.aggregate.push_back(macro_metrics(total, spec.averaging));
        report.total_cm.push_back(std::move(total));
        report.mean.push_back(
            fold_mean(report.folds, t, scale.size(), spec.averaging));
    }
    return report;
}

GridResult grid_search(const ModelSpec& base, const GridAxes& axes,
                       const Dataset& dataset, std::size_t k,
                       std::uint64_t seed, std::size_t threads) {
    if (base.kind != ModelKind::Mtl)
        throw ConfigError("grid search applies to the mtl model");
    const auto trunks = axes.trunk_sizes.empty()
                            ? std::vector<std::vector<std::size_t>>{
                                  base.hp.trunk_sizes}
                            : axes.trunk_sizes;
    const auto epochs = axes.epochs.empty()
                            ? std::vector<std::size_t>{base.hp.epochs}
                            : axes.epochs;
    const auto lrs = axes.learning_rates.empty()
                         ? std::vector<double>{base.hp.learning_rate}
                         : axes.learning_rates;
    const auto drops = axes.dropout_rates.empty()
                           ? std::vector<double>{base.hp.dropout_rate}
                           : axes.dropout_rates;
    const auto batches = axes.batch_sizes.empty()
                             ? std::vector<std::size_t>{base.hp.batch_size}
                             : axes.batch_sizes;

    // Input width for the parameter-count tie-break, from a full-data fit.
    const Encoder probe = fit_encoder(impute(dataset));
    const std::size_t d = probe.dim();

    GridResult result;
    for (const auto& trunk : trunks)
        for (std::size_t e : epochs)
            for (double lr : lrs)
                for (double dr : drops)
                    for (std::size_t b : batches) {
                        GridCell cell;
                        cell.index = result.cells.size();
                        cell.hp = base.hp;
                        cell.hp.trunk_sizes = trunk;
                        cell.hp.epochs = e;
                        cell.hp.learning_rate = lr;
                        cell.hp.dropout_rate = dr;
                        cell.hp.batch_size = b;
                        validate_hyperparams(cell.hp);
                        cell.params =
                            arch_param_count(d, dataset.schema, cell.hp);
                        result.cells.push_back(std::move(cell));
                    }

    auto evaluate = [&](GridCell& cell) {
        ModelSpec spec = base;
        spec.hp = cell.hp;
        try {
            const CvReport rep = cross_validate(spec, dataset, k, seed, 1);
            double sum = 0.0;
            for (std::size_t t = 0; t < rep.tasks.size(); ++t) {
                cell.task_f1.push_back(rep.mean[t].avg_f1);
                cell.task_accuracy.push_back(rep.mean[t].accuracy);
                sum += rep.mean[t].avg_f1;
            }
            cell.objective =
                rep.tasks.empty()
                    ? 0.0
                    : sum / static_cast<double>(rep.tasks.size());
        } catch (const DivergenceError& e) {
            cell.failed = true;
            cell.error = e.what();
        }
    };

    if (threads > 1) {
        std::vector<std::future<void>> futures;
        for (auto& cell : result.cells)
            futures.push_back(std::async(std::launch::async,
                                         [&evaluate, &cell]() {
                                             evaluate(cell);
                                         }));
        for (auto& f : futures) f.get();
    } else {
        for (auto& cell : result.cells) evaluate(cell);
    }

    result.ranking.resize(result.cells.size());
    std::iota(result.ranking.begin(), result.ranking.end(), 0);
    std::sort(result.ranking.begin(), result.ranking.end(),
              [&](std::size_t a, std::size_t b) {
                  const GridCell& ca = result.cells[a];
                  const GridCell& cb = result.cells[b];
                  if (ca.failed != cb.failed) return !ca.failed;
                  if (ca.objective != cb.objective)
                      return ca.objective > cb.objective;
                  if (ca.params != cb.params) return ca.params < cb.params;
                  return ca.index < cb.index;
              });
    if (result.cells[result.ranking[0]].failed)
        throw DivergenceError("every grid cell failed", 0);
    result.best = result.ranking[0];
    result.best_hp = result.cells[result.best].hp;
    return result;
}

SliceReport slice_report(const MtlNetwork& net, const Dataset& dataset,
                         const std::string& feature) {
    const FeatureSpec* f = net.schema.find_feature(feature);
    if (!f) throw ValidationError("unknown feature \"" + feature + "\"");
    if (f->kind != FeatureKind::Categorical)
        throw ValidationError("slice requires categorical feature");
    if (schema_to_json(dataset.schema) != schema_to_json(net.schema))
        throw ValidationError("dataset schema differs from the model schema");

    const Dataset imp = impute_with(dataset, net.impute);
    const EncodedDataset enc = encode(net.encoder, imp);
    const auto preds = predict_indices(net, enc);

    const std::size_t tasks = net.schema.tasks.size();
    SliceReport report;
    report.feature = feature;
    for (const auto& task : net.schema.tasks)
        report.tasks.push_back(task.scale.task_name);
    report.overall_support.assign(tasks, 0);
    report.overall_accuracy.assign(tasks, 0.0);

    const std::size_t cats = f->categories.size();
    std::vector<std::vector<std::size_t>> support(
        cats, std::vector<std::size_t>(tasks, 0));
    std::vector<std::vector<std::size_t>> correct(
        cats, std::vector<std::size_t>(tasks, 0));
    std::vector<std::size_t> overall_correct(tasks, 0);

    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        // Slice membership uses the original (pre-imputation) value.
        std::ptrdiff_t cat = -1;
        auto it = dataset.records[i].values.find(feature);
        if (it != dataset.records[i].values.end() &&
            std::holds_alternative<std::string>(it->second)) {
            const auto& value = std::get<std::string>(it->second);
            auto pos = std::find(f->categories.begin(), f->categories.end(),
                                 value);
            if (pos != f->categories.end())
                cat = pos - f->categories.begin();
        }
        for (std::size_t t = 0; t < tasks; ++t) {
            if (!enc.label_present[t][i]) continue;
            const bool hit = preds[t][i] == enc.label_index[t][i];
            report.overall_support[t] += 1;
            if (hit) overall_correct[t] += 1;
            if (cat >= 0) {
                support[cat][t] += 1;
                if (hit) correct[cat][t] += 1;
            }
        }
    }
    for (std::size_t t = 0; t < tasks; ++t) {
        if (report.overall_support[t])
            report.overall_accuracy[t] =
                static_cast<double>(overall_correct[t]) /
                static_cast<double>(report.overall_support[t]);
    }
    for (std::size_t c = 0; c < cats; ++c) {
        SliceReport::Category cat;
        cat.category = f->categories[c];
        cat.support = support[c];
        cat.accuracy.assign(tasks, 0.0);
        for (std::size_t t = 0; t < tasks; ++t) {
            if (support[c][t])
                cat.accuracy[t] = static_cast<double>(correct[c][t]) /
                                  static_cast<double>(support[c][t]);
        }
        report.categories.push_back(std::move(cat));
    }
    return report;
}

AblationReport feature_ablation(const ModelSpec& spec, const Dataset& dataset,
                                const std::vector<std::string>& features,
                                std::size_t k, std::uint64_t seed,
                                std::size_t threads) {
    if (features.empty())
        throw ConfigError("no features requested for ablation");
    for (const auto& f : features)
        if (!dataset.schema.find_feature(f))
            throw ValidationError("unknown feature \"" + f + "\"");
    if (dataset.schema.features.size() < 2)
        throw ConfigError("cannot drop every feature");

    const CvReport base = cross_validate(spec, dataset, k, seed, threads);
    AblationReport report;
    report.tasks = base.tasks;
    report.k = k;
    report.seed = seed;
    const std::size_t tasks = base.tasks.size();
    report.baseline_fold_accuracy.assign(tasks, {});
    for (std::size_t t = 0; t < tasks; ++t) {
        for (const auto& fold : base.folds)
            if (fold[t].present)
                report.baseline_fold_accuracy[t].push_back(
                    fold[t].metrics.accuracy);
        report.baseline_accuracy.push_back(base.mean[t].accuracy);
        report.baseline_std.push_back(
            sample_std(report.baseline_fold_accuracy[t]));
    }

    for (const auto& feature : features) {
        const Dataset reduced = drop_feature(dataset, feature);
        const CvReport rep = cross_validate(spec, reduced, k, seed, threads);
        AblationReport::Entry entry;
        entry.feature = feature;
        entry.fold_accuracy.assign(tasks, {});
        for (std::size_t t = 0; t < tasks; ++t) {
            for (const auto& fold : rep.folds)
                if (fold[t].present)
                    entry.fold_accuracy[t].push_back(
                        fold[t].metrics.accuracy);
            entry.accuracy.push_back(rep.mean[t].accuracy);
            entry.delta.push_back(rep.mean[t].accuracy -
                                  report.baseline_accuracy[t]);
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

DatasetSummaryReport dataset_summary(const Dataset& dataset) {
    DatasetSummaryReport report;
    report.rows = dataset.records.size();
    for (const auto& f : dataset.schema.features) {
        if (f.kind == FeatureKind::Numeric) {
            std::vector<double> vals;
            std::size_t missing = 0;
            for (const auto& rec : dataset.records) {
                auto it = rec.values.find(f.name);
                if (it != rec.values.end() &&
                    std::holds_alternative<double>(it->second))
                    vals.push_back(std::get<double>(it->second));
                else
                    missing += 1;
            }
            NumericSummary s;
            s.name = f.name;
            s.count = vals.size();
            s.missing = missing;
            if (!vals.empty()) {
                std::sort(vals.begin(), vals.end());
                s.min = vals.front();
                s.max = vals.back();
                double sum = 0.0;
                for (double v : vals) sum += v;
                s.mean = sum / static_cast<double>(vals.size());
                const std::size_t m = vals.size();
                s.median = m % 2 ? vals[m / 2]
                                 : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
                if (m >= 2) {
                    double ss = 0.0;
                    for (double v : vals) ss += (v - s.mean) * (v - s.mean);
                    s.variance = ss / static_cast<double>(m - 1);
                    s.std = std::sqrt(s.variance);
                }
            }
            report.numeric.push_back(std::move(s));
        } else {
            CategoricalSummary s;
            s.name = f.name;
            std::vector<std::size_t> counts(f.categories.size(), 0);
            for (const auto& rec : dataset.records) {
                auto it = rec.values.find(f.name);
                if (it == rec.values.end() ||
                    !std::holds_alternative<std::string>(it->second)) {
                    s.missing += 1;
                    continue;
                }
                const auto& v = std::get<std::string>(it->second);
                auto pos =
                    std::find(f.categories.begin(), f.categories.end(), v);
                if (pos != f.categories.end())
                    counts[pos - f.categories.begin()] += 1;
                else
                    s.missing += 1;
            }
            for (std::size_t c = 0; c < f.categories.size(); ++c)
                s.counts.emplace_back(f.categories[c], counts[c]);
            report.categorical.push_back(std::move(s));
        }
    }
    for (const auto& task : dataset.schema.tasks) {
        TaskSummary s;
        s.name = task.scale.task_name;
        s.counts.assign(task.scale.size(), 0);
        for (const auto& rec : dataset.records) {
            auto lab = rec.label(s.name);
            if (!lab) continue;
            s.counts[class_index(task.scale, *lab)] += 1;
            s.labeled += 1;
        }
        s.frequency.assign(task.scale.size(), 0.0);
        double cum = 0.0;
        for (std::size_t c = 0; c < task.scale.size(); ++c) {
            if (s.labeled)
                s.frequency[c] = static_cast<double>(s.counts[c]) /
                                 static_cast<double>(s.labeled);
            cum += s.frequency[c];
            s.ecdf.emplace_back(task.scale.classes[c].value, cum);
        }
        report.tasks.push_back(std::move(s));
    }
    return report;
}

std::string render_table(const std::vector<CvReport>& reports) {
    std::ostringstream out;
    if (reports.empty()) return "(no reports)\n";
    const auto& tasks = reports.front().tasks;
    out << "Averaging: " << averaging_name(reports.front().averaging)
        << " | k = " << reports.front().k
        << " | seed = " << reports.front().seed << "\n\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-20s", "Technique");
    out << buf;
    for (const auto& t : tasks) {
        std::snprintf(buf, sizeof(buf), " | %-20s", t.c_str());
        out << buf;
    }
    out << "\n";
    std::snprintf(buf, sizeof(buf), "%-20s", "");
    out << buf;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        std::snprintf(buf, sizeof(buf), " | %-6s %-6s %-6s", "Prec", "Rec",
                      "F1");
        out << buf;
    }
    out << "\n";
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof(buf), "%-20s", r.display.c_str());
        out << buf;
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            std::snprintf(buf, sizeof(buf), " | %-6.1f %-6.1f %-6.1f",
                          100.0 * r.mean[t].avg_precision,
                          100.0 * r.mean[t].avg_recall,
                          100.0 * r.mean[t].avg_f1);
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

std::string cv_reports_to_json(const std::vector<CvReport>& reports) {
    json j;
    j["reports"] = json::array();
    for (const auto& r : reports) j["reports"].push_back(report_json(r));
    return j.dump(2);
}

std::string grid_result_to_json(const GridResult& result) {
    json j;
    j["cells"] = json::array();
    for (const auto& c : result.cells) {
        json jc;
        jc["index"] = c.index;
        jc["hyperparams"] = json::parse(hyperparams_to_json(c.hp));
        jc["failed"] = c.failed;
        if (c.failed) {
            jc["error"] = c.error;
        } else {
            jc["objective"] = c.objective;
            jc["task_f1"] = c.task_f1;
            jc["task_accuracy"] = c.task_accuracy;
        }
        jc["params"] = c.params;
        j["cells"].push_back(jc);
    }
    j["ranking"] = result.ranking;
    j["best"] = result.best;
    j["best_hyperparams"] = json::parse(hyperparams_to_json(result.best_hp));
    return j.dump(2);
}

std::string render_grid(const GridResult& result) {
    std::ostringstream out;
    out << "Grid cells ranked by mean macro-F1 over tasks:\n";
    char buf[256];
    for (std::size_t rank = 0; rank < result.ranking.size(); ++rank) {
        const GridCell& c = result.cells[result.ranking[rank]];
        std::ostringstream trunk;
        trunk << "[";
        for (std::size_t i = 0; i < c.hp.trunk_sizes.size(); ++i)
            trunk << (i ? "," : "") << c.hp.trunk_sizes[i];
        trunk << "]";
        if (c.failed) {
            std::snprintf(buf, sizeof(buf),
                          "%3zu. cell %zu FAILED (%s) trunk=%s epochs=%zu "
                          "lr=%g dropout=%g batch=%zu\n",
                          rank + 1, c.index, c.error.c_str(),
                          trunk.str().c_str(), c.hp.epochs,
                          c.hp.learning_rate, c.hp.dropout_rate,
                          c.hp.batch_size);
        } else {
            std::snprintf(buf, sizeof(buf),
                          "%3zu. cell %zu objective=%.4f params=%zu trunk=%s "
                          "epochs=%zu lr=%g dropout=%g batch=%zu\n",
                          rank + 1, c.index, c.objective, c.params,
                          trunk.str().c_str(), c.hp.epochs,
                          c.hp.learning_rate, c.hp.dropout_rate,
                          c.hp.batch_size);
        }
        out << buf;
    }
    return out.str();
}

std::string slice_reports_to_json(const std::vector<SliceReport>& reports) {
    json j;
    j["slices"] = json::array();
    for (const auto& r : reports) {
        json jr;
        jr["feature"] = r.feature;
        jr["tasks"] = r.tasks;
        jr["overall_support"] = r.overall_support;
        jr["overall_accuracy"] = r.overall_accuracy;
        jr["categories"] = json::array();
        for (const auto& c : r.categories) {
            json jc;
            jc["category"] = c.category;
            jc["support"] = c.support;
            json acc = json::array();
            for (std::size_t t = 0; t < c.support.size(); ++t) {
                if (c.support[t])
                    acc.push_back(c.accuracy[t]);
                else
                    acc.push_back(nullptr);  // zero support: metric absent
            }
            jc["accuracy"] = acc;
            jr["categories"].push_back(jc);
        }
        j["slices"].push_back(jr);
    }
    return j.dump(2);
}

std::string render_slices(const std::vector<SliceReport>& reports) {
    std::ostringstream out;
    char buf[64];
    for (const auto& r : reports) {
        out << "Slice axis: " << r.feature << "\n";
        out << "  overall accuracy:";
        for (std::size_t t = 0; t < r.tasks.size(); ++t) {
            std::snprintf(buf, sizeof(buf), " %s=%.1f%%", r.tasks[t].c_str(),
                          100.0 * r.overall_accuracy[t]);
            out << buf;
        }
        out << "\n";
        for (const auto& c : r.categories) {
            out << "  " << c.category << ":";
            for (std::size_t t = 0; t < r.tasks.size(); ++t) {
                if (c.support[t]) {
                    std::snprintf(buf, sizeof(buf), " %s=%.1f%% (n=%zu)",
                                  r.tasks[t].c_str(), 100.0 * c.accuracy[t],
                                  c.support[t]);
                } else {
                    std::snprintf(buf, sizeof(buf), " %s=absent (n=0)",
                                  r.tasks[t].c_str());
                }
                out << buf;
            }
            out << "\n";
        }
        out << "\n";
    }
    return out.str();
}

std::string ablation_to_json(const AblationReport& report) {
    json j;
    j["tasks"] = report.tasks;
    j["k"] = report.k;
    j["seed"] = report.seed;
    j["baseline_accuracy"] = report.baseline_accuracy;
    j["baseline_fold_accuracy"] = report.baseline_fold_accuracy;
    j["baseline_std"] = report.baseline_std;
    j["entries"] = json::array();
    for (const auto& e : report.entries) {
        json je;
        je["feature"] = e.feature;
        je["accuracy"] = e.accuracy;
        je["delta"] = e.delta;
        je["fold_accuracy"] = e.fold_accuracy;
        j["entries"].push_back(je);
    }
    return j.dump(2);
}

std::string render_ablation(const AblationReport& report) {
    std::ostringstream out;
    char buf[96];
    out << "Feature ablation (accuracy delta vs full feature set, "
           "percentage points):\n  baseline:";
    for (std::size_t t = 0; t < report.tasks.size(); ++t) {
        std::snprintf(buf, sizeof(buf), " %s=%.1f%% (sd %.2f)",
                      report.tasks[t].c_str(),
                      100.0 * report.baseline_accuracy[t],
                      100.0 * report.baseline_std[t]);
        out << buf;
    }
    out << "\n";
    for (const auto& e : report.entries) {
        out << "  drop " << e.feature << ":";
        for (std::size_t t = 0; t < report.tasks.size(); ++t) {
            std::snprintf(buf, sizeof(buf), " %s=%+.1f",
                          report.tasks[t].c_str(), 100.0 * e.delta[t]);
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

std::string summary_to_json(const DatasetSummaryReport& report) {
    json j;
    j["rows"] = report.rows;
    j["numeric"] = json::array();
    for (const auto& s : report.numeric) {
        j["numeric"].push_back(json{{"name", s.name},
                                    {"count", s.count},
                                    {"missing", s.missing},
                                    {"min", s.min},
                                    {"max", s.max},
                                    {"mean", s.mean},
                                    {"median", s.median},
                                    {"variance", s.variance},
                                    {"std", s.std}});
    }
    j["categorical"] = json::array();
    for (const auto& s : report.categorical) {
        json counts = json::object();
        for (const auto& [cat, n] : s.counts) counts[cat] = n;
        j["categorical"].push_back(json{{"name", s.name},
                                        {"counts", counts},
                                        {"missing", s.missing}});
    }
    j["tasks"] = json::array();
    for (const auto& s : report.tasks) {
        json ecdf = json::array();
        for (const auto& [value, cum] : s.ecdf)
            ecdf.push_back(json{{"value", value}, {"cumulative", cum}});
        j["tasks"].push_back(json{{"name", s.name},
                                  {"labeled", s.labeled},
                                  {"counts", s.counts},
                                  {"frequency", s.frequency},
                                  {"ecdf", ecdf}});
    }
    return j.dump(2);
}

std::string render_summary(const DatasetSummaryReport& report) {
    std::ostringstream out;
    char buf[160];
    out << "Rows: " << report.rows << "\n\nNumeric features:\n";
    for (const auto& s : report.numeric) {
        std::snprintf(buf, sizeof(buf),
                      "  %-14s n=%-6zu missing=%-4zu min=%-8.3f max=%-8.3f "
                      "mean=%-8.3f median=%-8.3f std=%-8.3f\n",
                      s.name.c_str(), s.count, s.missing, s.min, s.max,
                      s.mean, s.median, s.std);
        out << buf;
    }
    out << "\nCategorical features:\n";
    for (const auto& s : report.categorical) {
        out << "  " << s.name << ":";
        for (const auto& [cat, n] : s.counts)
            out << " " << cat << "=" << n;
        if (s.missing) out << " missing=" << s.missing;
        out << "\n";
    }
    out << "\nTask label distributions:\n";
    for (const auto& s : report.tasks) {
        out << "  " << s.name << " (n=" << s.labeled << "):";
        for (std::size_t c = 0; c < s.counts.size(); ++c) {
            std::snprintf(buf, sizeof(buf), " %d:%zu", s.ecdf[c].first,
                          s.counts[c]);
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace comfort
