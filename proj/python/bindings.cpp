#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "comfort/baselines.hpp"
#include "comfort/cli.hpp"
#include "comfort/csv.hpp"
#include "comfort/encode.hpp"
#include "comfort/eval.hpp"
#include "comfort/metrics.hpp"
#include "comfort/mtl.hpp"
#include "comfort/schema.hpp"
#include "comfort/synthetic.hpp"

namespace py = pybind11;
using namespace comfort;

namespace {

SurveyRecord record_from_dict(const py::dict& features) {
    SurveyRecord record;
    for (const auto& item : features) {
        const std::string name = py::cast<std::string>(item.first);
        if (py::isinstance<py::str>(item.second)) {
            record.values[name] = py::cast<std::string>(item.second);
        } else if (item.second.is_none()) {
            record.values[name] = Value{};
        } else {
            record.values[name] = py::cast<double>(item.second);
        }
    }
    return record;
}

std::vector<double> train_model(const std::string& csv_text,
                                const std::string& model_path,
                                const std::string& hyperparams_json) {
    const DatasetSchema schema = default_schema();
    const Dataset data = parse_csv(csv_text, schema, "<python>");
    const ImputeStats stats = compute_impute_stats(data);
    const Dataset imputed = impute_with(data, stats);
    const Encoder encoder = fit_encoder(imputed);
    const EncodedDataset encoded = encode(encoder, imputed);
    const Hyperparams hp = hyperparams_json.empty()
                               ? Hyperparams{}
                               : hyperparams_from_json(hyperparams_json);
    MtlNetwork net = init_network(schema, encoder, hp, stats);
    const TrainHistory history = train(net, encoded);
    save_model(net, model_path);
    return history.joint_loss;
}

py::dict predict_record(const std::string& model_path,
                        const py::dict& features) {
    const MtlNetwork net = load_model(model_path);
    const SurveyRecord record = record_from_dict(features);
    py::dict out;
    for (const auto& p : predict(net, record)) {
        py::dict task;
        task["value"] = p.class_value;
        task["label"] = p.label;
        task["probs"] = p.probabilities;
        out[py::str(p.task)] = task;
    }
    return out;
}

std::string cross_validate_json(const std::string& csv_text,
                                const std::string& model,
                                std::size_t k, std::uint64_t seed,
                                const std::string& hyperparams_json,
                                const std::string& baselines_json,
                                const std::string& averaging) {
    const DatasetSchema schema = default_schema();
    const Dataset data = parse_csv(csv_text, schema, "<python>");
    ModelSpec spec;
    spec.kind = model_kind_from_name(model);
    if (!hyperparams_json.empty())
        spec.hp = hyperparams_from_json(hyperparams_json);
    if (!baselines_json.empty())
        spec.baseline = baseline_params_from_json(baselines_json);
    spec.averaging = averaging_from_name(averaging);
    return cv_reports_to_json({cross_validate(spec, data, k, seed)});
}

std::string synth_csv(std::size_t n, std::uint64_t seed,
                      double illogical_fraction) {
    SynthSpec spec = default_synth_spec();
    spec.illogical_fraction = illogical_fraction;
    return dataset_to_csv(generate_synthetic(n, seed, spec));
}

std::string dataset_summary_json_py(const std::string& csv_text) {
    const Dataset data = parse_csv(csv_text, default_schema(), "<python>");
    return summary_to_json(dataset_summary(data));
}

py::dict macro_metrics_py(const std::vector<std::size_t>& truth,
                          const std::vector<std::size_t>& pred,
                          std::size_t k, const std::string& averaging) {
    const ConfusionMatrix cm = confusion(truth, pred, k);
    const TaskMetrics m = macro_metrics(cm, averaging_from_name(averaging));
    py::dict out;
    out["accuracy"] = m.accuracy;
    out["precision"] = m.precision;
    out["recall"] = m.recall;
    out["f1"] = m.f1;
    out["avg_precision"] = m.avg_precision;
    out["avg_recall"] = m.avg_recall;
    out["avg_f1"] = m.avg_f1;
    out["averaging"] = averaging_name(m.averaging);
    return out;
}

py::tuple run_cli_py(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "DeepComfort core: multi-task thermal-comfort prediction";

    py::register_exception<DivergenceError>(m, "DivergenceError");

    m.def("default_config", &default_config_json,
          "Full-default run configuration (JSON text).");
    m.def("synth_csv", &synth_csv, py::arg("n"), py::arg("seed"),
          py::arg("illogical_fraction") = 0.1,
          "Seeded synthetic survey dataset as CSV text.");
    m.def("train_model", &train_model, py::arg("csv_text"),
          py::arg("model_path"), py::arg("hyperparams_json") = "",
          "Train the multi-task model on a CSV document, save it, and "
          "return the per-epoch joint loss.");
    m.def("predict_record", &predict_record, py::arg("model_path"),
          py::arg("features"),
          "Per-task (value, label, probs) for one feature dict.");
    m.def("cross_validate_json", &cross_validate_json, py::arg("csv_text"),
          py::arg("model") = "mtl", py::arg("k") = 5, py::arg("seed") = 42,
          py::arg("hyperparams_json") = "", py::arg("baselines_json") = "",
          py::arg("averaging") = "macro",
          "K-fold cross-validation report (JSON text).");
    m.def("dataset_summary_json", &dataset_summary_json_py,
          py::arg("csv_text"), "Dataset statistics report (JSON text).");
    m.def("macro_metrics", &macro_metrics_py, py::arg("truth"),
          py::arg("pred"), py::arg("k"), py::arg("averaging") = "macro",
          "Accuracy plus per-class and averaged P/R/F1 from index lists.");
    m.def("run_cli", &run_cli_py, py::arg("args"),
          "Run a CLI invocation in process; returns (code, stdout, "
          "stderr).");
}
