#include "comfort/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "comfort/baselines.hpp"
#include "comfort/csv.hpp"
#include "comfort/encode.hpp"
#include "comfort/errors.hpp"
#include "comfort/eval.hpp"
#include "comfort/mtl.hpp"
#include "comfort/rng.hpp"
#include "comfort/schema.hpp"
#include "comfort/serve.hpp"
#include "comfort/synthetic.hpp"

namespace comfort {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    out.flush();
    if (!out) throw IoError("cannot write " + path);
}

json default_config_obj() {
    json j;
    j["schema"] = nullptr;  // null = built-in study schema
    j["data"] = "data.csv";
    j["out"] = "out";
    j["seed"] = 42;
    j["threads"] = 1;
    j["averaging"] = "macro";
    j["hyperparams"] = json::parse(hyperparams_to_json(Hyperparams{}));
    j["baselines"] = json::parse(baseline_params_to_json(BaselineParams{}));
    j["synth"] = json{{"n", 2039},
                      {"seed", 7},
                      {"illogical_fraction", 0.1},
                      {"spec", nullptr}};
    j["cv"] = json{
        {"k", 5},
        {"models",
         json::array({"mtl", "knn", "decision_tree", "random_forest",
                      "adaboost", "svm", "dnn"})},
        {"slices", json::array()},
        {"ablation", json::array()}};
    j["grid"] =
        json{{"trunk_sizes",
              json::array({json::array({20, 50, 80}),
                           json::array({20, 50, 80, 100}),
                           json::array({20, 50, 80, 100, 120})})},
             {"epochs", json::array({250, 500, 750})},
             {"learning_rates", json::array({0.1, 0.01, 0.001, 0.0001})},
             {"dropout_rates", json::array()},
             {"batch_sizes", json::array()}};
    j["serve"] = json{{"host", "127.0.0.1"}, {"port", 8080}};
    j["predict"] = json{{"model", nullptr}, {"input", nullptr}};
    return j;
}

// Keys holding task-name keyed maps merge wholesale, not key by key.
bool map_leaf(const std::string& key) {
    return key == "loss_weights" || key == "class_weights" ||
           key == "head_hidden_sizes";
}

void deep_merge(json& dst, const json& src, const std::string& path) {
    for (const auto& [key, value] : src.items()) {
        const std::string here = path.empty() ? key : path + "." + key;
        if (!dst.contains(key))
            throw ConfigError("unknown config key: " + here);
        if (dst[key].is_object() && value.is_object() && !map_leaf(key)) {
            deep_merge(dst[key], value, here);
        } else {
            dst[key] = value;
        }
    }
}

std::size_t get_index(const json& v, const std::string& path) {
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ConfigError("config key " + path + " must be an integer");
    if (v.is_number_integer() && v.get<std::int64_t>() < 0)
        throw ConfigError("config key " + path + " must be non-negative");
    return v.get<std::size_t>();
}

double get_number(const json& v, const std::string& path) {
    if (!v.is_number())
        throw ConfigError("config key " + path + " must be a number");
    return v.get<double>();
}

std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string())
        throw ConfigError("config key " + path + " must be a string");
    return v.get<std::string>();
}

struct RunConfig {
    json effective;
    DatasetSchema schema;
    std::string data;
    std::string out;
    std::uint64_t seed = 42;
    std::size_t threads = 1;
    Averaging averaging = Averaging::Macro;
    Hyperparams hp;
    BaselineParams baselines;
    std::size_t synth_n = 0;
    std::uint64_t synth_seed = 0;
    double synth_illogical = 0.0;
    std::string synth_spec_path;
    std::size_t cv_k = 5;
    std::vector<ModelKind> models;
    std::vector<std::string> slices;
    std::vector<std::string> ablation;
    bool slices_default = false;
    bool ablation_default = false;
    GridAxes axes;
    std::string serve_host;
    int serve_port = 0;
    std::string predict_model;
    std::string predict_input;
};

// Flag values shared across subcommands; only the parsed one applies them.
struct FlagSet {
    std::optional<std::string> config;
    std::optional<std::string> out;
    std::optional<std::string> data;
    std::optional<std::string> averaging;
    std::optional<std::string> models;
    std::optional<std::string> model;
    std::optional<std::string> input;
    std::optional<std::string> host;
    std::optional<std::string> synth_spec;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n;
    std::optional<std::size_t> k;
    std::optional<std::size_t> threads;
    std::optional<std::size_t> epochs;
    std::optional<double> illogical;
    std::optional<int> port;
};

// Which seed the subcommand's --seed flag overrides.
enum class SeedTarget { None, Synth, Train, Master };

json split_list(const std::string& text) {
    json arr = json::array();
    std::string item;
    auto push = [&]() {
        const auto a = item.find_first_not_of(" \t");
        if (a == std::string::npos) {
            item.clear();
            return;
        }
        const auto b = item.find_last_not_of(" \t");
        arr.push_back(item.substr(a, b - a + 1));
        item.clear();
    };
    for (char c : text) {
        if (c == ',')
            push();
        else
            item += c;
    }
    push();
    return arr;
}

std::vector<std::string> name_list(const json& v, const std::string& path) {
    if (!v.is_array())
        throw ConfigError("config key " + path + " must be an array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(get_string(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

RunConfig build_config(const FlagSet& flags, SeedTarget target) {
    json eff = default_config_obj();
    if (flags.config) {
        json file;
        try {
            file = json::parse(read_file(*flags.config));
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config file is not valid JSON: ") +
                              e.what());
        }
        if (!file.is_object())
            throw ConfigError("config file must hold a JSON object");
        deep_merge(eff, file, "");
    }
    if (flags.out) eff["out"] = *flags.out;
    if (flags.data) eff["data"] = *flags.data;
    if (flags.threads) eff["threads"] = *flags.threads;
    if (flags.averaging) eff["averaging"] = *flags.averaging;
    if (flags.seed) {
        switch (target) {
            case SeedTarget::Synth: eff["synth"]["seed"] = *flags.seed; break;
            case SeedTarget::Train:
                eff["hyperparams"]["seed"] = *flags.seed;
                break;
            case SeedTarget::Master: eff["seed"] = *flags.seed; break;
            case SeedTarget::None: break;
        }
    }
    if (flags.n) eff["synth"]["n"] = *flags.n;
    if (flags.illogical) eff["synth"]["illogical_fraction"] = *flags.illogical;
    if (flags.synth_spec) eff["synth"]["spec"] = *flags.synth_spec;
    if (flags.epochs) eff["hyperparams"]["epochs"] = *flags.epochs;
    if (flags.k) eff["cv"]["k"] = *flags.k;
    if (flags.models) eff["cv"]["models"] = split_list(*flags.models);
    if (flags.model) eff["predict"]["model"] = *flags.model;
    if (flags.input) eff["predict"]["input"] = *flags.input;
    if (flags.host) eff["serve"]["host"] = *flags.host;
    if (flags.port) eff["serve"]["port"] = *flags.port;

    RunConfig cfg;
    cfg.effective = eff;
    if (eff["schema"].is_null()) {
        cfg.schema = default_schema();
    } else {
        cfg.schema =
            schema_from_json(read_file(get_string(eff["schema"], "schema")));
    }
    cfg.data = eff["data"].is_null() ? "" : get_string(eff["data"], "data");
    cfg.out = get_string(eff["out"], "out");
    cfg.seed = get_index(eff["seed"], "seed");
    cfg.threads = get_index(eff["threads"], "threads");
    if (cfg.threads == 0) throw ConfigError("threads must be at least 1");
    cfg.averaging = averaging_from_name(get_string(eff["averaging"],
                                                   "averaging"));
    cfg.hp = hyperparams_from_json(eff["hyperparams"].dump());
    cfg.baselines = baseline_params_from_json(eff["baselines"].dump());

    const json& synth = eff["synth"];
    cfg.synth_n = get_index(synth["n"], "synth.n");
    cfg.synth_seed = get_index(synth["seed"], "synth.seed");
    cfg.synth_illogical =
        get_number(synth["illogical_fraction"], "synth.illogical_fraction");
    if (!synth["spec"].is_null())
        cfg.synth_spec_path = get_string(synth["spec"], "synth.spec");

    const json& cv = eff["cv"];
    cfg.cv_k = get_index(cv["k"], "cv.k");
    for (const auto& name : name_list(cv["models"], "cv.models"))
        cfg.models.push_back(model_kind_from_name(name));
    auto axis_names = [&](const json& v, const std::string& path,
                          std::vector<std::string>& out, bool& use_default) {
        if (v.is_string()) {
            if (v.get<std::string>() != "default")
                throw ConfigError("config key " + path +
                                  " must be an array or \"default\"");
            use_default = true;
            return;
        }
        out = name_list(v, path);
    };
    axis_names(cv["slices"], "cv.slices", cfg.slices, cfg.slices_default);
    axis_names(cv["ablation"], "cv.ablation", cfg.ablation,
               cfg.ablation_default);

    const json& grid = eff["grid"];
    if (!grid["trunk_sizes"].is_array())
        throw ConfigError("config key grid.trunk_sizes must be an array");
    for (std::size_t i = 0; i < grid["trunk_sizes"].size(); ++i) {
        const json& arch = grid["trunk_sizes"][i];
        const std::string path =
            "grid.trunk_sizes[" + std::to_string(i) + "]";
        if (!arch.is_array())
            throw ConfigError("config key " + path + " must be an array");
        std::vector<std::size_t> sizes;
        for (std::size_t l = 0; l < arch.size(); ++l)
            sizes.push_back(
                get_index(arch[l], path + "[" + std::to_string(l) + "]"));
        cfg.axes.trunk_sizes.push_back(std::move(sizes));
    }
    auto index_axis = [&](const char* key, std::vector<std::size_t>& out) {
        if (!grid[key].is_array())
            throw ConfigError(std::string("config key grid.") + key +
                              " must be an array");
        for (std::size_t i = 0; i < grid[key].size(); ++i)
            out.push_back(get_index(grid[key][i],
                                    std::string("grid.") + key + "[" +
                                        std::to_string(i) + "]"));
    };
    auto number_axis = [&](const char* key, std::vector<double>& out) {
        if (!grid[key].is_array())
            throw ConfigError(std::string("config key grid.") + key +
                              " must be an array");
        for (std::size_t i = 0; i < grid[key].size(); ++i)
            out.push_back(get_number(grid[key][i],
                                     std::string("grid.") + key + "[" +
                                         std::to_string(i) + "]"));
    };
    index_axis("epochs", cfg.axes.epochs);
    number_axis("learning_rates", cfg.axes.learning_rates);
    number_axis("dropout_rates", cfg.axes.dropout_rates);
    index_axis("batch_sizes", cfg.axes.batch_sizes);

    cfg.serve_host = get_string(eff["serve"]["host"], "serve.host");
    const std::size_t port = get_index(eff["serve"]["port"], "serve.port");
    if (port == 0 || port > 65535)
        throw ConfigError("serve.port must be in 1..65535");
    cfg.serve_port = static_cast<int>(port);

    if (!eff["predict"]["model"].is_null())
        cfg.predict_model = get_string(eff["predict"]["model"],
                                       "predict.model");
    if (!eff["predict"]["input"].is_null())
        cfg.predict_input = get_string(eff["predict"]["input"],
                                       "predict.input");
    return cfg;
}

fs::path ensure_out(const RunConfig& cfg) {
    fs::path dir(cfg.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.out);
    return dir;
}

Dataset load_dataset(const RunConfig& cfg) {
    if (cfg.data.empty()) throw ConfigError("no data path configured");
    return load_csv(cfg.data, cfg.schema);
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
    if (cfg.synth_n == 0)
        throw ConfigError("synth row count must be positive");
    SynthSpec spec =
        cfg.synth_spec_path.empty()
            ? default_synth_spec(cfg.schema)
            : synth_spec_from_json(read_file(cfg.synth_spec_path),
                                   cfg.schema);
    spec.illogical_fraction = cfg.synth_illogical;
    const Dataset data = generate_synthetic(cfg.synth_n, cfg.synth_seed,
                                            spec);
    const fs::path path = ensure_out(cfg) / "data.csv";
    write_csv(data, path.string());
    out << "wrote " << data.records.size() << " rows to " << path.string()
        << "\n";
    return kExitOk;
}

std::string history_csv(const TrainHistory& history,
                        const std::vector<std::string>& tasks) {
    std::ostringstream s;
    s << "epoch,joint_loss";
    for (const auto& t : tasks) s << ",loss_" << t;
    const bool with_val = !history.val_accuracy.empty();
    if (with_val)
        for (const auto& t : tasks) s << ",val_accuracy_" << t;
    s << "\n";
    for (std::size_t e = 0; e < history.joint_loss.size(); ++e) {
        s << (e + 1) << "," << format_double(history.joint_loss[e]);
        for (std::size_t t = 0; t < tasks.size(); ++t)
            s << "," << format_double(history.task_loss[e][t]);
        if (with_val)
            for (std::size_t t = 0; t < tasks.size(); ++t)
                s << "," << format_double(history.val_accuracy[e][t]);
        s << "\n";
    }
    return s.str();
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
    const Dataset data = load_dataset(cfg);
    const ImputeStats stats = compute_impute_stats(data);
    const Dataset imputed = impute_with(data, stats);
    const Encoder encoder = fit_encoder(imputed);
    const EncodedDataset encoded = encode(encoder, imputed);
    MtlNetwork net = init_network(cfg.schema, encoder, cfg.hp, stats);
    const TrainHistory history = train(net, encoded);

    const fs::path dir = ensure_out(cfg);
    const fs::path model_path = dir / "model.json";
    save_model(net, model_path.string());
    std::vector<std::string> tasks;
    for (const auto& t : cfg.schema.tasks)
        tasks.push_back(t.scale.task_name);
    const fs::path history_path = dir / "history.csv";
    write_file(history_path.string(), history_csv(history, tasks));

    out << "trained " << cfg.hp.epochs << " epochs on "
        << data.records.size() << " rows (" << net.param_count()
        << " parameters)\n";
    if (!history.joint_loss.empty())
        out << "final joint loss " << history.joint_loss.back() << "\n";
    out << "model: " << model_path.string() << "\n";
    out << "history: " << history_path.string() << "\n";
    return kExitOk;
}

MtlNetwork train_full(const RunConfig& cfg, const Dataset& data,
                      std::uint64_t seed) {
    const ImputeStats stats = compute_impute_stats(data);
    const Dataset imputed = impute_with(data, stats);
    const Encoder encoder = fit_encoder(imputed);
    const EncodedDataset encoded = encode(encoder, imputed);
    Hyperparams hp = cfg.hp;
    hp.seed = seed;
    MtlNetwork net = init_network(cfg.schema, encoder, hp, stats);
    train(net, encoded);
    return net;
}

int cmd_cv(const RunConfig& cfg, std::ostream& out) {
    if (cfg.models.empty()) throw ConfigError("no models requested");
    const Dataset data = load_dataset(cfg);
    for (ModelKind kind : cfg.models)
        if (kind != ModelKind::Mtl) {
            validate_baseline_params(cfg.baselines);
            break;
        }

    std::vector<CvReport> reports;
    for (ModelKind kind : cfg.models) {
        ModelSpec spec;
        spec.kind = kind;
        spec.hp = cfg.hp;
        spec.baseline = cfg.baselines;
        spec.averaging = cfg.averaging;
        reports.push_back(
            cross_validate(spec, data, cfg.cv_k, cfg.seed, cfg.threads));
    }
    json report = json::parse(cv_reports_to_json(reports));
    std::string text = render_table(reports);

    std::vector<std::string> slice_axes = cfg.slices;
    if (cfg.slices_default) {
        for (const auto& f : cfg.schema.features)
            if (f.kind == FeatureKind::Categorical)
                slice_axes.push_back(f.name);
    }
    if (!slice_axes.empty()) {
        const MtlNetwork net =
            train_full(cfg, data, derive_seed(cfg.seed, "slice/train"));
        std::vector<SliceReport> slices;
        for (const auto& f : slice_axes)
            slices.push_back(slice_report(net, data, f));
        report["slices"] =
            json::parse(slice_reports_to_json(slices))["slices"];
        text += "\n" + render_slices(slices);
    }

    std::vector<std::string> ablation_axes = cfg.ablation;
    if (cfg.ablation_default) {
        for (const auto& f : cfg.schema.features)
            ablation_axes.push_back(f.name);
    }
    if (!ablation_axes.empty()) {
        ModelSpec spec;
        spec.hp = cfg.hp;
        spec.baseline = cfg.baselines;
        spec.averaging = cfg.averaging;
        const AblationReport ab = feature_ablation(
            spec, data, ablation_axes, cfg.cv_k, cfg.seed, cfg.threads);
        report["ablation"] = json::parse(ablation_to_json(ab));
        text += "\n" + render_ablation(ab);
    }

    const fs::path dir = ensure_out(cfg);
    write_file((dir / "report.json").string(), report.dump(2) + "\n");
    write_file((dir / "report.txt").string(), text);
    out << text;
    return kExitOk;
}

int cmd_gridsearch(const RunConfig& cfg, std::ostream& out) {
    const Dataset data = load_dataset(cfg);
    ModelSpec base;
    base.hp = cfg.hp;
    base.baseline = cfg.baselines;
    base.averaging = cfg.averaging;
    const GridResult result =
        grid_search(base, cfg.axes, data, cfg.cv_k, cfg.seed, cfg.threads);

    const fs::path dir = ensure_out(cfg);
    write_file((dir / "report.json").string(), grid_result_to_json(result));
    const std::string text = render_grid(result);
    write_file((dir / "report.txt").string(), text);
    json best_config = cfg.effective;
    best_config["hyperparams"] =
        json::parse(hyperparams_to_json(result.best_hp));
    const fs::path best_path = dir / "best_config.json";
    write_file(best_path.string(), best_config.dump(2) + "\n");

    out << text;
    out << "best config: " << best_path.string() << "\n";
    return kExitOk;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out) {
    const fs::path dir = ensure_out(cfg);
    const std::string model_path = cfg.predict_model.empty()
                                       ? (dir / "model.json").string()
                                       : cfg.predict_model;
    const std::string input =
        cfg.predict_input.empty() ? cfg.data : cfg.predict_input;
    if (input.empty()) throw ConfigError("no input CSV configured");

    const MtlNetwork net = load_model(model_path);
    const Dataset data = load_csv(input, net.schema);
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        for (const auto& v : validate_record(net.schema, data.records[i])) {
            problems.push_back("row " + std::to_string(i + 1) + " " +
                               v.field + ": " + v.message);
            if (problems.size() >= 20) break;
        }
        if (problems.size() >= 20) break;
    }
    if (!problems.empty()) {
        std::string msg = "input does not match the model schema:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ValidationError(msg);
    }

    std::ostringstream csv;
    csv << "row";
    for (const auto& t : net.schema.tasks)
        csv << "," << t.scale.task_name << "_value,"
            << t.scale.task_name << "_label," << t.scale.task_name
            << "_prob";
    csv << "\n";
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        csv << (i + 1);
        for (const auto& p : predict(net, data.records[i])) {
            const double top =
                *std::max_element(p.probabilities.begin(),
                                  p.probabilities.end());
            csv << "," << p.class_value << "," << csv_escape(p.label) << ","
                << format_double(top);
        }
        csv << "\n";
    }
    const fs::path out_path = dir / "predictions.csv";
    write_file(out_path.string(), csv.str());
    out << "wrote " << data.records.size() << " predictions to "
        << out_path.string() << "\n";
    return kExitOk;
}

int cmd_serve(const RunConfig& cfg, std::ostream& out) {
    const std::string model_path =
        cfg.predict_model.empty()
            ? (fs::path(cfg.out) / "model.json").string()
            : cfg.predict_model;
    const LoadedModel model = load_model_with_checksum(model_path);
    serve_blocking(model, cfg.serve_host, cfg.serve_port, &out);
    return kExitOk;
}

int cmd_summary(const RunConfig& cfg, std::ostream& out) {
    const Dataset data = load_dataset(cfg);
    const DatasetSummaryReport report = dataset_summary(data);
    const fs::path dir = ensure_out(cfg);
    write_file((dir / "report.json").string(), summary_to_json(report));
    const std::string text = render_summary(report);
    write_file((dir / "report.txt").string(), text);
    out << text;
    return kExitOk;
}

int cmd_config_init(const std::string& path, bool force, std::ostream& out) {
    if (!force && fs::exists(path))
        throw ConfigError("refusing to overwrite " + path +
                          " (pass --force)");
    write_file(path, default_config_json());
    out << "wrote " << path << "\n";
    return kExitOk;
}

}  // namespace

std::string default_config_json() {
    return default_config_obj().dump(2) + "\n";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
    CLI::App app{"DeepComfort multi-task thermal-comfort toolkit"};
    app.name("comfort");
    app.require_subcommand(1);
    FlagSet flags;
    bool force = false;
    std::string init_path = "config.json";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", flags.config, "run config JSON path");
        cmd->add_option("--out", flags.out, "output directory");
        cmd->add_option("--data", flags.data, "dataset CSV path");
        cmd->add_option("--threads", flags.threads, "worker threads");
        cmd->add_option("--averaging", flags.averaging,
                        "metric averaging: macro or weighted");
    };

    CLI::App* synth =
        app.add_subcommand("synth", "Generate a synthetic survey CSV");
    add_common(synth);
    synth->add_option("--n", flags.n, "row count");
    synth->add_option("--seed", flags.seed, "generator seed");
    synth->add_option("--illogical", flags.illogical,
                      "fraction of contradictory TCV labels");
    synth->add_option("--spec", flags.synth_spec,
                      "synthetic spec JSON path");

    CLI::App* train =
        app.add_subcommand("train", "Train the multi-task model");
    add_common(train);
    train->add_option("--seed", flags.seed, "training seed");
    train->add_option("--epochs", flags.epochs, "training epochs");

    CLI::App* cv = app.add_subcommand(
        "cv", "Cross-validate the model and requested baselines");
    add_common(cv);
    cv->add_option("--seed", flags.seed, "fold-plan seed");
    cv->add_option("--k", flags.k, "fold count");
    cv->add_option("--models", flags.models,
                   "comma-separated techniques (mtl,knn,...)");

    CLI::App* grid =
        app.add_subcommand("gridsearch", "Exhaustive hyperparameter sweep");
    add_common(grid);
    grid->add_option("--seed", flags.seed, "fold-plan seed");
    grid->add_option("--k", flags.k, "fold count");

    CLI::App* predict =
        app.add_subcommand("predict", "Batch inference over a CSV");
    add_common(predict);
    predict->add_option("--model", flags.model, "model JSON path");
    predict->add_option("--input", flags.input, "input CSV path");

    CLI::App* serve =
        app.add_subcommand("serve", "Serve the model over HTTP");
    add_common(serve);
    serve->add_option("--model", flags.model, "model JSON path");
    serve->add_option("--host", flags.host, "bind address");
    serve->add_option("--port", flags.port, "bind port");

    CLI::App* summary =
        app.add_subcommand("summary", "Dataset statistics report");
    add_common(summary);

    CLI::App* config =
        app.add_subcommand("config", "Configuration helpers");
    config->require_subcommand(1);
    CLI::App* init = config->add_subcommand(
        "init", "Write a full-default config file");
    init->add_option("--path", init_path, "where to write the config");
    init->add_flag("--force", force, "overwrite an existing file");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (config->parsed()) return cmd_config_init(init_path, force, out);
        if (synth->parsed())
            return cmd_synth(build_config(flags, SeedTarget::Synth), out);
        if (train->parsed())
            return cmd_train(build_config(flags, SeedTarget::Train), out);
        if (cv->parsed())
            return cmd_cv(build_config(flags, SeedTarget::Master), out);
        if (grid->parsed())
            return cmd_gridsearch(build_config(flags, SeedTarget::Master),
                                  out);
        if (predict->parsed())
            return cmd_predict(build_config(flags, SeedTarget::None), out);
        if (serve->parsed())
            return cmd_serve(build_config(flags, SeedTarget::None), out);
        if (summary->parsed())
            return cmd_summary(build_config(flags, SeedTarget::None), out);
        err << "error: no command selected\n";
        return kExitUsage;
    } catch (const DivergenceError& e) {
        err << "error: " << e.what() << " (epoch " << e.epoch << ")\n";
        return kExitDivergence;
    } catch (const ModelLoadError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace comfort
