#include "comfort/mtl.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "comfort/csv.hpp"

namespace comfort {

using nlohmann::json;

namespace {

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(),
                   nullptr) != 1) {
        throw IoError("sha-256 computation failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

double class_weight(const Hyperparams& hp, const std::string& task,
                    std::size_t cls) {
    auto it = hp.class_weights.find(task);
    if (it == hp.class_weights.end()) return 1.0;
    return it->second[cls];
}

// All intermediate activations of one batched forward pass, kept for the
// backward pass. trunk_a holds post-tanh values (needed by tanh_backward);
// trunk_out holds the post-dropout values that feed the next layer.
struct Cache {
    std::vector<Mat> trunk_a;
    std::vector<Mat> trunk_mask;
    std::vector<Mat> trunk_out;
    std::vector<std::vector<Mat>> head_a;
    std::vector<std::vector<Mat>> head_mask;
    std::vector<std::vector<Mat>> head_out;
    std::vector<Mat> probs;  // per task; empty for inactive tasks
};

void forward_batch(const MtlNetwork& net, const Mat& x, bool training,
                   const std::vector<char>& active, Rng* trunk_rng,
                   const std::vector<Rng*>& head_rngs, Cache& c) {
    const double rate = net.hp.dropout_rate;
    const bool drop = training && rate > 0.0;
    const std::size_t depth = net.trunk.size();
    c.trunk_a.assign(depth, Mat{});
    c.trunk_mask.assign(depth, Mat{});
    c.trunk_out.assign(depth, Mat{});
    const Mat* cur = &x;
    for (std::size_t l = 0; l < depth; ++l) {
        Mat z = dense_forward_batch(net.trunk[l], *cur);
        tanh_apply(z);
        c.trunk_a[l] = std::move(z);
        c.trunk_out[l] = c.trunk_a[l];
        if (drop) {
            c.trunk_mask[l] =
                dropout_mask(c.trunk_a[l].rows, c.trunk_a[l].cols, rate,
                             *trunk_rng);
            apply_mask(c.trunk_out[l], c.trunk_mask[l]);
        }
        cur = &c.trunk_out[l];
    }
    const std::size_t tasks = net.heads.size();
    c.head_a.assign(tasks, {});
    c.head_mask.assign(tasks, {});
    c.head_out.assign(tasks, {});
    c.probs.assign(tasks, Mat{});
    for (std::size_t t = 0; t < tasks; ++t) {
        if (!active[t]) continue;
        const auto& stack = net.heads[t];
        const std::size_t hidden = stack.size() - 1;
        c.head_a[t].assign(hidden, Mat{});
        c.head_mask[t].assign(hidden, Mat{});
        c.head_out[t].assign(hidden, Mat{});
        const Mat* h = cur;
        for (std::size_t j = 0; j < hidden; ++j) {
            Mat z = dense_forward_batch(stack[j], *h);
            tanh_apply(z);
            c.head_a[t][j] = std::move(z);
            c.head_out[t][j] = c.head_a[t][j];
            if (drop) {
                c.head_mask[t][j] =
                    dropout_mask(c.head_a[t][j].rows, c.head_a[t][j].cols,
                                 rate, *head_rngs[t]);
                apply_mask(c.head_out[t][j], c.head_mask[t][j]);
            }
            h = &c.head_out[t][j];
        }
        Mat logits = dense_forward_batch(stack.back(), *h);
        softmax_rows(logits);
        c.probs[t] = std::move(logits);
    }
}

struct LayerGrads {
    Mat dw;
    std::vector<double> db;
};

void size_grads(const std::vector<DenseLayer>& layers,
                std::vector<LayerGrads>& g) {
    g.resize(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        g[i].dw = Mat(layers[i].w.rows, layers[i].w.cols);
        g[i].db.assign(layers[i].b.size(), 0.0);
    }
}

void zero_grads(std::vector<LayerGrads>& g) {
    for (auto& lg : g) {
        lg.dw.zero();
        std::fill(lg.db.begin(), lg.db.end(), 0.0);
    }
}

// dlogits entries must already carry the task weight, class weight, and
// batch normalization; inactive tasks pass an empty Mat.
void backward_batch(const MtlNetwork& net, const Cache& c, const Mat& x,
                    std::vector<Mat>& dlogits,
                    std::vector<LayerGrads>& trunk_g,
                    std::vector<std::vector<LayerGrads>>& head_g) {
    const std::size_t depth = net.trunk.size();
    const Mat& trunk_out = depth ? c.trunk_out.back() : x;
    Mat dtrunk(trunk_out.rows, trunk_out.cols);
    Mat dx;
    for (std::size_t t = 0; t < net.heads.size(); ++t) {
        if (dlogits[t].rows == 0) continue;
        const auto& stack = net.heads[t];
        Mat grad = std::move(dlogits[t]);
        for (std::size_t j = stack.size(); j-- > 0;) {
            const Mat& in = (j == 0) ? trunk_out : c.head_out[t][j - 1];
            dense_backward_batch(stack[j], in, grad, head_g[t][j].dw,
                                 head_g[t][j].db, dx);
            if (j == 0) break;
            grad = std::move(dx);
            if (c.head_mask[t][j - 1].rows)
                apply_mask(grad, c.head_mask[t][j - 1]);
            tanh_backward(c.head_a[t][j - 1], grad);
        }
        for (std::size_t i = 0; i < dtrunk.a.size(); ++i)
            dtrunk.a[i] += dx.a[i];
    }
    Mat grad = std::move(dtrunk);
    for (std::size_t l = depth; l-- > 0;) {
        if (c.trunk_mask[l].rows) apply_mask(grad, c.trunk_mask[l]);
        tanh_backward(c.trunk_a[l], grad);
        const Mat& in = (l == 0) ? x : c.trunk_out[l - 1];
        dense_backward_batch(net.trunk[l], in, grad, trunk_g[l].dw,
                             trunk_g[l].db, dx);
        grad = std::move(dx);
    }
}

Mat gather_rows(const EncodedDataset& data,
                const std::vector<std::size_t>& order, std::size_t b0,
                std::size_t b1) {
    Mat x(b1 - b0, data.d);
    for (std::size_t r = b0; r < b1; ++r) {
        std::memcpy(x.row(r - b0), data.row(order[r]),
                    data.d * sizeof(double));
    }
    return x;
}

std::size_t argmax_row(const double* row, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j) {
        if (row[j] > row[best]) best = j;  // ties keep the lower index
    }
    return best;
}

// Registers every parameter tensor in a fixed order: trunk layers first,
// then heads in schema task order, (w, b) per layer. Optimizer state,
// gradient buffers, and checkpoint layout all share this order.
void collect_tensors(MtlNetwork& net, std::vector<LayerGrads>& trunk_g,
                     std::vector<std::vector<LayerGrads>>& head_g,
                     std::vector<std::span<double>>& params,
                     std::vector<std::span<const double>>& grads) {
    params.clear();
    grads.clear();
    for (std::size_t l = 0; l < net.trunk.size(); ++l) {
        params.emplace_back(net.trunk[l].w.a);
        grads.emplace_back(trunk_g[l].dw.a);
        params.emplace_back(net.trunk[l].b);
        grads.emplace_back(trunk_g[l].db);
    }
    for (std::size_t t = 0; t < net.heads.size(); ++t) {
        for (std::size_t j = 0; j < net.heads[t].size(); ++j) {
            params.emplace_back(net.heads[t][j].w.a);
            grads.emplace_back(head_g[t][j].dw.a);
            params.emplace_back(net.heads[t][j].b);
            grads.emplace_back(head_g[t][j].db);
        }
    }
}

double parse_stored_double(const json& v, const char* what) {
    if (!v.is_string()) throw ModelLoadError(std::string(what) +
                                             ": expected decimal string");
    const std::string& s = v.get_ref<const std::string&>();
    errno = 0;
    char* end = nullptr;
    double d = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw ModelLoadError(std::string(what) + ": bad numeric literal \"" +
                             s + "\"");
    if (!std::isfinite(d))
        throw ModelLoadError(std::string(what) + ": non-finite value");
    return d;
}

json hyperparams_obj(const Hyperparams& hp) {
    json j;
    j["trunk_sizes"] = hp.trunk_sizes;
    j["head_hidden_sizes"] = json::object();
    for (const auto& [name, sizes] : hp.head_hidden_sizes)
        j["head_hidden_sizes"][name] = sizes;
    j["dropout_rate"] = hp.dropout_rate;
    j["learning_rate"] = hp.learning_rate;
    j["epochs"] = hp.epochs;
    j["batch_size"] = hp.batch_size;
    j["loss_weights"] = json::object();
    for (const auto& [name, w] : hp.loss_weights) j["loss_weights"][name] = w;
    j["class_weights"] = json::object();
    for (const auto& [name, w] : hp.class_weights)
        j["class_weights"][name] = w;
    j["optimizer"] = hp.optimizer == OptimizerKind::Adam ? "adam" : "sgd";
    j["seed"] = hp.seed;
    return j;
}

std::size_t get_size(const json& v, const char* what) {
    if (!v.is_number_integer() || (v.is_number_integer() &&
                                   v.get<long long>() < 0))
        throw ConfigError(std::string(what) + " must be a non-negative integer");
    return v.get<std::size_t>();
}

Hyperparams hyperparams_from_obj(const json& j) {
    if (!j.is_object()) throw ConfigError("hyperparams must be an object");
    Hyperparams hp;
    for (const auto& [key, value] : j.items()) {
        if (key == "trunk_sizes") {
            hp.trunk_sizes.clear();
            for (const auto& v : value)
                hp.trunk_sizes.push_back(get_size(v, "trunk size"));
        } else if (key == "head_hidden_sizes") {
            hp.head_hidden_sizes.clear();
            for (const auto& [task, sizes] : value.items()) {
                std::vector<std::size_t> out;
                for (const auto& v : sizes)
                    out.push_back(get_size(v, "head hidden size"));
                hp.head_hidden_sizes[task] = std::move(out);
            }
        } else if (key == "dropout_rate") {
            hp.dropout_rate = value.get<double>();
        } else if (key == "learning_rate") {
            hp.learning_rate = value.get<double>();
        } else if (key == "epochs") {
            hp.epochs = get_size(value, "epochs");
        } else if (key == "batch_size") {
            hp.batch_size = get_size(value, "batch_size");
        } else if (key == "loss_weights") {
            hp.loss_weights.clear();
            for (const auto& [task, w] : value.items())
                hp.loss_weights[task] = w.get<double>();
        } else if (key == "class_weights") {
            hp.class_weights.clear();
            for (const auto& [task, w] : value.items())
                hp.class_weights[task] = w.get<std::vector<double>>();
        } else if (key == "optimizer") {
            const std::string kind = value.get<std::string>();
            if (kind == "adam")
                hp.optimizer = OptimizerKind::Adam;
            else if (kind == "sgd")
                hp.optimizer = OptimizerKind::Sgd;
            else
                throw ConfigError("unknown optimizer \"" + kind + "\"");
        } else if (key == "seed") {
            if (!value.is_number_integer() && !value.is_number_unsigned())
                throw ConfigError("seed must be an integer");
            hp.seed = value.get<std::uint64_t>();
        } else {
            throw ConfigError("unknown hyperparams field \"" + key + "\"");
        }
    }
    validate_hyperparams(hp);
    return hp;
}

}  // namespace

void validate_hyperparams(const Hyperparams& hp) {
    for (std::size_t s : hp.trunk_sizes)
        if (s < 1) throw ConfigError("trunk sizes must be at least 1");
    for (const auto& [name, sizes] : hp.head_hidden_sizes)
        for (std::size_t s : sizes)
            if (s < 1)
                throw ConfigError("head hidden sizes must be at least 1 (" +
                                  name + ")");
    if (!(hp.dropout_rate >= 0.0 && hp.dropout_rate < 1.0))
        throw ConfigError("dropout_rate must be in [0, 1)");
    if (!(std::isfinite(hp.learning_rate) && hp.learning_rate > 0.0))
        throw ConfigError("learning_rate must be positive");
    if (hp.epochs < 1) throw ConfigError("epochs must be at least 1");
    if (hp.batch_size < 1) throw ConfigError("batch_size must be at least 1");
    for (const auto& [name, w] : hp.loss_weights)
        if (!(std::isfinite(w) && w >= 0.0))
            throw ConfigError("loss weight for \"" + name +
                              "\" must be finite and non-negative");
    for (const auto& [name, ws] : hp.class_weights)
        for (double w : ws)
            if (!(std::isfinite(w) && w >= 0.0))
                throw ConfigError("class weights for \"" + name +
                                  "\" must be finite and non-negative");
}

std::string hyperparams_to_json(const Hyperparams& hp) {
    return hyperparams_obj(hp).dump(2);
}

Hyperparams hyperparams_from_json(const std::string& text) {
    try {
        return hyperparams_from_obj(json::parse(text));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid hyperparams json: ") +
                          e.what());
    }
}

double MtlNetwork::loss_weight(std::size_t task) const {
    const auto& name = schema.tasks[task].scale.task_name;
    auto it = hp.loss_weights.find(name);
    return it == hp.loss_weights.end() ? 1.0 : it->second;
}

std::size_t MtlNetwork::param_count() const {
    std::size_t n = 0;
    for (const auto& l : trunk) n += l.param_count();
    for (const auto& stack : heads)
        for (const auto& l : stack) n += l.param_count();
    return n;
}

MtlNetwork init_network(const DatasetSchema& schema, const Encoder& encoder,
                        const Hyperparams& hp, const ImputeStats& impute) {
    validate_schema(schema);
    validate_hyperparams(hp);
    if (!encoder.fitted) throw ConfigError("encoder not fitted");
    const std::size_t d = encoder.dim();
    if (d == 0) throw ConfigError("encoded input dimension is zero");
    for (const auto& [name, w] : hp.loss_weights) {
        (void)w;
        if (!schema.find_task(name))
            throw ConfigError("loss weight for unknown task \"" + name + "\"");
    }
    for (const auto& [name, sizes] : hp.head_hidden_sizes) {
        (void)sizes;
        if (!schema.find_task(name))
            throw ConfigError("head sizes for unknown task \"" + name + "\"");
    }
    for (const auto& [name, ws] : hp.class_weights) {
        const TaskSpec* task = schema.find_task(name);
        if (!task)
            throw ConfigError("class weights for unknown task \"" + name +
                              "\"");
        if (ws.size() != task->scale.size())
            throw ConfigError("class weights for \"" + name + "\" must have " +
                              std::to_string(task->scale.size()) +
                              " entries");
    }

    MtlNetwork net;
    net.schema = schema;
    net.encoder = encoder;
    net.impute = impute;
    net.hp = hp;

    std::size_t in = d;
    for (std::size_t l = 0; l < hp.trunk_sizes.size(); ++l) {
        DenseLayer layer(hp.trunk_sizes[l], in);
        Rng rng(derive_seed(hp.seed, "init/trunk", l));
        init_dense(layer, rng);
        in = hp.trunk_sizes[l];
        net.trunk.push_back(std::move(layer));
    }
    for (const auto& task : schema.tasks) {
        const std::string& name = task.scale.task_name;
        std::vector<std::size_t> hidden;
        auto it = hp.head_hidden_sizes.find(name);
        if (it != hp.head_hidden_sizes.end()) hidden = it->second;
        std::vector<DenseLayer> stack;
        std::size_t hin = in;
        for (std::size_t j = 0; j < hidden.size(); ++j) {
            DenseLayer layer(hidden[j], hin);
            Rng rng(derive_seed(hp.seed, "init/head/" + name, j));
            init_dense(layer, rng);
            hin = hidden[j];
            stack.push_back(std::move(layer));
        }
        DenseLayer out(task.scale.size(), hin);
        Rng rng(derive_seed(hp.seed, "init/head/" + name, hidden.size()));
        init_dense(out, rng);
        stack.push_back(std::move(out));
        net.heads.push_back(std::move(stack));
    }
    return net;
}

std::vector<std::vector<double>> forward_multi(const MtlNetwork& net,
                                               std::span<const double> x,
                                               bool training,
                                               Rng* dropout_rng) {
    if (x.size() != net.input_dim())
        throw ValidationError("forward_multi: input size mismatch");
    const bool drop = training && net.hp.dropout_rate > 0.0;
    if (drop && !dropout_rng)
        throw ConfigError("training-mode forward needs an rng for dropout");
    Mat xm(1, x.size());
    std::copy(x.begin(), x.end(), xm.a.begin());
    std::vector<char> active(net.heads.size(), 1);
    std::vector<Rng*> head_rngs(net.heads.size(), dropout_rng);
    Cache c;
    forward_batch(net, xm, training, active, dropout_rng, head_rngs, c);
    std::vector<std::vector<double>> out(net.heads.size());
    for (std::size_t t = 0; t < net.heads.size(); ++t) {
        const Mat& p = c.probs[t];
        out[t].assign(p.row(0), p.row(0) + p.cols);
    }
    return out;
}

std::optional<double> joint_loss(
    const MtlNetwork& net, std::span<const double> x,
    const std::vector<std::optional<std::size_t>>& label_indices) {
    if (label_indices.size() != net.schema.tasks.size())
        throw ValidationError("joint_loss: one label slot per task required");
    bool any = false;
    for (const auto& l : label_indices) any = any || l.has_value();
    if (!any) return std::nullopt;
    auto probs = forward_multi(net, x, false);
    double total = 0.0;
    for (std::size_t t = 0; t < label_indices.size(); ++t) {
        if (!label_indices[t]) continue;
        const std::size_t y = *label_indices[t];
        const auto& name = net.schema.tasks[t].scale.task_name;
        total += net.loss_weight(t) * class_weight(net.hp, name, y) *
                 cross_entropy(probs[t], y);
    }
    return total;
}

TrainHistory train(MtlNetwork& net, const EncodedDataset& data,
                   const EncodedDataset* validation) {
    if (data.n == 0) throw ValidationError("training set is empty");
    if (data.d != net.input_dim())
        throw ValidationError("training data dimension mismatch");
    if (data.label_index.size() != net.schema.tasks.size())
        throw ValidationError("training data task count mismatch");
    if (validation && validation->d != net.input_dim())
        throw ValidationError("validation data dimension mismatch");

    const std::size_t tasks = net.schema.tasks.size();
    std::vector<char> active(tasks, 0);
    bool any_active = false;
    for (std::size_t t = 0; t < tasks; ++t) {
        active[t] = net.loss_weight(t) > 0.0 ? 1 : 0;
        any_active = any_active || active[t];
    }
    if (!any_active) throw ConfigError("all task loss weights are zero");

    // Rows that can contribute gradient: at least one present label among
    // the positive-weight tasks. This keeps a weights-(1,0,0) run on the
    // exact row set a single-task run would see.
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < data.n; ++i) {
        for (std::size_t t = 0; t < tasks; ++t) {
            if (active[t] && data.label_present[t][i]) {
                rows.push_back(i);
                break;
            }
        }
    }
    if (rows.empty())
        throw ValidationError("training set has no usable labeled rows");

    std::vector<LayerGrads> trunk_g;
    std::vector<std::vector<LayerGrads>> head_g(tasks);
    size_grads(net.trunk, trunk_g);
    for (std::size_t t = 0; t < tasks; ++t) size_grads(net.heads[t], head_g[t]);
    std::vector<std::span<double>> params;
    std::vector<std::span<const double>> grads;
    collect_tensors(net, trunk_g, head_g, params, grads);

    OptimizerState opt;
    opt.kind = net.hp.optimizer;
    opt.alpha = net.hp.learning_rate;
    std::vector<std::size_t> sizes;
    for (const auto& p : params) sizes.push_back(p.size());
    opt.init(sizes);

    Rng shuffle_rng(derive_seed(net.hp.seed, "shuffle"));
    Rng trunk_rng(derive_seed(net.hp.seed, "dropout/trunk"));
    std::vector<Rng> head_rng_store;
    head_rng_store.reserve(tasks);
    for (std::size_t t = 0; t < tasks; ++t) {
        head_rng_store.emplace_back(derive_seed(
            net.hp.seed, "dropout/head/" + net.schema.tasks[t].scale.task_name));
    }
    std::vector<Rng*> head_rngs(tasks);
    for (std::size_t t = 0; t < tasks; ++t) head_rngs[t] = &head_rng_store[t];

    TrainHistory history;
    const std::size_t batch = net.hp.batch_size;
    Cache cache;
    std::vector<Mat> dlogits(tasks);

    for (std::size_t epoch = 0; epoch < net.hp.epochs; ++epoch) {
        shuffle_rng.shuffle(rows);
        double weighted_sum = 0.0;
        std::vector<double> task_sum(tasks, 0.0);
        std::vector<std::size_t> task_n(tasks, 0);

        for (std::size_t b0 = 0; b0 < rows.size(); b0 += batch) {
            const std::size_t b1 = std::min(b0 + batch, rows.size());
            const std::size_t bsz = b1 - b0;
            Mat x = gather_rows(data, rows, b0, b1);
            forward_batch(net, x, true, active, &trunk_rng, head_rngs, cache);

            for (std::size_t t = 0; t < tasks; ++t) {
                dlogits[t] = Mat{};
                if (!active[t]) continue;
                const double w = net.loss_weight(t);
                const auto& name = net.schema.tasks[t].scale.task_name;
                const Mat& p = cache.probs[t];
                Mat dl(p.rows, p.cols);
                for (std::size_t r = 0; r < bsz; ++r) {
                    const std::size_t g = rows[b0 + r];
                    if (!data.label_present[t][g]) continue;
                    const std::size_t y = data.label_index[t][g];
                    const double cw = class_weight(net.hp, name, y);
                    const double ce = -std::log(std::max(p(r, y), kProbClamp));
                    weighted_sum += w * cw * ce;
                    task_sum[t] += cw * ce;
                    task_n[t] += 1;
                    const double scale = w * cw / static_cast<double>(bsz);
                    const double* pr = p.row(r);
                    double* dr = dl.row(r);
                    for (std::size_t j = 0; j < p.cols; ++j)
                        dr[j] = scale * pr[j];
                    dr[y] -= scale;
                }
                dlogits[t] = std::move(dl);
            }

            zero_grads(trunk_g);
            for (auto& hg : head_g) zero_grads(hg);
            backward_batch(net, cache, x, dlogits, trunk_g, head_g);
            try {
                adam_step(opt, params, grads);
            } catch (const DivergenceError&) {
                throw DivergenceError("non-finite gradient at epoch " +
                                          std::to_string(epoch + 1),
                                      epoch + 1);
            }
        }

        const double joint =
            weighted_sum / static_cast<double>(rows.size());
        if (!std::isfinite(joint))
            throw DivergenceError("non-finite training loss at epoch " +
                                      std::to_string(epoch + 1),
                                  epoch + 1);
        history.joint_loss.push_back(joint);
        std::vector<double> per_task(tasks, 0.0);
        for (std::size_t t = 0; t < tasks; ++t) {
            if (task_n[t])
                per_task[t] = task_sum[t] / static_cast<double>(task_n[t]);
        }
        history.task_loss.push_back(std::move(per_task));

        if (validation) {
            auto preds = predict_indices(net, *validation);
            std::vector<double> acc(tasks, 0.0);
            for (std::size_t t = 0; t < tasks; ++t) {
                std::size_t present = 0;
                std::size_t correct = 0;
                for (std::size_t i = 0; i < validation->n; ++i) {
                    if (!validation->label_present[t][i]) continue;
                    present += 1;
                    if (preds[t][i] == validation->label_index[t][i])
                        correct += 1;
                }
                if (present)
                    acc[t] = static_cast<double>(correct) /
                             static_cast<double>(present);
            }
            history.val_accuracy.push_back(std::move(acc));
        }
    }
    return history;
}

std::vector<std::vector<std::size_t>> predict_indices(
    const MtlNetwork& net, const EncodedDataset& data) {
    if (data.d != net.input_dim())
        throw ValidationError("prediction data dimension mismatch");
    const std::size_t tasks = net.heads.size();
    std::vector<std::vector<std::size_t>> out(tasks,
                                              std::vector<std::size_t>(data.n));
    const std::vector<char> active(tasks, 1);
    const std::size_t chunk = 512;
    Cache cache;
    for (std::size_t start = 0; start < data.n; start += chunk) {
        const std::size_t end = std::min(start + chunk, data.n);
        Mat x(end - start, data.d);
        std::memcpy(x.a.data(), data.x.data() + start * data.d,
                    (end - start) * data.d * sizeof(double));
        forward_batch(net, x, false, active, nullptr, {}, cache);
        for (std::size_t t = 0; t < tasks; ++t) {
            const Mat& p = cache.probs[t];
            for (std::size_t r = 0; r < p.rows; ++r)
                out[t][start + r] = argmax_row(p.row(r), p.cols);
        }
    }
    return out;
}

std::vector<TaskPrediction> predict(const MtlNetwork& net,
                                    const SurveyRecord& record) {
    for (const auto& [name, value] : record.values) {
        const FeatureSpec* f = net.schema.find_feature(name);
        if (!f) throw ValidationError("unknown feature \"" + name + "\"");
        if (is_missing(value)) continue;
        if (f->kind == FeatureKind::Numeric &&
            !std::holds_alternative<double>(value))
            throw ValidationError("feature \"" + name + "\" must be numeric");
        if (f->kind == FeatureKind::Categorical &&
            !std::holds_alternative<std::string>(value))
            throw ValidationError("feature \"" + name +
                                  "\" must be categorical");
    }
    Dataset single;
    single.schema = net.schema;
    single.records.push_back(record);
    Dataset filled = impute_with(single, net.impute);

    std::vector<double> x(net.input_dim(), 0.0);
    encode_record(net.encoder, net.schema, filled.records[0], x.data());
    auto probs = forward_multi(net, x, false);

    std::vector<TaskPrediction> out;
    for (std::size_t t = 0; t < net.schema.tasks.size(); ++t) {
        const auto& scale = net.schema.tasks[t].scale;
        const std::size_t best = argmax_row(probs[t].data(), probs[t].size());
        TaskPrediction p;
        p.task = scale.task_name;
        p.class_value = scale.classes[best].value;
        p.label = scale.classes[best].label;
        p.probabilities = std::move(probs[t]);
        out.push_back(std::move(p));
    }
    return out;
}

void save_model(const MtlNetwork& net, const std::string& path) {
    json doc;
    doc["format_version"] = 1;
    doc["schema"] = json::parse(schema_to_json(net.schema));

    json means = json::object();
    json stds = json::object();
    json categories = json::object();
    for (const auto& ns : net.encoder.numeric) {
        means[ns.name] = format_double(ns.mean);
        stds[ns.name] = format_double(ns.std);
    }
    for (const auto& cs : net.encoder.categorical)
        categories[cs.name] = cs.categories;
    doc["encoder"] = {{"means", means},
                      {"stds", stds},
                      {"categories", categories}};

    json medians = json::object();
    json modes = json::object();
    for (const auto& [name, v] : net.impute.medians)
        medians[name] = format_double(v);
    for (const auto& [name, v] : net.impute.modes) modes[name] = v;
    doc["impute"] = {{"medians", medians}, {"modes", modes}};

    json trunk_sizes = json::array();
    for (const auto& l : net.trunk) trunk_sizes.push_back(l.fan_out());
    json head_sizes = json::object();
    for (std::size_t t = 0; t < net.heads.size(); ++t) {
        json sizes = json::array();
        for (const auto& l : net.heads[t]) sizes.push_back(l.fan_out());
        head_sizes[net.schema.tasks[t].scale.task_name] = sizes;
    }
    doc["architecture"] = {{"trunk_sizes", trunk_sizes},
                           {"head_sizes", head_sizes}};
    doc["hyperparams"] = hyperparams_obj(net.hp);

    auto layer_obj = [](const DenseLayer& l) {
        json w = json::array();
        for (double v : l.w.a) w.push_back(format_double(v));
        json b = json::array();
        for (double v : l.b) b.push_back(format_double(v));
        return json{{"w", w}, {"b", b}};
    };
    json trunk_w = json::array();
    for (const auto& l : net.trunk) trunk_w.push_back(layer_obj(l));
    json heads_w = json::object();
    for (std::size_t t = 0; t < net.heads.size(); ++t) {
        json stack = json::array();
        for (const auto& l : net.heads[t]) stack.push_back(layer_obj(l));
        heads_w[net.schema.tasks[t].scale.task_name] = stack;
    }
    doc["weights"] = {{"trunk", trunk_w}, {"heads", heads_w}};

    doc["checksum"] = sha256_hex(doc.dump());

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model file \"" + path + "\"");
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("failed writing model file \"" + path + "\"");
}

MtlNetwork load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read model file \"" + path + "\"");
    std::stringstream buf;
    buf << in.rdbuf();

    json doc;
    try {
        doc = json::parse(buf.str());
    } catch (const json::exception&) {
        throw ModelLoadError("malformed or truncated model file \"" + path +
                             "\"");
    }
    try {
        if (!doc.contains("format_version") ||
            !doc["format_version"].is_number_integer())
            throw ModelLoadError("model file lacks a format_version");
        const long long version = doc["format_version"].get<long long>();
        if (version != 1)
            throw ModelLoadError("unsupported model format version " +
                                 std::to_string(version));
        if (!doc.contains("checksum") || !doc["checksum"].is_string())
            throw ModelLoadError("model file lacks a checksum");
        const std::string stored = doc["checksum"].get<std::string>();
        json body = doc;
        body.erase("checksum");
        if (sha256_hex(body.dump()) != stored)
            throw ModelLoadError("model checksum mismatch");

        MtlNetwork net;
        net.schema = schema_from_json(doc.at("schema").dump());

        const json& enc = doc.at("encoder");
        const json& means = enc.at("means");
        const json& stds = enc.at("stds");
        const json& categories = enc.at("categories");
        for (const auto& f : net.schema.features) {
            if (f.kind == FeatureKind::Numeric) {
                if (!means.contains(f.name) || !stds.contains(f.name))
                    throw ModelLoadError("encoder statistics missing for \"" +
                                         f.name + "\"");
                net.encoder.numeric.push_back(
                    {f.name, parse_stored_double(means.at(f.name), "mean"),
                     parse_stored_double(stds.at(f.name), "std")});
            } else {
                if (!categories.contains(f.name))
                    throw ModelLoadError("encoder categories missing for \"" +
                                         f.name + "\"");
                Encoder::CategoricalSlots slots;
                slots.name = f.name;
                for (const auto& c : categories.at(f.name))
                    slots.categories.push_back(c.get<std::string>());
                net.encoder.categorical.push_back(std::move(slots));
            }
        }
        net.encoder.fitted = true;

        const json& impute = doc.at("impute");
        for (const auto& [name, v] : impute.at("medians").items())
            net.impute.medians[name] = parse_stored_double(v, "median");
        for (const auto& [name, v] : impute.at("modes").items())
            net.impute.modes[name] = v.get<std::string>();

        try {
            net.hp = hyperparams_from_obj(doc.at("hyperparams"));
        } catch (const ConfigError& e) {
            throw ModelLoadError(std::string("bad hyperparams: ") + e.what());
        }

        const json& arch = doc.at("architecture");
        std::vector<std::size_t> trunk_sizes;
        for (const auto& v : arch.at("trunk_sizes"))
            trunk_sizes.push_back(v.get<std::size_t>());

        const json& weights = doc.at("weights");
        const json& trunk_w = weights.at("trunk");
        if (trunk_w.size() != trunk_sizes.size())
            throw ModelLoadError("trunk layer count mismatch");

        auto load_layer = [](const json& obj, std::size_t out,
                             std::size_t in) {
            DenseLayer layer(out, in);
            const json& w = obj.at("w");
            const json& b = obj.at("b");
            if (w.size() != out * in || b.size() != out)
                throw ModelLoadError("weight shape mismatch: expected " +
                                     std::to_string(out) + "x" +
                                     std::to_string(in));
            for (std::size_t i = 0; i < w.size(); ++i)
                layer.w.a[i] = parse_stored_double(w[i], "weight");
            for (std::size_t i = 0; i < b.size(); ++i)
                layer.b[i] = parse_stored_double(b[i], "bias");
            return layer;
        };

        std::size_t in = net.encoder.dim();
        for (std::size_t l = 0; l < trunk_sizes.size(); ++l) {
            net.trunk.push_back(load_layer(trunk_w[l], trunk_sizes[l], in));
            in = trunk_sizes[l];
        }

        const json& head_sizes = arch.at("head_sizes");
        const json& heads_w = weights.at("heads");
        for (const auto& task : net.schema.tasks) {
            const std::string& name = task.scale.task_name;
            if (!head_sizes.contains(name) || !heads_w.contains(name))
                throw ModelLoadError("missing head for task \"" + name + "\"");
            std::vector<std::size_t> sizes;
            for (const auto& v : head_sizes.at(name))
                sizes.push_back(v.get<std::size_t>());
            if (sizes.empty() || sizes.back() != task.scale.size())
                throw ModelLoadError("head output width mismatch for \"" +
                                     name + "\"");
            const json& stack_w = heads_w.at(name);
            if (stack_w.size() != sizes.size())
                throw ModelLoadError("head layer count mismatch for \"" +
                                     name + "\"");
            std::vector<DenseLayer> stack;
            std::size_t hin = in;
            for (std::size_t j = 0; j < sizes.size(); ++j) {
                stack.push_back(load_layer(stack_w[j], sizes[j], hin));
                hin = sizes[j];
            }
            net.heads.push_back(std::move(stack));
        }
        return net;
    } catch (const ModelLoadError&) {
        throw;
    } catch (const json::exception&) {
        throw ModelLoadError("malformed model file \"" + path + "\"");
    } catch (const Error& e) {
        throw ModelLoadError("invalid model file: " + std::string(e.what()));
    }
}

GradCheckReport gradient_check(MtlNetwork& net, const EncodedDataset& data,
                               std::size_t max_rows, double h,
                               double tolerance, std::size_t max_checked,
                               std::uint64_t seed) {
    if (data.d != net.input_dim())
        throw ValidationError("gradient check data dimension mismatch");
    const std::size_t tasks = net.schema.tasks.size();
    std::vector<char> active(tasks, 0);
    for (std::size_t t = 0; t < tasks; ++t)
        active[t] = net.loss_weight(t) > 0.0 ? 1 : 0;

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < data.n && rows.size() < max_rows; ++i) {
        for (std::size_t t = 0; t < tasks; ++t) {
            if (active[t] && data.label_present[t][i]) {
                rows.push_back(i);
                break;
            }
        }
    }
    if (rows.empty())
        throw ValidationError("no labeled rows for gradient check");
    const std::size_t bsz = rows.size();
    Mat x = gather_rows(data, rows, 0, bsz);

    auto loss_value = [&]() {
        Cache c;
        forward_batch(net, x, false, active, nullptr, {}, c);
        double total = 0.0;
        for (std::size_t t = 0; t < tasks; ++t) {
            if (!active[t]) continue;
            const double w = net.loss_weight(t);
            const auto& name = net.schema.tasks[t].scale.task_name;
            for (std::size_t r = 0; r < bsz; ++r) {
                const std::size_t g = rows[r];
                if (!data.label_present[t][g]) continue;
                const std::size_t y = data.label_index[t][g];
                total += w * class_weight(net.hp, name, y) *
                         -std::log(std::max(c.probs[t](r, y), kProbClamp));
            }
        }
        return total / static_cast<double>(bsz);
    };

    std::vector<LayerGrads> trunk_g;
    std::vector<std::vector<LayerGrads>> head_g(tasks);
    size_grads(net.trunk, trunk_g);
    for (std::size_t t = 0; t < tasks; ++t) size_grads(net.heads[t], head_g[t]);

    Cache c;
    forward_batch(net, x, false, active, nullptr, {}, c);
    std::vector<Mat> dlogits(tasks);
    for (std::size_t t = 0; t < tasks; ++t) {
        if (!active[t]) continue;
        const double w = net.loss_weight(t);
        const auto& name = net.schema.tasks[t].scale.task_name;
        const Mat& p = c.probs[t];
        Mat dl(p.rows, p.cols);
        for (std::size_t r = 0; r < bsz; ++r) {
            const std::size_t g = rows[r];
            if (!data.label_present[t][g]) continue;
            const std::size_t y = data.label_index[t][g];
            const double scale = w * class_weight(net.hp, name, y) /
                                 static_cast<double>(bsz);
            const double* pr = p.row(r);
            double* dr = dl.row(r);
            for (std::size_t j = 0; j < p.cols; ++j) dr[j] = scale * pr[j];
            dr[y] -= scale;
        }
        dlogits[t] = std::move(dl);
    }
    backward_batch(net, c, x, dlogits, trunk_g, head_g);

    std::vector<std::span<double>> params;
    std::vector<std::span<const double>> grads;
    collect_tensors(net, trunk_g, head_g, params, grads);
    return finite_diff_check(params, grads, loss_value, h, tolerance,
                             max_checked, seed);
}

}  // namespace comfort
