#include "comfort/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include <json.hpp>

namespace comfort {

namespace {

// Labeled-row view of one task: global row ids plus class indices.
void labeled_rows(const EncodedDataset& data, std::size_t task,
                  std::vector<std::size_t>& rows,
                  std::vector<std::size_t>& y) {
    if (task >= data.label_index.size())
        throw ValidationError("task index out of range");
    rows.clear();
    y.clear();
    for (std::size_t i = 0; i < data.n; ++i) {
        if (!data.label_present[task][i]) continue;
        rows.push_back(i);
        y.push_back(data.label_index[task][i]);
    }
    if (rows.empty())
        throw ValidationError("no labeled rows for task " +
                              data.schema.tasks[task].scale.task_name);
}

std::size_t majority_class(const std::vector<double>& weighted,
                           const std::vector<std::size_t>& plain) {
    double total = 0.0;
    for (double w : weighted) total += w;
    std::size_t best = 0;
    if (total > 0.0) {
        for (std::size_t c = 1; c < weighted.size(); ++c)
            if (weighted[c] > weighted[best]) best = c;
    } else {
        for (std::size_t c = 1; c < plain.size(); ++c)
            if (plain[c] > plain[best]) best = c;
    }
    return best;
}

struct TreeBuilder {
    const EncodedDataset& data;
    std::size_t task;
    std::size_t max_depth;
    std::size_t min_leaf;
    double feature_fraction;
    Rng* rng;
    std::size_t classes;
    Tree tree;

    std::vector<std::size_t> candidate_features() {
        const std::size_t d = data.d;
        if (!rng || feature_fraction >= 1.0) {
            std::vector<std::size_t> all(d);
            std::iota(all.begin(), all.end(), 0);
            return all;
        }
        std::size_t m = static_cast<std::size_t>(
            std::ceil(feature_fraction * static_cast<double>(d)));
        m = std::max<std::size_t>(1, std::min(m, d));
        // Partial Fisher-Yates draw without replacement, then sorted so the
        // lower-feature-index tie rule applies within the subset.
        std::vector<std::size_t> pool(d);
        std::iota(pool.begin(), pool.end(), 0);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j =
                i + static_cast<std::size_t>(rng->bounded(d - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(m);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    std::size_t build(const std::vector<std::size_t>& rows,
                      const std::vector<double>& weights, std::size_t depth) {
        std::vector<double> wc(classes, 0.0);
        std::vector<std::size_t> nc(classes, 0);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const std::size_t c = data.label_index[task][rows[i]];
            wc[c] += weights[i];
            nc[c] += 1;
        }
        const std::size_t me = tree.nodes.size();
        tree.nodes.push_back(TreeNode{});
        tree.nodes[me].cls = majority_class(wc, nc);

        bool pure = true;
        std::size_t first = data.label_index[task][rows[0]];
        for (std::size_t r : rows)
            pure = pure && data.label_index[task][r] == first;
        if (pure || depth >= max_depth || rows.size() < 2 * min_leaf)
            return me;

        // Best split: lowest weighted Gini; ties go to the lower feature
        // index, then the lower threshold (the ascending scan keeps the
        // first of any exact tie).
        double best_imp = 0.0;
        bool found = false;
        std::size_t best_f = 0;
        double best_t = 0.0;
        std::vector<std::pair<double, std::size_t>> vals;
        std::vector<double> left_w(classes);
        double total_w = 0.0;
        for (double w : wc) total_w += w;

        for (std::size_t f : candidate_features()) {
            vals.clear();
            for (std::size_t i = 0; i < rows.size(); ++i)
                vals.emplace_back(data.row(rows[i])[f], i);
            std::sort(vals.begin(), vals.end(),
                      [](const auto& a, const auto& b) {
                          return a.first < b.first;
                      });
            std::fill(left_w.begin(), left_w.end(), 0.0);
            double wl = 0.0;
            double sql = 0.0;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                const std::size_t local = vals[i].second;
                const std::size_t c = data.label_index[task][rows[local]];
                const double w = weights[local];
                sql += w * (2.0 * left_w[c] + w);  // (a+w)^2 - a^2
                left_w[c] += w;
                wl += w;
                if (vals[i].first == vals[i + 1].first) continue;
                const std::size_t nleft = i + 1;
                const std::size_t nright = vals.size() - nleft;
                if (nleft < min_leaf || nright < min_leaf) continue;
                const double wr = total_w - wl;
                double sqr = 0.0;
                for (std::size_t c2 = 0; c2 < classes; ++c2) {
                    const double rw = wc[c2] - left_w[c2];
                    sqr += rw * rw;
                }
                const double impl = wl > 0.0 ? wl - sql / wl : 0.0;
                const double impr = wr > 0.0 ? wr - sqr / wr : 0.0;
                const double imp = impl + impr;
                if (!found || imp < best_imp) {
                    found = true;
                    best_imp = imp;
                    best_f = f;
                    best_t = 0.5 * (vals[i].first + vals[i + 1].first);
                }
            }
        }
        if (!found) return me;

        std::vector<std::size_t> lrows, rrows;
        std::vector<double> lw, rw;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (data.row(rows[i])[best_f] <= best_t) {
                lrows.push_back(rows[i]);
                lw.push_back(weights[i]);
            } else {
                rrows.push_back(rows[i]);
                rw.push_back(weights[i]);
            }
        }
        const std::size_t left = build(lrows, lw, depth + 1);
        const std::size_t right = build(rrows, rw, depth + 1);
        tree.nodes[me].leaf = false;
        tree.nodes[me].feature = best_f;
        tree.nodes[me].threshold = best_t;
        tree.nodes[me].left = left;
        tree.nodes[me].right = right;
        return me;
    }
};

}  // namespace

std::size_t Tree::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].leaf)
        i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left
                                                      : nodes[i].right;
    return nodes[i].cls;
}

Tree fit_tree(const EncodedDataset& data, std::size_t task,
              const std::vector<std::size_t>& rows,
              const std::vector<double>& weights, std::size_t max_depth,
              std::size_t min_leaf, double feature_fraction, Rng* rng) {
    if (rows.empty()) throw ValidationError("cannot fit a tree on no rows");
    if (rows.size() != weights.size())
        throw ValidationError("tree rows/weights length mismatch");
    if (feature_fraction <= 0.0 || feature_fraction > 1.0)
        throw ConfigError("feature_fraction must be in (0, 1]");
    TreeBuilder b{data,
                  task,
                  max_depth,
                  std::max<std::size_t>(1, min_leaf),
                  feature_fraction,
                  rng,
                  data.schema.tasks[task].scale.size(),
                  {}};
    b.build(rows, weights, 0);
    return std::move(b.tree);
}

std::string model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Mtl: return "mtl";
        case ModelKind::Knn: return "knn";
        case ModelKind::DecisionTree: return "decision_tree";
        case ModelKind::RandomForest: return "random_forest";
        case ModelKind::AdaBoost: return "adaboost";
        case ModelKind::LinearSvm: return "svm";
        case ModelKind::StlDnn: return "dnn";
    }
    throw ConfigError("unknown model kind");
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "mtl") return ModelKind::Mtl;
    if (name == "knn") return ModelKind::Knn;
    if (name == "decision_tree") return ModelKind::DecisionTree;
    if (name == "random_forest") return ModelKind::RandomForest;
    if (name == "adaboost") return ModelKind::AdaBoost;
    if (name == "svm") return ModelKind::LinearSvm;
    if (name == "dnn") return ModelKind::StlDnn;
    throw ConfigError("unknown model \"" + name + "\"");
}

std::string model_display_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Mtl: return "DeepComfort (MTL)";
        case ModelKind::Knn: return "KNN";
        case ModelKind::DecisionTree: return "Decision Tree";
        case ModelKind::RandomForest: return "Random Forest";
        case ModelKind::AdaBoost: return "AdaBoost";
        case ModelKind::LinearSvm: return "SVM";
        case ModelKind::StlDnn: return "DNN";
    }
    throw ConfigError("unknown model kind");
}

void validate_baseline_params(const BaselineParams& p) {
    if (p.knn_k < 1) throw ConfigError("knn_k must be at least 1");
    if (p.tree_min_leaf < 1)
        throw ConfigError("tree_min_leaf must be at least 1");
    if (p.forest_trees < 1)
        throw ConfigError("forest_trees must be at least 1");
    if (p.forest_feature_fraction <= 0.0 || p.forest_feature_fraction > 1.0)
        throw ConfigError("feature_fraction must be in (0, 1]");
    if (p.boost_rounds < 1)
        throw ConfigError("boost_rounds must be at least 1");
    if (!(std::isfinite(p.svm_c) && p.svm_c > 0.0))
        throw ConfigError("svm_c must be positive");
    if (p.svm_epochs < 1) throw ConfigError("svm_epochs must be at least 1");
    if (!(std::isfinite(p.svm_step) && p.svm_step > 0.0))
        throw ConfigError("svm_step must be positive");
    if (!(std::isfinite(p.svm_bias_step) && p.svm_bias_step > 0.0))
        throw ConfigError("svm_bias_step must be positive");
    validate_hyperparams(p.dnn);
}

std::string baseline_params_to_json(const BaselineParams& p) {
    nlohmann::json j;
    j["knn_k"] = p.knn_k;
    j["tree_max_depth"] = p.tree_max_depth;
    j["tree_min_leaf"] = p.tree_min_leaf;
    j["forest_trees"] = p.forest_trees;
    j["forest_feature_fraction"] = p.forest_feature_fraction;
    j["forest_bootstrap"] = p.forest_bootstrap;
    j["boost_rounds"] = p.boost_rounds;
    j["svm_c"] = p.svm_c;
    j["svm_epochs"] = p.svm_epochs;
    j["svm_step"] = p.svm_step;
    j["svm_bias_step"] = p.svm_bias_step;
    j["dnn"] = nlohmann::json::parse(hyperparams_to_json(p.dnn));
    return j.dump(2);
}

BaselineParams baseline_params_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (!j.is_object())
            throw ConfigError("baseline params must be an object");
        BaselineParams p;
        for (const auto& [key, value] : j.items()) {
            if (key == "knn_k") p.knn_k = value.get<std::size_t>();
            else if (key == "tree_max_depth")
                p.tree_max_depth = value.get<std::size_t>();
            else if (key == "tree_min_leaf")
                p.tree_min_leaf = value.get<std::size_t>();
            else if (key == "forest_trees")
                p.forest_trees = value.get<std::size_t>();
            else if (key == "forest_feature_fraction")
                p.forest_feature_fraction = value.get<double>();
            else if (key == "forest_bootstrap")
                p.forest_bootstrap = value.get<bool>();
            else if (key == "boost_rounds")
                p.boost_rounds = value.get<std::size_t>();
            else if (key == "svm_c") p.svm_c = value.get<double>();
            else if (key == "svm_epochs")
                p.svm_epochs = value.get<std::size_t>();
            else if (key == "svm_step") p.svm_step = value.get<double>();
            else if (key == "svm_bias_step")
                p.svm_bias_step = value.get<double>();
            else if (key == "dnn")
                p.dnn = hyperparams_from_json(value.dump());
            else
                throw ConfigError("unknown baseline field \"" + key + "\"");
        }
        validate_baseline_params(p);
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid baseline params json: ") +
                          e.what());
    }
}

void SingleTaskModel::predict_batch(const EncodedDataset& data,
                                    std::vector<std::size_t>& out) const {
    out.resize(data.n);
    for (std::size_t i = 0; i < data.n; ++i)
        out[i] = predict_index(std::span<const double>(data.row(i), data.d));
}

void KnnModel::fit(const EncodedDataset& train, std::size_t task,
                   std::uint64_t seed) {
    (void)seed;
    std::vector<std::size_t> rows;
    labeled_rows(train, task, rows, y_);
    if (k_ < 1) throw ConfigError("knn_k must be at least 1");
    if (k_ > rows.size())
        throw ValidationError("knn_k exceeds the labeled training rows");
    d_ = train.d;
    classes_ = train.schema.tasks[task].scale.size();
    x_.resize(rows.size() * d_);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::memcpy(x_.data() + i * d_, train.row(rows[i]),
                    d_ * sizeof(double));
}

std::size_t KnnModel::predict_index(std::span<const double> x) const {
    if (x.size() != d_) throw ValidationError("knn input size mismatch");
    const std::size_t n = y_.size();
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = x_.data() + i * d_;
        double acc = 0.0;
        for (std::size_t j = 0; j < d_; ++j) {
            const double diff = x[j] - row[j];
            acc += diff * diff;
        }
        dist[i] = {acc, i};
    }
    // Squared distance preserves ordering; ties resolve to the lower record
    // index through the pair comparison.
    std::partial_sort(dist.begin(), dist.begin() + k_, dist.end());
    std::vector<std::size_t> votes(classes_, 0);
    for (std::size_t i = 0; i < k_; ++i) votes[y_[dist[i].second]] += 1;
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes_; ++c)
        if (votes[c] > votes[best]) best = c;
    return best;
}

void DecisionTreeModel::fit(const EncodedDataset& train, std::size_t task,
                            std::uint64_t seed) {
    (void)seed;
    std::vector<std::size_t> rows, y;
    labeled_rows(train, task, rows, y);
    std::vector<double> weights(rows.size(), 1.0);
    tree_ = fit_tree(train, task, rows, weights, max_depth_, min_leaf_, 1.0,
                     nullptr);
}

std::size_t DecisionTreeModel::predict_index(std::span<const double> x) const {
    return tree_.predict(x);
}

RandomForestModel::RandomForestModel(std::size_t n_trees,
                                     std::size_t max_depth,
                                     std::size_t min_leaf,
                                     double feature_fraction, bool bootstrap)
    : n_trees_(n_trees),
      max_depth_(max_depth),
      min_leaf_(min_leaf),
      feature_fraction_(feature_fraction),
      bootstrap_(bootstrap) {}

void RandomForestModel::fit(const EncodedDataset& train, std::size_t task,
                            std::uint64_t seed) {
    if (feature_fraction_ <= 0.0 || feature_fraction_ > 1.0)
        throw ConfigError("feature_fraction must be in (0, 1]");
    std::vector<std::size_t> rows, y;
    labeled_rows(train, task, rows, y);
    classes_ = train.schema.tasks[task].scale.size();
    trees_.clear();
    for (std::size_t t = 0; t < n_trees_; ++t) {
        Rng rng(derive_seed(seed, "forest/tree", t));
        std::vector<std::size_t> sample;
        if (bootstrap_) {
            sample.reserve(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i)
                sample.push_back(
                    rows[static_cast<std::size_t>(rng.bounded(rows.size()))]);
        } else {
            sample = rows;
        }
        std::vector<double> weights(sample.size(), 1.0);
        trees_.push_back(fit_tree(train, task, sample, weights, max_depth_,
                                  min_leaf_, feature_fraction_, &rng));
    }
}

std::size_t RandomForestModel::predict_index(std::span<const double> x) const {
    std::vector<std::size_t> votes(classes_, 0);
    for (const auto& t : trees_) votes[t.predict(x)] += 1;
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes_; ++c)
        if (votes[c] > votes[best]) best = c;
    return best;
}

void AdaBoostModel::fit(const EncodedDataset& train, std::size_t task,
                        std::uint64_t seed) {
    (void)seed;
    std::vector<std::size_t> rows, y;
    labeled_rows(train, task, rows, y);
    classes_ = train.schema.tasks[task].scale.size();
    const std::size_t n = rows.size();
    std::vector<std::size_t> counts(classes_, 0);
    for (std::size_t c : y) counts[c] += 1;
    fallback_ = 0;
    for (std::size_t c = 1; c < classes_; ++c)
        if (counts[c] > counts[fallback_]) fallback_ = c;

    fitted_.clear();
    const double k = static_cast<double>(classes_);
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::vector<char> wrong(n, 0);
    for (std::size_t round = 0; round < rounds_; ++round) {
        Tree stump = fit_tree(train, task, rows, w, 1, 1, 1.0, nullptr);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            wrong[i] = stump.predict(std::span<const double>(
                           train.row(rows[i]), train.d)) != y[i];
            if (wrong[i]) err += w[i];
        }
        if (err >= 1.0 - 1.0 / k) break;  // no better than chance
        if (err <= 0.0) {
            const double eps = 1e-10;
            fitted_.push_back(
                {std::move(stump),
                 std::log((1.0 - eps) / eps) + std::log(k - 1.0), 0.0});
            break;
        }
        const double alpha =
            std::log((1.0 - err) / err) + std::log(k - 1.0);
        fitted_.push_back({std::move(stump), alpha, err});
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (wrong[i]) w[i] *= std::exp(alpha);
            sum += w[i];
        }
        for (double& wi : w) wi /= sum;
    }
}

std::size_t AdaBoostModel::predict_index(std::span<const double> x) const {
    if (fitted_.empty()) return fallback_;
    std::vector<double> score(classes_, 0.0);
    for (const auto& r : fitted_) score[r.stump.predict(x)] += r.alpha;
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes_; ++c)
        if (score[c] > score[best]) best = c;
    return best;
}

LinearSvmModel::LinearSvmModel(double c, std::size_t epochs, double step,
                               double bias_step)
    : c_(c), epochs_(epochs), step_(step), bias_step_(bias_step) {}

void LinearSvmModel::fit(const EncodedDataset& train, std::size_t task,
                         std::uint64_t seed) {
    (void)seed;
    if (!(c_ > 0.0)) throw ConfigError("svm_c must be positive");
    std::vector<std::size_t> rows;
    std::vector<std::size_t> y;
    labeled_rows(train, task, rows, y);
    d_ = train.d;
    classes_ = train.schema.tasks[task].scale.size();
    w_.assign(classes_ * d_, 0.0);
    b_.assign(classes_, 0.0);

    std::vector<double> acc(d_);
    for (std::size_t epoch = 0; epoch < epochs_; ++epoch) {
        for (std::size_t c = 0; c < classes_; ++c) {
            double* w = w_.data() + c * d_;
            std::fill(acc.begin(), acc.end(), 0.0);
            double accb = 0.0;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const double* x = train.row(rows[i]);
                const double sign = y[i] == c ? 1.0 : -1.0;
                double dot = b_[c];
                for (std::size_t j = 0; j < d_; ++j) dot += w[j] * x[j];
                if (sign * dot < 1.0) {
                    for (std::size_t j = 0; j < d_; ++j)
                        acc[j] += sign * x[j];
                    accb += sign;
                }
            }
            for (std::size_t j = 0; j < d_; ++j)
                w[j] -= step_ * (w[j] - c_ * acc[j]);
            b_[c] += bias_step_ * (c_ * accb);
        }
        for (double v : w_)
            if (!std::isfinite(v))
                throw DivergenceError("svm weights diverged", epoch + 1);
        for (double v : b_)
            if (!std::isfinite(v))
                throw DivergenceError("svm bias diverged", epoch + 1);
    }
}

std::size_t LinearSvmModel::predict_index(std::span<const double> x) const {
    if (x.size() != d_) throw ValidationError("svm input size mismatch");
    std::size_t best = 0;
    double best_margin = 0.0;
    for (std::size_t c = 0; c < classes_; ++c) {
        const double* w = w_.data() + c * d_;
        double margin = b_[c];
        for (std::size_t j = 0; j < d_; ++j) margin += w[j] * x[j];
        if (c == 0 || margin > best_margin) {
            best = c;
            best_margin = margin;
        }
    }
    return best;
}

void StlDnnModel::fit(const EncodedDataset& train, std::size_t task,
                      std::uint64_t seed) {
    if (task >= train.schema.tasks.size())
        throw ValidationError("task index out of range");
    const std::string& name = train.schema.tasks[task].scale.task_name;

    DatasetSchema sub;
    sub.features = train.schema.features;
    sub.tasks = {train.schema.tasks[task]};

    Hyperparams hp = base_;
    hp.seed = seed;
    // Keep only this task's per-task settings so the parameter streams match
    // a multi-task run that zeroes out the other tasks.
    auto filter = [&name](auto& m) {
        for (auto it = m.begin(); it != m.end();)
            it = it->first == name ? std::next(it) : m.erase(it);
    };
    filter(hp.head_hidden_sizes);
    filter(hp.loss_weights);
    filter(hp.class_weights);

    EncodedDataset single;
    single.schema = sub;
    single.encoder = train.encoder;
    single.n = train.n;
    single.d = train.d;
    single.x = train.x;
    single.label_index = {train.label_index[task]};
    single.label_present = {train.label_present[task]};

    net_ = init_network(sub, train.encoder, hp);
    comfort::train(net_, single);
}

std::size_t StlDnnModel::predict_index(std::span<const double> x) const {
    auto probs = forward_multi(net_, x, false);
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs[0].size(); ++j)
        if (probs[0][j] > probs[0][best]) best = j;
    return best;
}

void StlDnnModel::predict_batch(const EncodedDataset& data,
                                std::vector<std::size_t>& out) const {
    out = predict_indices(net_, data)[0];
}

std::unique_ptr<SingleTaskModel> make_baseline(ModelKind kind,
                                               const BaselineParams& p) {
    validate_baseline_params(p);
    switch (kind) {
        case ModelKind::Knn:
            return std::make_unique<KnnModel>(p.knn_k);
        case ModelKind::DecisionTree:
            return std::make_unique<DecisionTreeModel>(p.tree_max_depth,
                                                       p.tree_min_leaf);
        case ModelKind::RandomForest:
            return std::make_unique<RandomForestModel>(
                p.forest_trees, p.tree_max_depth, p.tree_min_leaf,
                p.forest_feature_fraction, p.forest_bootstrap);
        case ModelKind::AdaBoost:
            return std::make_unique<AdaBoostModel>(p.boost_rounds);
        case ModelKind::LinearSvm:
            return std::make_unique<LinearSvmModel>(p.svm_c, p.svm_epochs,
                                                    p.svm_step,
                                                    p.svm_bias_step);
        case ModelKind::StlDnn:
            return std::make_unique<StlDnnModel>(p.dnn);
        case ModelKind::Mtl:
            throw ConfigError("mtl is not a single-task baseline");
    }
    throw ConfigError("unknown model kind");
}

}  // namespace comfort
