#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "comfort/baselines.hpp"
#include "comfort/encode.hpp"
#include "comfort/errors.hpp"
#include "comfort/rng.hpp"
#include "comfort/schema.hpp"
#include "comfort/synthetic.hpp"

using namespace comfort;

namespace {

// Hand-built encoded dataset: no CSV or encoder in the loop, so oracle
// arithmetic sees exactly these numbers.
EncodedDataset manual_encoded(const std::vector<std::vector<double>>& x,
                              const std::vector<int>& labels,
                              std::size_t classes) {
    EncodedDataset e;
    DatasetSchema s;
    FeatureSpec f;
    f.name = "x0";
    s.features = {f};
    ComfortScale scale;
    scale.task_name = "Y";
    for (std::size_t c = 0; c < classes; ++c) {
        scale.classes.push_back(
            {static_cast<int>(c), "c" + std::to_string(c)});
    }
    s.tasks = {TaskSpec{scale, 1.0}};
    e.schema = s;
    e.n = x.size();
    e.d = x.empty() ? 0 : x[0].size();
    for (const auto& row : x) e.x.insert(e.x.end(), row.begin(), row.end());
    e.label_index.resize(1);
    e.label_present.resize(1);
    for (int y : labels) {
        if (y < 0) {
            e.label_index[0].push_back(0);
            e.label_present[0].push_back(false);
        } else {
            e.label_index[0].push_back(static_cast<std::size_t>(y));
            e.label_present[0].push_back(true);
        }
    }
    return e;
}

// Brute-force KNN mirroring the documented tie rules: neighbor ties resolve
// to the lower record index, vote ties to the lower class index.
std::size_t knn_oracle(const std::vector<std::vector<double>>& train_x,
                       const std::vector<std::size_t>& train_y,
                       std::span<const double> q, std::size_t k,
                       std::size_t classes) {
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t i = 0; i < train_x.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) {
            const double d = q[j] - train_x[i][j];
            acc += d * d;
        }
        dist.push_back({acc, i});
    }
    std::sort(dist.begin(), dist.end());
    std::vector<std::size_t> votes(classes, 0);
    for (std::size_t i = 0; i < k; ++i) votes[train_y[dist[i].second]] += 1;
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c)
        if (votes[c] > votes[best]) best = c;
    return best;
}

}  // namespace

TEST_CASE("model kind names round trip") {
    const ModelKind kinds[] = {
        ModelKind::Mtl,          ModelKind::Knn,      ModelKind::DecisionTree,
        ModelKind::RandomForest, ModelKind::AdaBoost, ModelKind::LinearSvm,
        ModelKind::StlDnn,
    };
    for (ModelKind k : kinds) {
        CHECK(model_kind_from_name(model_kind_name(k)) == k);
        CHECK_FALSE(model_display_name(k).empty());
    }
    CHECK(model_kind_from_name("mtl") == ModelKind::Mtl);
    CHECK(model_kind_from_name("svm") == ModelKind::LinearSvm);
    CHECK(model_kind_from_name("dnn") == ModelKind::StlDnn);
    CHECK_THROWS_AS(model_kind_from_name("xgboost"), ConfigError);
}

TEST_CASE("make_baseline dispatches to the requested model") {
    BaselineParams p;
    const ModelKind kinds[] = {
        ModelKind::Knn,      ModelKind::DecisionTree, ModelKind::RandomForest,
        ModelKind::AdaBoost, ModelKind::LinearSvm,    ModelKind::StlDnn,
    };
    for (ModelKind k : kinds) {
        auto m = make_baseline(k, p);
        REQUIRE(m != nullptr);
        CHECK(m->kind() == k);
    }
    CHECK_THROWS_AS(make_baseline(ModelKind::Mtl, p), ConfigError);
}

TEST_CASE("baseline params JSON round trips and validates") {
    BaselineParams p;
    p.knn_k = 3;
    p.tree_max_depth = 7;
    p.forest_trees = 12;
    p.forest_bootstrap = false;
    p.boost_rounds = 9;
    p.svm_c = 2.5;
    p.dnn.epochs = 42;
    p.dnn.trunk_sizes = {5, 5};
    const std::string j = baseline_params_to_json(p);
    BaselineParams back = baseline_params_from_json(j);
    CHECK(back.knn_k == 3);
    CHECK(back.tree_max_depth == 7);
    CHECK(back.forest_trees == 12);
    CHECK(back.forest_bootstrap == false);
    CHECK(back.boost_rounds == 9);
    CHECK(back.svm_c == 2.5);
    CHECK(back.dnn.epochs == 42);
    CHECK(back.dnn.trunk_sizes == std::vector<std::size_t>{5, 5});
    CHECK(baseline_params_to_json(back) == j);

    CHECK_THROWS_AS(baseline_params_from_json("{\"knn_k\": 0}"), ConfigError);
    CHECK_THROWS_AS(baseline_params_from_json("{\"mystery\": 1}"),
                    ConfigError);
    BaselineParams bad;
    bad.forest_feature_fraction = 1.5;
    CHECK_THROWS_AS(validate_baseline_params(bad), ConfigError);
    bad = BaselineParams{};
    bad.svm_c = -1.0;
    CHECK_THROWS_AS(validate_baseline_params(bad), ConfigError);
    bad = BaselineParams{};
    bad.boost_rounds = 0;
    CHECK_THROWS_AS(validate_baseline_params(bad), ConfigError);
}

TEST_CASE("KNN matches exhaustive brute-force search including ties") {
    Rng rng(2024);
    const std::size_t n = 60;
    const std::size_t d = 4;
    const std::size_t classes = 3;
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(d);
        // A coarse grid forces plenty of exact distance ties.
        for (auto& v : row) v = static_cast<double>(rng.bounded(4));
        x.push_back(row);
        y.push_back(static_cast<int>(rng.bounded(classes)));
    }
    EncodedDataset train = manual_encoded(x, y, classes);
    std::vector<std::size_t> ty(y.begin(), y.end());

    for (std::size_t k : {1u, 3u, 5u}) {
        KnnModel model(k);
        model.fit(train, 0, 0);
        for (int trial = 0; trial < 40; ++trial) {
            std::vector<double> q(d);
            for (auto& v : q) v = static_cast<double>(rng.bounded(4));
            CHECK(model.predict_index(q) == knn_oracle(x, ty, q, k, classes));
        }
        // Training points themselves (distance zero, guaranteed tie churn).
        for (std::size_t i = 0; i < n; i += 7) {
            CHECK(model.predict_index(x[i]) ==
                  knn_oracle(x, ty, x[i], k, classes));
        }
    }
}

TEST_CASE("KNN ignores unlabeled rows and validates k") {
    std::vector<std::vector<double>> x = {{0}, {1}, {2}, {3}};
    EncodedDataset all = manual_encoded(x, {0, 0, 1, 1}, 2);
    EncodedDataset sparse = manual_encoded(x, {0, -1, -1, 1}, 2);
    KnnModel m(2);
    m.fit(sparse, 0, 0);
    // Only rows 0 and 3 are labeled; both neighbors always vote {0, 1} and
    // the tie breaks toward class 0.
    CHECK(m.predict_index(std::vector<double>{1.4}) == 0);

    KnnModel too_big(3);
    CHECK_THROWS_AS(too_big.fit(sparse, 0, 0), ValidationError);
    KnnModel fine(3);
    CHECK_NOTHROW(fine.fit(all, 0, 0));
}

TEST_CASE("decision tree separates XOR with depth two") {
    std::vector<std::vector<double>> x = {{0, 0}, {0, 1}, {1, 0}, {1, 1},
                                          {0, 0}, {0, 1}, {1, 0}, {1, 1}};
    std::vector<int> y = {0, 1, 1, 0, 0, 1, 1, 0};
    EncodedDataset data = manual_encoded(x, y, 2);
    DecisionTreeModel tree(2, 1);
    tree.fit(data, 0, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(tree.predict_index(x[i]) == static_cast<std::size_t>(y[i]));
    }
    // Depth one cannot express XOR: at least one training row must miss.
    DecisionTreeModel stump(1, 1);
    stump.fit(data, 0, 0);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        wrong += stump.predict_index(x[i]) != static_cast<std::size_t>(y[i]);
    }
    CHECK(wrong > 0);
}

TEST_CASE("tree split ties break toward the lower feature index") {
    // Both columns are identical, so every split is equally good.
    std::vector<std::vector<double>> x = {{0, 0}, {0, 0}, {1, 1}, {1, 1}};
    std::vector<int> y = {0, 0, 1, 1};
    EncodedDataset data = manual_encoded(x, y, 2);
    std::vector<std::size_t> rows = {0, 1, 2, 3};
    std::vector<double> w(4, 1.0);
    Tree t = fit_tree(data, 0, rows, w, 3, 1, 1.0, nullptr);
    REQUIRE_FALSE(t.nodes.empty());
    REQUIRE_FALSE(t.nodes[0].leaf);
    CHECK(t.nodes[0].feature == 0);
    CHECK(t.nodes[0].threshold == doctest::Approx(0.5));  // midpoint
}

TEST_CASE("max_depth zero and pure nodes produce leaves") {
    std::vector<std::vector<double>> x = {{0}, {1}, {2}, {3}};
    EncodedDataset data = manual_encoded(x, {0, 0, 0, 1}, 2);
    std::vector<std::size_t> rows = {0, 1, 2, 3};
    std::vector<double> w(4, 1.0);
    Tree stumpless = fit_tree(data, 0, rows, w, 0, 1, 1.0, nullptr);
    REQUIRE(stumpless.nodes.size() == 1);
    CHECK(stumpless.nodes[0].leaf);
    CHECK(stumpless.nodes[0].cls == 0);  // majority class

    EncodedDataset pure = manual_encoded(x, {1, 1, 1, 1}, 2);
    Tree t = fit_tree(pure, 0, rows, w, 5, 1, 1.0, nullptr);
    REQUIRE(t.nodes.size() == 1);
    CHECK(t.nodes[0].leaf);
    CHECK(t.nodes[0].cls == 1);
}

TEST_CASE("min_leaf blocks splits that would strand small leaves") {
    std::vector<std::vector<double>> x = {{0}, {1}, {2}, {3}};
    EncodedDataset data = manual_encoded(x, {0, 0, 1, 1}, 2);
    std::vector<std::size_t> rows = {0, 1, 2, 3};
    std::vector<double> w(4, 1.0);
    Tree free_split = fit_tree(data, 0, rows, w, 3, 1, 1.0, nullptr);
    CHECK_FALSE(free_split.nodes[0].leaf);
    Tree blocked = fit_tree(data, 0, rows, w, 3, 3, 1.0, nullptr);
    CHECK(blocked.nodes[0].leaf);
}

TEST_CASE("a one-tree forest without bagging equals the plain tree") {
    Dataset raw = generate_synthetic(150, 40, default_synth_spec());
    Dataset filled = impute(raw);
    Encoder enc = fit_encoder(filled);
    EncodedDataset data = encode(enc, filled);

    RandomForestModel forest(1, 6, 1, 1.0, /*bootstrap=*/false);
    DecisionTreeModel tree(6, 1);
    forest.fit(data, 0, 123);
    tree.fit(data, 0, 123);
    for (std::size_t i = 0; i < data.n; ++i) {
        std::span<const double> row(data.row(i), data.d);
        CHECK(forest.predict_index(row) == tree.predict_index(row));
    }
}

TEST_CASE("random forest fits are deterministic in the seed") {
    Dataset raw = generate_synthetic(120, 41, default_synth_spec());
    Dataset filled = impute(raw);
    EncodedDataset data = encode(fit_encoder(filled), filled);
    RandomForestModel a(10, 5, 1, 0.5, true);
    RandomForestModel b(10, 5, 1, 0.5, true);
    a.fit(data, 1, 77);
    b.fit(data, 1, 77);
    for (std::size_t i = 0; i < data.n; ++i) {
        std::span<const double> row(data.row(i), data.d);
        CHECK(a.predict_index(row) == b.predict_index(row));
    }
}

TEST_CASE("adaboost stops after one round on stump-separable data") {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 10; ++i) {
        x.push_back({static_cast<double>(i)});
        y.push_back(i < 5 ? 0 : 1);
    }
    EncodedDataset data = manual_encoded(x, y, 2);
    AdaBoostModel boost(25);
    boost.fit(data, 0, 0);
    CHECK(boost.rounds().size() == 1);  // zero training error ends boosting
    CHECK(boost.rounds()[0].error == doctest::Approx(0.0));
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(boost.predict_index(x[i]) == static_cast<std::size_t>(y[i]));
    }
}

TEST_CASE("adaboost beats a single stump on staged data") {
    // Three bands: 0s, then 1s, then 0s again. One stump cannot get them
    // all; boosting stacks stumps and should strictly improve.
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 30; ++i) {
        x.push_back({static_cast<double>(i)});
        y.push_back(i < 10 ? 0 : (i < 20 ? 1 : 0));
    }
    EncodedDataset data = manual_encoded(x, y, 2);
    auto accuracy = [&](const SingleTaskModel& m) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < x.size(); ++i)
            hits += m.predict_index(x[i]) == static_cast<std::size_t>(y[i]);
        return static_cast<double>(hits) / static_cast<double>(x.size());
    };
    DecisionTreeModel stump(1, 1);
    stump.fit(data, 0, 0);
    AdaBoostModel boost(30);
    boost.fit(data, 0, 0);
    for (const auto& r : boost.rounds()) {
        CHECK(r.alpha > 0.0);
        CHECK(r.error < 0.5);
    }
    CHECK(accuracy(boost) > accuracy(stump));
}

TEST_CASE("linear SVM separates a linear problem") {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    Rng rng(55);
    while (x.size() < 40) {
        const double a = rng.uniform(-1.0, 1.0);
        const double b = rng.uniform(-1.0, 1.0);
        if (std::abs(a + b) < 0.3) continue;  // keep a real margin
        x.push_back({a, b});
        y.push_back(a + b > 0 ? 1 : 0);
    }
    EncodedDataset data = manual_encoded(x, y, 2);
    LinearSvmModel svm(1.0, 400, 0.01, 0.01);
    svm.fit(data, 0, 0);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        hits += svm.predict_index(x[i]) == static_cast<std::size_t>(y[i]);
    CHECK(static_cast<double>(hits) / static_cast<double>(x.size()) >= 0.95);
}

TEST_CASE("SVM predictions are invariant to power-of-two input scaling") {
    // Doubling the inputs while dividing C by four and quadrupling the bias
    // step keeps every update bit-exact: the weight vector halves, the bias
    // trajectory is unchanged, and power-of-two scalings are exact in
    // binary floating point.
    Rng rng(66);
    std::vector<std::vector<double>> x, x2;
    std::vector<int> y;
    for (int i = 0; i < 50; ++i) {
        std::vector<double> row = {rng.uniform(-2.0, 2.0),
                                   rng.uniform(-2.0, 2.0),
                                   rng.uniform(-2.0, 2.0)};
        std::vector<double> twice = {2 * row[0], 2 * row[1], 2 * row[2]};
        x.push_back(row);
        x2.push_back(twice);
        y.push_back(static_cast<int>(rng.bounded(3)));
    }
    EncodedDataset base = manual_encoded(x, y, 3);
    EncodedDataset scaled = manual_encoded(x2, y, 3);
    LinearSvmModel a(1.0, 60, 0.005, 0.005);
    LinearSvmModel b(0.25, 60, 0.005, 0.02);
    a.fit(base, 0, 0);
    b.fit(scaled, 0, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(a.predict_index(x[i]) == b.predict_index(x2[i]));
    }
}

TEST_CASE("the single-task DNN drops unlabeled rows at fit time") {
    Dataset raw = generate_synthetic(140, 50, default_synth_spec());
    Dataset filled = impute(raw);
    Encoder enc = fit_encoder(filled);
    EncodedDataset data = encode(enc, filled);

    // Blank out TPV on half the rows, keep a pruned copy with those rows
    // removed entirely: the filter must make both fits identical.
    EncodedDataset holes = data;
    Dataset pruned_raw;
    pruned_raw.schema = filled.schema;
    for (std::size_t i = 0; i < data.n; ++i) {
        if (i % 2 == 0) {
            holes.label_present[1][i] = false;
        } else {
            pruned_raw.records.push_back(filled.records[i]);
        }
    }
    EncodedDataset pruned = encode(enc, pruned_raw);

    Hyperparams hp;
    hp.trunk_sizes = {8};
    hp.epochs = 6;
    hp.dropout_rate = 0.0;
    StlDnnModel with_holes(hp);
    StlDnnModel dense(hp);
    with_holes.fit(holes, 1, 31);
    dense.fit(pruned, 1, 31);
    std::vector<std::size_t> pa, pb;
    with_holes.predict_batch(data, pa);
    dense.predict_batch(data, pb);
    CHECK(pa == pb);
}

TEST_CASE("stl-dnn exposes a single-head network of the shared shape") {
    Dataset raw = generate_synthetic(90, 51, default_synth_spec());
    Dataset filled = impute(raw);
    EncodedDataset data = encode(fit_encoder(filled), filled);
    Hyperparams hp;
    hp.trunk_sizes = {12, 6};
    hp.epochs = 3;
    hp.dropout_rate = 0.0;
    StlDnnModel model(hp);
    model.fit(data, 2, 9);
    const MtlNetwork& net = model.network();
    REQUIRE(net.trunk.size() == 2);
    CHECK(net.trunk[0].fan_out() == 12);
    REQUIRE(net.heads.size() == 1);
    CHECK(net.heads[0].back().fan_out() == 6);  // TCV classes
}
