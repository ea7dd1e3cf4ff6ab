#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "comfort/encode.hpp"
#include "comfort/errors.hpp"
#include "comfort/mtl.hpp"
#include "comfort/schema.hpp"
#include "comfort/serve.hpp"
#include "comfort/synthetic.hpp"

using namespace comfort;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    fs::path p = fs::temp_directory_path() /
                 ("comfort_serve_" + tag + "_" + std::to_string(counter++));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct Fixture {
    fs::path model_path;
    Dataset data;
    LoadedModel model;
};

// Trains a small model once and shares it across test cases; handlers take
// the model by const reference, so reuse is safe.
const Fixture& fixture() {
    static Fixture fx = [] {
        Fixture f;
        const DatasetSchema schema = default_schema();
        f.data = generate_synthetic(60, 11, default_synth_spec(schema));
        const ImputeStats stats = compute_impute_stats(f.data);
        const Dataset imputed = impute_with(f.data, stats);
        const Encoder encoder = fit_encoder(imputed);
        const EncodedDataset encoded = encode(encoder, imputed);
        Hyperparams hp;
        hp.trunk_sizes = {8};
        hp.epochs = 3;
        hp.dropout_rate = 0.0;
        hp.seed = 2;
        MtlNetwork net = init_network(schema, encoder, hp, stats);
        train(net, encoded);
        const fs::path dir = fresh_dir("model");
        f.model_path = dir / "model.json";
        save_model(net, f.model_path.string());
        f.model = load_model_with_checksum(f.model_path.string());
        return f;
    }();
    return fx;
}

// A fully populated request body built from a generated survey row.
json valid_features() {
    const Fixture& fx = fixture();
    json features = json::object();
    for (const auto& f : fx.model.net.schema.features) {
        const auto it = fx.data.records.front().values.find(f.name);
        REQUIRE(it != fx.data.records.front().values.end());
        if (std::holds_alternative<double>(it->second))
            features[f.name] = std::get<double>(it->second);
        else if (std::holds_alternative<std::string>(it->second))
            features[f.name] = std::get<std::string>(it->second);
    }
    return features;
}

bool violations_mention(const json& body, const std::string& field,
                        const std::string& fragment) {
    if (!body.contains("violations")) return false;
    for (const auto& v : body.at("violations")) {
        if (v.at("field") == field &&
            v.at("message").get<std::string>().find(fragment) !=
                std::string::npos)
            return true;
    }
    return false;
}

}  // namespace

TEST_CASE("health echoes the checksum stored in the model file") {
    const Fixture& fx = fixture();
    const HttpReply reply = handle_health(fx.model);
    CHECK(reply.status == 200);
    const json body = json::parse(reply.body);
    CHECK(body.at("status") == "ok");
    const json file = json::parse(slurp(fx.model_path));
    CHECK(body.at("model_checksum") == file.at("checksum"));
    const std::string sum = body.at("model_checksum");
    CHECK(sum.size() == 64);
    CHECK(sum.find_first_not_of("0123456789abcdef") == std::string::npos);
}

TEST_CASE("predict answers a valid request with full distributions") {
    const Fixture& fx = fixture();
    const json request = json{{"features", valid_features()}};
    const HttpReply reply = handle_predict(fx.model, request.dump());
    REQUIRE(reply.status == 200);
    const json body = json::parse(reply.body);
    const json& tasks = body.at("tasks");

    const std::vector<std::pair<std::string, std::size_t>> expected = {
        {"TSV", 7}, {"TPV", 5}, {"TCV", 6}};
    for (const auto& [name, classes] : expected) {
        REQUIRE(tasks.contains(name));
        const json& t = tasks.at(name);
        REQUIRE(t.at("probs").size() == classes);
        double sum = 0.0;
        for (const auto& p : t.at("probs")) {
            CHECK(p.get<double>() >= 0.0);
            sum += p.get<double>();
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        const int value = t.at("value").get<int>();
        const TaskSpec* spec = fx.model.net.schema.find_task(name);
        REQUIRE(spec != nullptr);
        CHECK(spec->scale.contains(value));
        CHECK(t.at("label").get<std::string>().size() > 0);
        // The reported value is the argmax class.
        std::size_t argmax = 0;
        for (std::size_t i = 1; i < classes; ++i)
            if (t.at("probs").at(i).get<double>() >
                t.at("probs").at(argmax).get<double>())
                argmax = i;
        CHECK(value == index_class(spec->scale, argmax));
    }

    // The handler is stateless: repeating the call changes nothing.
    const HttpReply again = handle_predict(fx.model, request.dump());
    CHECK(again.body == reply.body);
}

TEST_CASE("predict rejects malformed or invalid requests") {
    const Fixture& fx = fixture();

    SUBCASE("body is not JSON") {
        const HttpReply reply = handle_predict(fx.model, "{nope");
        CHECK(reply.status == 400);
        CHECK(violations_mention(json::parse(reply.body), "body",
                                 "request body is not valid JSON"));
    }
    SUBCASE("body is not an object with features") {
        for (const std::string bad : {"[1,2]", "42", "{\"x\": 1}",
                                      "{\"features\": [1]}"}) {
            const HttpReply reply = handle_predict(fx.model, bad);
            CHECK(reply.status == 400);
            CHECK(violations_mention(json::parse(reply.body), "body",
                                     "expected an object with a \"features\""
                                     " object"));
        }
    }
    SUBCASE("empty feature set misses the required field") {
        const HttpReply reply =
            handle_predict(fx.model, R"({"features": {}})");
        CHECK(reply.status == 400);
        CHECK(violations_mention(json::parse(reply.body), "indoor_temp",
                                 "missing required feature"));
    }
    SUBCASE("null counts as missing for required features") {
        json features = valid_features();
        features["indoor_temp"] = nullptr;
        const HttpReply reply = handle_predict(
            fx.model, json{{"features", features}}.dump());
        CHECK(reply.status == 400);
        CHECK(violations_mention(json::parse(reply.body), "indoor_temp",
                                 "missing required feature"));
    }
    SUBCASE("unknown feature names are flagged") {
        json features = valid_features();
        features["bogus"] = 1.0;
        const HttpReply reply = handle_predict(
            fx.model, json{{"features", features}}.dump());
        CHECK(reply.status == 400);
        CHECK(violations_mention(json::parse(reply.body), "bogus",
                                 "unknown feature"));
    }
    SUBCASE("JSON types outside number/string/null are flagged") {
        json features = valid_features();
        features["clo"] = json::array({1.0});
        const HttpReply reply = handle_predict(
            fx.model, json{{"features", features}}.dump());
        CHECK(reply.status == 400);
        CHECK(violations_mention(json::parse(reply.body), "clo",
                                 "expected a number, string or null"));
    }
    SUBCASE("numeric features reject category text") {
        json features = valid_features();
        features["indoor_temp"] = "warm";
        const HttpReply reply = handle_predict(
            fx.model, json{{"features", features}}.dump());
        CHECK(reply.status == 400);
        CHECK(violations_mention(json::parse(reply.body), "indoor_temp",
                                 "expected a number"));
    }
    SUBCASE("categories outside the schema are flagged") {
        json features = valid_features();
        features["gender"] = "Zorp";
        const HttpReply reply = handle_predict(
            fx.model, json{{"features", features}}.dump());
        CHECK(reply.status == 400);
        CHECK(violations_mention(json::parse(reply.body), "gender",
                                 "unknown category \"Zorp\""));
    }
    SUBCASE("multiple problems are all reported") {
        const HttpReply reply = handle_predict(
            fx.model,
            R"({"features": {"bogus": 1, "indoor_temp": "warm"}})");
        CHECK(reply.status == 400);
        const json body = json::parse(reply.body);
        CHECK(body.at("violations").size() >= 2);
    }
}

TEST_CASE("optional features may be omitted and are imputed") {
    const Fixture& fx = fixture();
    json features = valid_features();
    json trimmed = json::object();
    // Keep only the required field and one categorical.
    trimmed["indoor_temp"] = features.at("indoor_temp");
    trimmed["gender"] = features.at("gender");
    const HttpReply reply = handle_predict(
        fx.model, json{{"features", trimmed}}.dump());
    REQUIRE(reply.status == 200);
    const json body = json::parse(reply.body);
    CHECK(body.at("tasks").size() == 3);
}

TEST_CASE("a tampered model file is refused") {
    const Fixture& fx = fixture();
    const fs::path dir = fresh_dir("tampered");
    std::string text = slurp(fx.model_path);
    const auto pos = text.find("\"weights\"");
    REQUIRE(pos != std::string::npos);
    const auto digit = text.find_first_of("0123456789", pos);
    REQUIRE(digit != std::string::npos);
    text[digit] = text[digit] == '9' ? '8' : '9';
    const fs::path bad = dir / "model.json";
    std::ofstream(bad, std::ios::binary) << text;
    CHECK_THROWS_AS(load_model_with_checksum(bad.string()), ModelLoadError);
}

TEST_CASE("the HTTP server wires routes to the handlers") {
    const Fixture& fx = fixture();
    httplib::Server server;
    configure_routes(server, fx.model);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread runner([&server] { server.listen_after_bind(); });
    for (int i = 0; i < 100 && !server.is_running(); ++i)
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    REQUIRE(server.is_running());

    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(5);
    client.set_read_timeout(5);

    auto health = client.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(json::parse(health->body).at("status") == "ok");

    const json request = json{{"features", valid_features()}};
    auto predict = client.Post("/predict", request.dump(),
                               "application/json");
    REQUIRE(predict);
    CHECK(predict->status == 200);
    CHECK(json::parse(predict->body).at("tasks").contains("TSV"));

    auto bad = client.Post("/predict", "{nope", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);

    auto missing = client.Get("/no-such-route");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    CHECK(json::parse(missing->body).at("error") == "not found");

    server.stop();
    runner.join();
}

TEST_CASE("binding an unresolvable host fails loudly") {
    const Fixture& fx = fixture();
    CHECK_THROWS_AS(
        serve_blocking(fx.model, "999.999.999.999", 0, nullptr), IoError);
}
