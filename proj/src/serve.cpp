#include "comfort/serve.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "comfort/errors.hpp"

namespace comfort {

using nlohmann::json;

LoadedModel load_model_with_checksum(const std::string& path) {
    LoadedModel model;
    model.net = load_model(path);
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    // load_model already verified the checksum against the body.
    model.checksum = json::parse(buf.str()).at("checksum").get<std::string>();
    return model;
}

HttpReply handle_health(const LoadedModel& model) {
    json j;
    j["status"] = "ok";
    j["model_checksum"] = model.checksum;
    return {200, j.dump()};
}

namespace {

HttpReply bad_request(const std::vector<Violation>& violations) {
    json j;
    j["violations"] = json::array();
    for (const auto& v : violations)
        j["violations"].push_back(
            json{{"field", v.field}, {"message", v.message}});
    return {400, j.dump()};
}

HttpReply bad_request(const std::string& field, const std::string& message) {
    return bad_request({Violation{field, message}});
}

}  // namespace

HttpReply handle_predict(const LoadedModel& model, const std::string& body) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::exception&) {
        return bad_request("body", "request body is not valid JSON");
    }
    if (!doc.is_object() || !doc.contains("features") ||
        !doc["features"].is_object())
        return bad_request("body",
                           "expected an object with a \"features\" object");

    SurveyRecord record;
    std::vector<Violation> violations;
    for (const auto& [name, value] : doc["features"].items()) {
        if (value.is_number()) {
            record.values[name] = value.get<double>();
        } else if (value.is_string()) {
            record.values[name] = value.get<std::string>();
        } else if (value.is_null()) {
            record.values[name] = Value{};
        } else {
            violations.push_back({name, "expected a number, string or null"});
        }
    }
    auto schema_violations = validate_record(model.net.schema, record);
    violations.insert(violations.end(), schema_violations.begin(),
                      schema_violations.end());
    if (!violations.empty()) return bad_request(violations);

    std::vector<TaskPrediction> preds;
    try {
        preds = predict(model.net, record);
    } catch (const Error& e) {
        return bad_request("body", e.what());
    }
    json tasks = json::object();
    for (const auto& p : preds) {
        tasks[p.task] = json{{"value", p.class_value},
                             {"label", p.label},
                             {"probs", p.probabilities}};
    }
    return {200, json{{"tasks", tasks}}.dump()};
}

void configure_routes(httplib::Server& server, const LoadedModel& model) {
    server.Get("/health",
               [&model](const httplib::Request&, httplib::Response& res) {
                   const HttpReply reply = handle_health(model);
                   res.status = reply.status;
                   res.set_content(reply.body, "application/json");
               });
    server.Post("/predict",
                [&model](const httplib::Request& req,
                         httplib::Response& res) {
                    const HttpReply reply = handle_predict(model, req.body);
                    res.status = reply.status;
                    res.set_content(reply.body, "application/json");
                });
    // Unknown routes; keeps handler-set 4xx bodies intact.
    server.set_error_handler(
        [](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty())
                res.set_content("{\"error\":\"not found\"}",
                                "application/json");
        });
}

void serve_blocking(const LoadedModel& model, const std::string& host,
                    int port, std::ostream* announce) {
    httplib::Server server;
    configure_routes(server, model);
    if (!server.bind_to_port(host, port))
        throw IoError("cannot bind " + host + ":" + std::to_string(port));
    if (announce)
        *announce << "serving on http://" << host << ":" << port
                  << std::endl;
    server.listen_after_bind();
}

}  // namespace comfort
