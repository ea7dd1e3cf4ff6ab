#pragma once

#include <iosfwd>
#include <string>

#include "comfort/mtl.hpp"

namespace httplib {
class Server;
}

namespace comfort {

// A model plus the checksum recorded in its file, echoed by /health.
struct LoadedModel {
    MtlNetwork net;
    std::string checksum;
};

LoadedModel load_model_with_checksum(const std::string& path);

// Route handlers factored out of the socket layer so tests can call them
// directly. Bodies are JSON, UTF-8.
struct HttpReply {
    int status = 200;
    std::string body;
};

// POST /predict: {"features": {name: value, ...}} -> per-task value, label
// text, and the full probability vector. Invalid bodies get 400 with a
// violation list; the handler never trains or mutates the model.
HttpReply handle_predict(const LoadedModel& model, const std::string& body);

// GET /health: {"status": "ok", "model_checksum": ...}.
HttpReply handle_health(const LoadedModel& model);

void configure_routes(httplib::Server& server, const LoadedModel& model);

// Binds, announces the address on `announce` when given, then serves until
// the process ends. Throws IoError when the address cannot be bound.
void serve_blocking(const LoadedModel& model, const std::string& host,
                    int port, std::ostream* announce = nullptr);

}  // namespace comfort
