#include "pico/service/http_server.hpp"

#include <httplib.h>

#include "pico/core/error.hpp"

namespace pico::service {
namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
    send_json(res, status, {{"schema", "pico.error/1"}, {"error", kind}, {"message", message}});
}

class Unauthorized : public Error {
public:
    using Error::Error;
};

// Runs a handler and maps library errors onto HTTP statuses.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Unauthorized& e) {
            send_error(res, 401, "unauthorized", e.what());
        } catch (const NotFoundError& e) {
            send_error(res, 404, "not_found", e.what());
        } catch (const ConflictError& e) {
            send_error(res, 409, "conflict", e.what());
        } catch (const EndOfSession& e) {
            send_error(res, 410, "end_of_session", e.what());
        } catch (const ValidationError& e) {
            send_error(res, 422, "validation", e.what());
        } catch (const TrainingError& e) {
            send_error(res, 409, "training", e.what());
        } catch (const InputError& e) {
            send_error(res, 400, "bad_request", e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, "bad_request", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

json parse_body(const httplib::Request& req) {
    try {
        auto body = json::parse(req.body);
        if (!body.is_object()) throw InputError("request body must be a JSON object");
        return body;
    } catch (const json::parse_error& e) {
        throw InputError(std::string("malformed JSON body: ") + e.what());
    }
}

json summary_json(const SessionSummary& s) {
    return {{"schema", "pico.session_summary/1"}, {"session_id", s.session_id}, {"participant_id", s.participant_id},
            {"task_id", s.task_id},               {"answered", s.answered},     {"total", s.total},
            {"round", s.round},                   {"done", s.done}};
}

}  // namespace

HttpServer::HttpServer(SessionManager& manager, HttpOptions options)
    : manager_(manager), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
    auto& svr = *server_;
    auto require_admin = [this](const httplib::Request& req) {
        if (options_.admin_token.empty()) return;
        if (req.get_header_value("Authorization") != "Bearer " + options_.admin_token)
            throw Unauthorized("admin token required");
    };
    if (!options_.cors_origin.empty()) {
        svr.set_default_headers({{"Access-Control-Allow-Origin", options_.cors_origin},
                                 {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        svr.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }

    svr.Post("/api/v1/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto body = parse_body(req);
                 const auto info = manager_.create_session(body.at("task_id").get<std::string>(),
                                                           body.at("participant_id").get<std::string>());
                 send_json(res, 201,
                           {{"schema", "pico.session/1"},
                            {"session_id", info.session_id},
                            {"participant_id", info.participant_id},
                            {"task", info.task.to_json()},
                            {"total", info.total},
                            {"round", info.round}});
             }));

    svr.Get(R"(/api/v1/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, summary_json(manager_.summary(req.matches[1])));
            }));

    svr.Get(R"(/api/v1/sessions/([^/]+)/stimulus)",
            guarded([this](const httplib::Request& req, httplib::Response& res) {
                const auto s = manager_.next_stimulus(req.matches[1]);
                send_json(res, 200,
                          {{"schema", "pico.stimulus/1"},
                           {"session_id", std::string(req.matches[1])},
                           {"stimulus_id", s.stimulus_id},
                           {"index", s.index},
                           {"total", s.total},
                           {"image", {{"media_type", "image/png"}, {"encoding", "base64"}, {"data", base64_encode(s.png)}}}});
            }));

    svr.Post(R"(/api/v1/sessions/([^/]+)/actions)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto body = parse_body(req);
                 std::optional<double> latency;
                 if (body.contains("latency_ms") && !body.at("latency_ms").is_null())
                     latency = body.at("latency_ms").get<double>();
                 if (!body.at("action").is_number_integer()) throw ValidationError("action must be an integer");
                 const auto ack = manager_.submit_action(req.matches[1], body.at("stimulus_id").get<std::string>(),
                                                         body.at("action").get<int>(), latency);
                 send_json(res, 200,
                           {{"schema", "pico.ack/1"},
                            {"accepted", true},
                            {"stimulus_id", ack.stimulus_id},
                            {"answered", ack.answered},
                            {"total", ack.total},
                            {"done", ack.done}});
             }));

    svr.Get("/api/v1/tasks", guarded([this](const httplib::Request&, httplib::Response& res) {
                json tasks = json::array();
                for (const auto& id : manager_.task_ids()) {
                    auto t = manager_.task(id).to_json();
                    t["round"] = manager_.round(id);
                    tasks.push_back(t);
                }
                send_json(res, 200, {{"schema", "pico.tasks/1"}, {"tasks", tasks}});
            }));

    svr.Post(R"(/api/v1/tasks/([^/]+)/rounds)", guarded([this, require_admin](const httplib::Request& req, httplib::Response& res) {
                 require_admin(req);
                 const auto result = manager_.advance_round(req.matches[1]);
                 send_json(res, 200,
                           {{"schema", "pico.round/1"},
                            {"task_id", result.task_id},
                            {"round", result.round},
                            {"checkpoint", result.checkpoint.filename().string()},
                            {"report", result.report.summary()}});
             }));

    svr.Get(R"(/api/v1/tasks/([^/]+)/records)", guarded([this, require_admin](const httplib::Request& req, httplib::Response& res) {
                require_admin(req);
                std::string out;
                for (const auto& r : manager_.export_records(req.matches[1])) out += r.to_json().dump() + "\n";
                res.status = 200;
                res.set_content(out, "application/x-ndjson");
            }));
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = server_->bind_to_any_port(host);
        if (bound < 0) throw ConfigError("cannot bind " + host);
        return bound;
    }
    if (!server_->bind_to_port(host, port)) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::serve() { server_->listen_after_bind(); }

void HttpServer::stop() {
    if (server_ && server_->is_running()) server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace pico::service
