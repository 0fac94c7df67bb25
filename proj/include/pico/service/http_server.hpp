#pragma once

#include <memory>
#include <string>

#include "pico/service/session_manager.hpp"

namespace httplib {
class Server;
}

namespace pico::service {

struct HttpOptions {
    std::string cors_origin = "*";  // empty disables CORS headers
    // When set, round control and export (which expose T) require
    // "Authorization: Bearer <admin_token>".
    std::string admin_token;
};

// JSON-over-HTTP front end for SessionManager.
//
//   POST /api/v1/sessions                      {task_id, participant_id}
//   GET  /api/v1/sessions/{id}                 session summary
//   GET  /api/v1/sessions/{id}/stimulus        next (or still pending) stimulus
//   POST /api/v1/sessions/{id}/actions         {stimulus_id, action, latency_ms?}
//   GET  /api/v1/tasks                         task descriptors and rounds
//   POST /api/v1/tasks/{task}/rounds           advance_round
//   GET  /api/v1/tasks/{task}/records          record log as JSON lines
//
// Errors are {"schema": "pico.error/1", "error": kind, "message": ...} with
// 400 bad input, 401 missing admin token, 404 unknown id, 409 conflict, 410
// session exhausted and 422 invalid action.
class HttpServer {
public:
    HttpServer(SessionManager& manager, HttpOptions options = {});
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Returns the bound port; port 0 picks a free one.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    void serve();
    void stop();
    void wait_until_ready() const;

private:
    SessionManager& manager_;
    HttpOptions options_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace pico::service
