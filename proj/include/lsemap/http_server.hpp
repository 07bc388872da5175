/*
 * Copyright 2026 The lsemap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#ifndef LSEMAP_HTTP_SERVER_HPP
#define LSEMAP_HTTP_SERVER_HPP

#include <string>

// Eigen must be seen before httplib.h, whose <resolv.h> defines `_res`.
#include "lsemap/service.hpp"

#include "httplib.h"

namespace lsemap {

/// Routes the session endpoints of `service` onto `server`.
inline void mount(httplib::Server& server, SessionService& service) {
    auto reply = [](httplib::Response& res, const ServiceResponse& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server.Post("/sessions", [&, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.create_session(req.body));
    });
    server.Get(R"(/sessions/([^/]+)/suggestion)", [&, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.get_suggestion(req.matches[1]));
    });
    server.Post(R"(/sessions/([^/]+)/measurements)", [&, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.post_measurement(req.matches[1], req.body));
    });
    server.Get(R"(/sessions/([^/]+)/state)", [&, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.get_state(req.matches[1]));
    });
    server.Get(R"(/sessions/([^/]+)/metrics)", [&, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.get_metrics(req.matches[1]));
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty())
            return;
        Json body;
        body["schema_version"] = kSchemaVersion;
        body["error"] = res.status == 404 ? "NotFound" : "HttpError";
        body["message"] = "HTTP " + std::to_string(res.status);
        res.set_content(body.dump(), "application/json");
    });
}

}  // namespace lsemap

#endif  // LSEMAP_HTTP_SERVER_HPP
