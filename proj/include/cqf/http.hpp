#pragma once

#include "cqf/service.hpp"

#include <httplib.h>

namespace cqf {

/// Routes every GET/POST on `server` through `service`.
inline void mount(httplib::Server& server, Service& service) {
    auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
        const auto out = service.handle(Request{req.method, req.path, req.body});
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
    };
    server.Get(".*", forward);
    server.Post(".*", forward);
}

}  // namespace cqf
