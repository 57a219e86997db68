#pragma once

#include <string>

#include "httplib.h"
#include "relmove/service.hpp"

namespace relmove {

/// Binds an Api onto cpp-httplib. Every `/api/...` request is forwarded to
/// Api::handle; CORS is open so the browser client can be served elsewhere.
class HttpServer {
public:
    explicit HttpServer(const Api& api) : api_(api) {
        server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                     {"Access-Control-Allow-Methods", "GET, PUT, OPTIONS"},
                                     {"Access-Control-Allow-Headers", "Content-Type"}});
        // httplib's default adds SO_REUSEPORT, which lets a second server share a busy port
        server_.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });
        auto forward = [this](const httplib::Request& req, httplib::Response& res) {
            ApiRequest r;
            r.method = req.method;
            r.path = req.path;
            for (const auto& [k, v] : req.params) r.params.emplace(k, v);
            r.body = req.body;
            const auto out = api_.handle(r);
            res.status = out.status;
            res.set_content(out.body, "application/json; charset=utf-8");
        };
        server_.Get(R"(/api/.*)", forward);
        server_.Put(R"(/api/.*)", forward);
        server_.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }

    /// Returns the bound port (useful with port 0), or -1 on failure.
    int bind(const std::string& host, int port) {
        if (port == 0) return server_.bind_to_any_port(host);
        return server_.bind_to_port(host, port) ? port : -1;
    }

    bool listen() { return server_.listen_after_bind(); }
    void stop() { server_.stop(); }
    void wait_until_ready() const { server_.wait_until_ready(); }

private:
    const Api& api_;
    httplib::Server server_;
};

}  // namespace relmove
