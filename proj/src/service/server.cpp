#include "forecrew/service.hpp"

#include <iostream>

#include "httplib.h"

namespace forecrew {

namespace {

void send_json(httplib::Response &res, int status, const Json &body) {
    res.status = status;
    res.set_content(body.dump(2), "application/json");
}

void send_error(httplib::Response &res, int status, const std::string &code, const std::string &message,
                const std::vector<std::string> &diagnostics = {}) {
    send_json(res, status, Json{{"error", code}, {"message", message}, {"diagnostics", diagnostics}});
}

Json parse_body(const httplib::Request &req) {
    try {
        auto doc = Json::parse(req.body.empty() ? std::string("{}") : req.body);
        if (!doc.is_object()) throw ServiceError(400, "ParseError", "request body must be a JSON object");
        return doc;
    } catch (const Json::parse_error &e) {
        throw ServiceError(400, "ParseError", std::string("malformed JSON body: ") + e.what());
    }
}

template <class T> T field(const Json &doc, const char *name) {
    try {
        return doc.at(name).get<T>();
    } catch (const Json::exception &) {
        throw ServiceError(400, "ParseError", std::string("missing or malformed field '") + name + "'");
    }
}

// Accepts {"instance": doc, "plan": doc?, "id": name?} or a bare instance document.
struct CreateRequest {
    ProblemInstance instance;
    std::optional<Plan> plan;
    std::optional<std::string> id;
};

CreateRequest parse_create(const Json &body) {
    CreateRequest r;
    try {
        const bool wrapped = body.contains("instance");
        r.instance = instance_from_json(wrapped ? body.at("instance") : body);
        if (wrapped && body.contains("plan") && !body.at("plan").is_null()) r.plan = plan_from_json(body.at("plan"));
        if (wrapped && body.contains("id")) r.id = body.at("id").get<std::string>();
    } catch (const Error &e) {
        throw ServiceError(400, std::string(to_string(e.code())), e.detail());
    } catch (const Json::exception &e) {
        throw ServiceError(400, "ParseError", e.what());
    }
    return r;
}

Json job_to_json(const Job &job) {
    Json j = {{"job", job.id}, {"kind", job.kind}, {"status", job.status}};
    if (job.status == "done") j["result"] = job.result;
    if (job.status == "failed") j["error"] = {{"status", job.error_status}, {"message", job.error}};
    return j;
}

} // namespace

struct Service::Impl {
    httplib::Server server;
    std::thread thread;
};

Service::Service(ServiceConfig config, std::filesystem::path ui_dir)
    : store_(std::move(config)), impl_(std::make_unique<Impl>()) {
    auto &srv = impl_->server;
    auto &store = store_;

    srv.set_pre_routing_handler([&store](const httplib::Request &req, httplib::Response &res) {
        const auto &token = store.config().api_token;
        if (token.empty() || req.path == "/health" || req.path.rfind("/ui", 0) == 0) {
            return httplib::Server::HandlerResponse::Unhandled;
        }
        if (req.get_header_value("Authorization") != "Bearer " + token) {
            send_error(res, 401, "Unauthorized", "missing or wrong bearer token");
            return httplib::Server::HandlerResponse::Handled;
        }
        return httplib::Server::HandlerResponse::Unhandled;
    });
    srv.set_exception_handler([](const httplib::Request &, httplib::Response &res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const ServiceError &e) {
            send_error(res, e.status, e.code, e.what(), e.diagnostics);
        } catch (const Error &e) {
            send_error(res, 400, std::string(to_string(e.code())), e.detail());
        } catch (const std::exception &e) {
            send_error(res, 500, "Internal", e.what());
        }
    });

    srv.Get("/health", [&store](const httplib::Request &, httplib::Response &res) {
        send_json(res, 200, Json{{"status", "ok"}, {"offline", store.config().offline}});
    });

    srv.Post("/sessions", [&store](const httplib::Request &req, httplib::Response &res) {
        auto create = parse_create(parse_body(req));
        if (create.plan) {
            const auto id = store.create(create.instance, create.plan, create.id);
            auto doc = store.state(id);
            send_json(res, 201, doc);
            return;
        }
        // Solving can take the full budget, so it runs as a job.
        const auto job = store.submit("create-session", [&store, create] {
            const auto id = store.create(create.instance, std::nullopt, create.id);
            return Json{{"session", id}};
        });
        res.set_header("Location", "/jobs/" + job);
        send_json(res, 202, Json{{"job", job}, {"status", "pending"}});
    });

    srv.Get("/sessions", [&store](const httplib::Request &, httplib::Response &res) {
        send_json(res, 200, Json{{"sessions", store.ids()}});
    });

    srv.Get(R"(/sessions/([A-Za-z0-9_-]+)/state)", [&store](const httplib::Request &req, httplib::Response &res) {
        send_json(res, 200, store.state(req.matches[1]));
    });

    srv.Get(R"(/sessions/([A-Za-z0-9_-]+)/plans/(-?\d+))", [&store](const httplib::Request &req, httplib::Response &res) {
        send_json(res, 200, store.plan(req.matches[1], std::stoi(req.matches[2])));
    });

    srv.Post(R"(/sessions/([A-Za-z0-9_-]+)/advance)", [&store](const httplib::Request &req, httplib::Response &res) {
        const std::string id = req.matches[1];
        const auto body = parse_body(req);
        Minutes to = 0;
        if (body.contains("to_minutes")) {
            to = field<Minutes>(body, "to_minutes");
        } else if (body.contains("by_minutes")) {
            to = store.get(id)->view()->state.clock + field<Minutes>(body, "by_minutes");
        } else {
            throw ServiceError(400, "ParseError", "expected 'to_minutes' or 'by_minutes'");
        }
        send_json(res, 200, store.advance(id, to));
    });

    srv.Post(R"(/sessions/([A-Za-z0-9_-]+)/interventions)",
             [&store](const httplib::Request &req, httplib::Response &res) {
                 const std::string id = req.matches[1];
                 const auto body = parse_body(req);
                 const auto narrative = field<std::string>(body, "narrative");
                 store.get(id);
                 if (body.value("async", false)) {
                     const auto job = store.submit("intervention", [&store, id, narrative] {
                         return intervention_result_to_json(store.intervene(id, narrative));
                     });
                     res.set_header("Location", "/jobs/" + job);
                     send_json(res, 202, Json{{"job", job}, {"status", "pending"}});
                     return;
                 }
                 send_json(res, 200, intervention_result_to_json(store.intervene(id, narrative)));
             });

    srv.Get(R"(/sessions/([A-Za-z0-9_-]+)/events)", [&store](const httplib::Request &req, httplib::Response &res) {
        std::size_t since = 0;
        double wait = 0.0;
        try {
            if (req.has_param("since")) since = std::stoul(req.get_param_value("since"));
            if (req.has_param("wait")) wait = std::stod(req.get_param_value("wait"));
        } catch (const std::exception &) {
            throw ServiceError(400, "ParseError", "'since' and 'wait' must be numbers");
        }
        send_json(res, 200, store.events(req.matches[1], since, wait));
    });

    srv.Post("/solve", [&store](const httplib::Request &req, httplib::Response &res) {
        const auto create = parse_create(parse_body(req));
        const auto report = validate_instance(create.instance);
        if (!report.ok()) throw ServiceError(400, "InstanceInvalid", report.summary());
        const auto job = store.submit("solve", [&store, instance = create.instance] {
            auto [plan, stats] = solve_instance(instance, store.config().limits);
            return plan_to_json(plan, stats_to_json(stats));
        });
        res.set_header("Location", "/jobs/" + job);
        send_json(res, 202, Json{{"job", job}, {"status", "pending"}});
    });

    srv.Get(R"(/jobs/([A-Za-z0-9_-]+))", [&store](const httplib::Request &req, httplib::Response &res) {
        const auto job = store.job(req.matches[1]);
        if (!job) throw ServiceError(404, "UnknownJob", "no job named " + std::string(req.matches[1]));
        send_json(res, 200, job_to_json(*job));
    });

    if (!ui_dir.empty() && !srv.set_mount_point("/ui", ui_dir.string())) {
        std::cerr << "ui directory " << ui_dir << " not found; /ui disabled\n";
    }
}

Service::~Service() { stop(); }

bool Service::listen(const std::string &host, int port) { return impl_->server.listen(host, port); }

int Service::start_background(const std::string &host) {
    const int port = impl_->server.bind_to_any_port(host);
    if (port < 0) return port;
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void Service::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

} // namespace forecrew
