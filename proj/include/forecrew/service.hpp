#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "forecrew/twin.hpp"

namespace forecrew {

struct ServiceConfig {
    /// Session logs live under <data_dir>/sessions/<id>/; empty keeps everything in memory.
    std::filesystem::path data_dir;
    /// Use the rule parser instead of a model endpoint.
    bool offline = true;
    /// Model endpoint; used when not offline.
    std::string llm_url, llm_model = "default", llm_token;
    /// Bearer token required on every request when non-empty.
    std::string api_token;
    SolveLimits limits;
    /// A snapshot file is rewritten every this many events.
    std::size_t snapshot_every = 16;
    /// Upper bound for the events long-poll wait.
    double max_wait_seconds = 30.0;

    /// Reads FORECREW_DATA_DIR, FORECREW_OFFLINE, FORECREW_LLM_URL/MODEL/TOKEN, FORECREW_API_TOKEN.
    static ServiceConfig from_env();
};

/// Failure with the HTTP status it maps to.
struct ServiceError : std::runtime_error {
    ServiceError(int status, std::string code, const std::string &message, std::vector<std::string> diagnostics = {})
        : std::runtime_error(message), status(status), code(std::move(code)), diagnostics(std::move(diagnostics)) {}
    int status;
    std::string code;
    std::vector<std::string> diagnostics;
};

/// Immutable read view of a session, swapped after each write.
struct SessionView {
    std::string id;
    TwinState state;
    std::vector<Plan> plans; // plan history; index = plan id
    Json snapshot;
};

class Session {
public:
    Session(std::string id, TwinState state, std::filesystem::path dir, std::size_t snapshot_every);

    [[nodiscard]] const std::string &id() const noexcept { return id_; }
    [[nodiscard]] std::shared_ptr<const SessionView> view() const;

    /// Runs one transition under the writer lock and persists the new events before publishing.
    template <class F> auto write(F &&transition) {
        std::lock_guard writer(write_mutex_);
        return transition(*this);
    }
    /// Only inside write(): replaces the state and persists events appended since the last commit.
    void commit(TwinState next);

    /// Events with seq >= since, waiting up to `wait` for at least one.
    std::vector<TwinEvent> events_since(std::size_t since, std::chrono::milliseconds wait) const;
    /// Wakes every long-poll waiter (used at shutdown).
    void notify_all();

private:
    void publish(TwinState state);

    std::string id_;
    std::filesystem::path dir_;
    std::size_t snapshot_every_;
    std::size_t last_snapshot_ = 0;
    std::mutex write_mutex_;
    mutable std::mutex view_mutex_;
    mutable std::condition_variable changed_;
    std::shared_ptr<const SessionView> view_;
    bool closing_ = false;
};

struct InterventionResult {
    std::vector<ConstraintDelta> deltas;
    std::vector<std::string> diagnostics;
    int plan_id = 0;
    bool replanned = false;
    PlanDelta delta;
    Minutes makespan_before = 0, makespan_after = 0;
    Json stats = Json::object();
};
Json intervention_result_to_json(const InterventionResult &result);

struct Job {
    std::string id;
    std::string kind;
    std::string status = "pending"; // pending, running, done, failed
    Json result;
    std::string error;
    int error_status = 0;
};

class SessionStore {
public:
    explicit SessionStore(ServiceConfig config);
    ~SessionStore();
    SessionStore(const SessionStore &) = delete;
    SessionStore &operator=(const SessionStore &) = delete;

    [[nodiscard]] const ServiceConfig &config() const noexcept { return config_; }

    /// Replays every persisted log under the data directory. Returns the number of sessions loaded.
    std::size_t recover();

    /// Creates a session from an instance and plan (solving when the plan is absent).
    /// Throws ServiceError 400 for malformed documents or invalid plans, 409 for a taken id.
    std::string create(const ProblemInstance &instance, std::optional<Plan> plan, std::optional<std::string> id = {});
    std::shared_ptr<Session> get(const std::string &id) const; // ServiceError 404
    std::vector<std::string> ids() const;

    Json state(const std::string &id) const;
    Json plan(const std::string &id, int n) const;
    Json advance(const std::string &id, Minutes to_minutes);
    /// Throws ServiceError 422 (extraction), 409 (replan infeasible), 503 (model endpoint down).
    InterventionResult intervene(const std::string &id, const std::string &narrative);
    Json events(const std::string &id, std::size_t since, double wait_seconds) const;

    /// Runs work on a background thread; the returned job id is polled through job().
    std::string submit(std::string kind, std::function<Json()> work);
    std::optional<Job> job(const std::string &id) const;

private:
    Extractor extractor();
    std::filesystem::path session_dir(const std::string &id) const;

    ServiceConfig config_;
    std::unique_ptr<LanguageModelClient> client_;
    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::size_t next_session_ = 1;

    mutable std::mutex jobs_mutex_;
    std::map<std::string, Job> jobs_;
    std::vector<std::thread> workers_;
    std::size_t next_job_ = 1;
};

/// HTTP front end. Routes:
///   POST /sessions, GET /sessions, GET /sessions/{id}/state, GET /sessions/{id}/plans/{n},
///   POST /sessions/{id}/advance, POST /sessions/{id}/interventions, GET /sessions/{id}/events,
///   POST /solve, GET /jobs/{id}, GET /health; static files under /ui when ui_dir is set.
class Service {
public:
    explicit Service(ServiceConfig config, std::filesystem::path ui_dir = {});
    ~Service();

    SessionStore &store() noexcept { return store_; }
    /// Binds and serves until stop(). Returns false when the address cannot be bound.
    bool listen(const std::string &host, int port);
    /// Binds to an ephemeral port and serves on a background thread; returns the port.
    int start_background(const std::string &host = "127.0.0.1");
    void stop();

private:
    struct Impl;
    SessionStore store_;
    std::unique_ptr<Impl> impl_;
};

} // namespace forecrew
