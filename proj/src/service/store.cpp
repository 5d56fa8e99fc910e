#include "forecrew/service.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <regex>

namespace forecrew {

namespace fs = std::filesystem;

namespace {

std::string env_or(const char *name, std::string fallback = {}) {
    const char *v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

bool valid_session_id(const std::string &id) {
    static const std::regex pattern("[A-Za-z0-9_-]{1,64}");
    return std::regex_match(id, pattern);
}

std::vector<Plan> plan_history(const std::vector<TwinEvent> &events) {
    std::vector<Plan> plans;
    for (const auto &e : events) {
        if (e.kind == EventKind::Genesis || e.kind == EventKind::Replanned) plans.push_back(*e.plan);
    }
    return plans;
}

void write_atomic(const fs::path &path, std::string_view content) {
    const auto tmp = path.string() + ".tmp";
    write_file(tmp, content);
    fs::rename(tmp, path);
}

// Reads a log, dropping a torn final line left by a crash mid-append.
std::vector<TwinEvent> read_log(const fs::path &path) {
    auto text = read_file(path.string());
    const bool complete = text.empty() || text.back() == '\n';
    if (!complete) {
        const auto cut = text.rfind('\n');
        const auto keep = cut == std::string::npos ? 0 : cut + 1;
        std::cerr << "session log " << path << ": dropping torn final record\n";
        text.resize(keep);
        write_atomic(path, text);
    }
    return events_from_ndjson(text);
}

ServiceError to_service_error(ErrorCode code, const std::string &message, std::vector<std::string> diagnostics = {}) {
    int status = 500;
    switch (code) {
    case ErrorCode::EmptyNarrative:
    case ErrorCode::ExtractionFailed:
    case ErrorCode::UnresolvedReference:
    case ErrorCode::ResponseNotJson:
    case ErrorCode::InvalidDelta:
    case ErrorCode::UnknownTask:
    case ErrorCode::UnknownRobotType:
    case ErrorCode::RemovingAbsentDependency:
        status = 422;
        break;
    case ErrorCode::ReplanInfeasible:
    case ErrorCode::FrozenInfeasible:
    case ErrorCode::ClockRegression:
        status = 409;
        break;
    case ErrorCode::ClientUnavailable:
        status = 503;
        break;
    case ErrorCode::UnknownSession:
        status = 404;
        break;
    case ErrorCode::ParseError:
    case ErrorCode::InstanceInvalid:
    case ErrorCode::PlanInvalid:
    case ErrorCode::TaskSetMismatch:
    case ErrorCode::BudgetZero:
        status = 400;
        break;
    default:
        break;
    }
    return ServiceError(status, std::string(to_string(code)), message, std::move(diagnostics));
}

} // namespace

ServiceConfig ServiceConfig::from_env() {
    ServiceConfig c;
    c.data_dir = env_or("FORECREW_DATA_DIR");
    c.llm_url = env_or("FORECREW_LLM_URL");
    c.llm_model = env_or("FORECREW_LLM_MODEL", c.llm_model);
    c.llm_token = env_or("FORECREW_LLM_TOKEN");
    c.api_token = env_or("FORECREW_API_TOKEN");
    const auto offline = env_or("FORECREW_OFFLINE");
    c.offline = c.llm_url.empty() || offline == "1" || offline == "true";
    return c;
}

// ---------------------------------------------------------------------------
// Session

Session::Session(std::string id, TwinState state, fs::path dir, std::size_t snapshot_every)
    : id_(std::move(id)), dir_(std::move(dir)), snapshot_every_(std::max<std::size_t>(snapshot_every, 1)) {
    last_snapshot_ = state.events.size();
    publish(std::move(state));
}

std::shared_ptr<const SessionView> Session::view() const {
    std::lock_guard lock(view_mutex_);
    return view_;
}

void Session::publish(TwinState state) {
    auto v = std::make_shared<SessionView>();
    v->id = id_;
    v->plans = plan_history(state.events);
    v->snapshot = snapshot_to_json(state);
    v->snapshot["session"] = id_;
    v->state = std::move(state);
    {
        std::lock_guard lock(view_mutex_);
        view_ = std::move(v);
    }
    changed_.notify_all();
}

void Session::commit(TwinState next) {
    const auto before = view()->state.events.size();
    if (!dir_.empty() && next.events.size() > before) {
        std::ofstream log(dir_ / "events.ndjson", std::ios::app | std::ios::binary);
        for (std::size_t i = before; i < next.events.size(); ++i) log << event_to_json(next.events[i]).dump() << '\n';
        log.flush();
        if (!log) throw ServiceError(500, "PersistenceFailed", "cannot append to the log of session " + id_);
        if (next.events.size() - last_snapshot_ >= snapshot_every_) {
            write_atomic(dir_ / "snapshot.json", snapshot_to_json(next).dump(2));
            last_snapshot_ = next.events.size();
        }
    }
    publish(std::move(next));
}

std::vector<TwinEvent> Session::events_since(std::size_t since, std::chrono::milliseconds wait) const {
    std::unique_lock lock(view_mutex_);
    changed_.wait_for(lock, wait, [&] { return closing_ || view_->state.events.size() > since; });
    const auto &events = view_->state.events;
    if (since >= events.size()) return {};
    return {events.begin() + static_cast<std::ptrdiff_t>(since), events.end()};
}

void Session::notify_all() {
    {
        std::lock_guard lock(view_mutex_);
        closing_ = true;
    }
    changed_.notify_all();
}

// ---------------------------------------------------------------------------
// Store

Json intervention_result_to_json(const InterventionResult &r) {
    return Json{{"changes", deltas_to_json(r.deltas)["changes"]},
                {"diagnostics", r.diagnostics},
                {"plan_id", r.plan_id},
                {"replanned", r.replanned},
                {"reassignments", r.delta.reassignments},
                {"retiming_minutes", r.delta.retiming},
                {"makespan_before", r.makespan_before},
                {"makespan_after", r.makespan_after},
                {"makespan_change", r.makespan_after - r.makespan_before},
                {"stats", r.stats}};
}

SessionStore::SessionStore(ServiceConfig config) : config_(std::move(config)) {
    if (!config_.offline && !config_.llm_url.empty()) {
        client_ = std::make_unique<HttpChatClient>(config_.llm_url, config_.llm_model, config_.llm_token);
    }
    if (!config_.data_dir.empty()) fs::create_directories(config_.data_dir / "sessions");
}

SessionStore::~SessionStore() {
    {
        std::lock_guard lock(sessions_mutex_);
        for (auto &[id, s] : sessions_) s->notify_all();
    }
    for (auto &t : workers_) {
        if (t.joinable()) t.join();
    }
}

fs::path SessionStore::session_dir(const std::string &id) const {
    return config_.data_dir.empty() ? fs::path{} : config_.data_dir / "sessions" / id;
}

Extractor SessionStore::extractor() {
    if (client_) return client_extractor(*client_);
    return rule_extractor();
}

std::size_t SessionStore::recover() {
    if (config_.data_dir.empty()) return 0;
    std::size_t loaded = 0;
    for (const auto &entry : fs::directory_iterator(config_.data_dir / "sessions")) {
        const auto log = entry.path() / "events.ndjson";
        if (!entry.is_directory() || !fs::exists(log)) continue;
        const auto id = entry.path().filename().string();
        try {
            auto state = replay(read_log(log));
            std::lock_guard lock(sessions_mutex_);
            sessions_[id] = std::make_shared<Session>(id, std::move(state), entry.path(), config_.snapshot_every);
            ++loaded;
        } catch (const Error &e) {
            std::cerr << "skipping session " << id << ": " << e.what() << '\n';
        }
    }
    return loaded;
}

std::string SessionStore::create(const ProblemInstance &instance, std::optional<Plan> plan, std::optional<std::string> id) {
    const auto report = validate_instance(instance);
    if (!report.ok()) throw ServiceError(400, "InstanceInvalid", report.summary());
    if (!plan) {
        auto [solved, stats] = solve_instance(instance, config_.limits);
        if (solved.status == SolveStatus::Infeasible || solved.status == SolveStatus::Unknown) {
            throw ServiceError(409, "Infeasible", "no plan found (" + std::string(to_string(solved.status)) + ")");
        }
        plan = std::move(solved);
    }
    TwinState state;
    try {
        state = init_state(instance, *plan);
    } catch (const Error &e) {
        throw to_service_error(e.code(), e.detail());
    }

    std::lock_guard lock(sessions_mutex_);
    std::string name;
    if (id) {
        if (!valid_session_id(*id)) throw ServiceError(400, "ParseError", "session ids use letters, digits, '-' and '_'");
        if (sessions_.count(*id)) throw ServiceError(409, "SessionExists", "session " + *id + " already exists");
        name = *id;
    } else {
        do name = "s" + std::to_string(next_session_++);
        while (sessions_.count(name) || (!config_.data_dir.empty() && fs::exists(session_dir(name))));
    }
    const auto dir = session_dir(name);
    if (!dir.empty()) {
        fs::create_directories(dir);
        write_file((dir / "events.ndjson").string(), events_to_ndjson(state.events));
    }
    sessions_[name] = std::make_shared<Session>(name, std::move(state), dir, config_.snapshot_every);
    return name;
}

std::shared_ptr<Session> SessionStore::get(const std::string &id) const {
    std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, "UnknownSession", "no session named " + id);
    return it->second;
}

std::vector<std::string> SessionStore::ids() const {
    std::lock_guard lock(sessions_mutex_);
    std::vector<std::string> out;
    for (const auto &[id, s] : sessions_) out.push_back(id);
    return out;
}

Json SessionStore::state(const std::string &id) const { return get(id)->view()->snapshot; }

Json SessionStore::plan(const std::string &id, int n) const {
    const auto v = get(id)->view();
    if (n < 0 || n >= static_cast<int>(v->plans.size())) {
        throw ServiceError(404, "UnknownPlan", "session " + id + " has no plan " + std::to_string(n));
    }
    auto doc = plan_to_json(v->plans[static_cast<std::size_t>(n)]);
    doc["plan_id"] = n;
    return doc;
}

Json SessionStore::advance(const std::string &id, Minutes to_minutes) {
    return get(id)->write([&](Session &s) {
        try {
            s.commit(forecrew::advance(s.view()->state, to_minutes));
        } catch (const Error &e) {
            throw to_service_error(e.code(), e.detail());
        }
        return s.view()->snapshot;
    });
}

InterventionResult SessionStore::intervene(const std::string &id, const std::string &narrative) {
    auto session = get(id);
    auto extract_fn = extractor();
    return session->write([&](Session &s) {
        const auto before = s.view()->state;
        InterventionOutcome outcome;
        try {
            outcome = forecrew::intervene(before, narrative, extract_fn, config_.limits);
        } catch (const Error &e) {
            throw to_service_error(e.code(), e.detail());
        }
        s.commit(outcome.state);
        if (outcome.error_code && outcome.error.rfind(to_string(ErrorCode::ClientUnavailable), 0) == 0) {
            throw ServiceError(503, "ClientUnavailable", outcome.error);
        }
        if (outcome.error_code) throw to_service_error(*outcome.error_code, outcome.error, outcome.diagnostics);

        InterventionResult r;
        r.deltas = outcome.deltas;
        r.diagnostics = outcome.diagnostics;
        r.plan_id = outcome.state.plan_index;
        r.makespan_before = before.plan.makespan;
        r.makespan_after = outcome.state.plan.makespan;
        if (outcome.replan) {
            r.replanned = true;
            r.delta = outcome.replan->delta;
            r.stats = stats_to_json(outcome.replan->stats);
        }
        return r;
    });
}

Json SessionStore::events(const std::string &id, std::size_t since, double wait_seconds) const {
    const auto wait = std::chrono::milliseconds(
        static_cast<long>(std::clamp(wait_seconds, 0.0, config_.max_wait_seconds) * 1000.0));
    const auto events = get(id)->events_since(since, wait);
    Json list = Json::array();
    for (const auto &e : events) list.push_back(event_to_json(e));
    return Json{{"events", std::move(list)}, {"next", since + events.size()}};
}

std::string SessionStore::submit(std::string kind, std::function<Json()> work) {
    std::string id;
    {
        std::lock_guard lock(jobs_mutex_);
        id = "j" + std::to_string(next_job_++);
        Job job;
        job.id = id;
        job.kind = std::move(kind);
        jobs_[id] = std::move(job);
    }
    auto run = [this, id, work = std::move(work)] {
        {
            std::lock_guard lock(jobs_mutex_);
            jobs_[id].status = "running";
        }
        Job done;
        try {
            done.result = work();
            done.status = "done";
        } catch (const ServiceError &e) {
            done.status = "failed";
            done.error = e.what();
            done.error_status = e.status;
        } catch (const std::exception &e) {
            done.status = "failed";
            done.error = e.what();
            done.error_status = 500;
        }
        std::lock_guard lock(jobs_mutex_);
        auto &job = jobs_[id];
        job.status = done.status;
        job.result = std::move(done.result);
        job.error = std::move(done.error);
        job.error_status = done.error_status;
    };
    std::lock_guard lock(jobs_mutex_);
    workers_.emplace_back(std::move(run));
    return id;
}

std::optional<Job> SessionStore::job(const std::string &id) const {
    std::lock_guard lock(jobs_mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second;
}

} // namespace forecrew
