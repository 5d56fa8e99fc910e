#include "forecrew/twin.hpp"

#include <algorithm>
#include <sstream>

namespace forecrew {

namespace {

constexpr std::string_view kStatusNames[] = {"Uninitiated", "Ongoing", "Completed"};
constexpr std::string_view kEventNames[] = {"Genesis",   "ClockAdvanced", "TaskStarted",       "TaskCompleted",
                                            "InterventionApplied", "Replanned", "InterventionFailed"};

TaskStatus status_at(const TaskAssignment &a, Minutes clock) {
    if (clock >= a.end) return TaskStatus::Completed;
    if (clock >= a.start) return TaskStatus::Ongoing;
    return TaskStatus::Uninitiated;
}

struct Views {
    std::map<std::string, TaskStatus> tasks;
    std::map<std::string, std::string> robots;
};

Views compute(const ProblemInstance &instance, const Plan &plan, Minutes clock) {
    Views v;
    for (const auto &u : instance.expand_units()) v.robots[u.id] = "";
    for (const auto &a : plan.tasks) {
        const auto s = status_at(a, clock);
        v.tasks[a.task] = s;
        if (s != TaskStatus::Ongoing) continue;
        for (const auto &r : a.robots) v.robots[r] = a.task;
    }
    return v;
}

void refresh(TwinState &state) {
    auto v = compute(state.instance, state.plan, state.clock);
    state.tasks = std::move(v.tasks);
    state.robots = std::move(v.robots);
}

TwinEvent make_event(const TwinState &state, EventKind kind, Minutes clock) {
    TwinEvent e;
    e.seq = state.events.size();
    e.kind = kind;
    e.clock = clock;
    return e;
}

void emit(TwinState &state, TwinEvent event) {
    event.seq = state.events.size();
    apply_event(state, event);
    state.events.push_back(std::move(event));
}

// TaskStarted/TaskCompleted events for boundaries in (from, to], in time order.
std::vector<TwinEvent> boundary_events(const TwinState &state, const Plan &plan, Minutes from, Minutes to,
                                       bool include_from) {
    struct B {
        Minutes t;
        int order; // completions before starts at the same instant
        std::size_t index;
        EventKind kind;
    };
    std::vector<B> bs;
    auto in = [&](Minutes t) { return (include_from ? t >= from : t > from) && t <= to; };
    for (std::size_t i = 0; i < plan.tasks.size(); ++i) {
        const auto &a = plan.tasks[i];
        if (in(a.start)) bs.push_back({a.start, 1, i, EventKind::TaskStarted});
        if (in(a.end)) bs.push_back({a.end, 0, i, EventKind::TaskCompleted});
    }
    std::sort(bs.begin(), bs.end(), [](const B &a, const B &b) {
        return std::tie(a.t, a.order, a.index) < std::tie(b.t, b.order, b.index);
    });
    std::vector<TwinEvent> out;
    for (const auto &b : bs) {
        auto e = make_event(state, b.kind, b.t);
        e.task = plan.tasks[b.index].task;
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace

std::string_view to_string(TaskStatus status) noexcept { return kStatusNames[static_cast<int>(status)]; }
std::string_view to_string(EventKind kind) noexcept { return kEventNames[static_cast<int>(kind)]; }

void apply_event(TwinState &state, const TwinEvent &event) {
    switch (event.kind) {
    case EventKind::Genesis:
        state = TwinState{};
        state.instance = *event.instance;
        state.plan = *event.plan;
        break;
    case EventKind::InterventionApplied:
        state.instance = apply_deltas(state.instance, event.deltas);
        break;
    case EventKind::Replanned:
        state.plan = *event.plan;
        state.plan_index += 1;
        break;
    default:
        break;
    }
    state.clock = std::max(state.clock, event.clock);
    refresh(state);
}

TwinState init_state(const ProblemInstance &instance, const Plan &plan) {
    const auto report = verify_plan(instance, plan);
    if (!report.ok()) throw Error(ErrorCode::PlanInvalid, report.summary());
    TwinState state;
    auto genesis = make_event(state, EventKind::Genesis, 0);
    genesis.instance = instance;
    genesis.plan = plan;
    emit(state, std::move(genesis));
    return state;
}

TwinState advance(const TwinState &state, Minutes to_minutes) {
    if (to_minutes < state.clock) {
        throw Error(ErrorCode::ClockRegression, "cannot move the clock from " + std::to_string(state.clock) + " back to " +
                                                    std::to_string(to_minutes));
    }
    TwinState next = state;
    if (to_minutes == state.clock) return next;
    for (auto &e : boundary_events(next, next.plan, state.clock, to_minutes, false)) emit(next, std::move(e));
    emit(next, make_event(next, EventKind::ClockAdvanced, to_minutes));
    return next;
}

Extractor rule_extractor() {
    return [](std::string_view narrative, const TaskKnowledgeBase &kb) {
        Extraction x;
        x.deltas = rule_parse(narrative, kb);
        x.attempts = 1;
        for (auto it = x.deltas.begin(); it != x.deltas.end();) {
            if (auto why = check_delta(kb.instance(), *it)) {
                x.diagnostics.push_back("dropped " + describe(*it) + ": " + *why);
                it = x.deltas.erase(it);
            } else {
                ++it;
            }
        }
        return x;
    };
}

Extractor client_extractor(LanguageModelClient &client) {
    return [&client](std::string_view narrative, const TaskKnowledgeBase &kb) { return extract(narrative, kb, client); };
}

InterventionOutcome intervene(const TwinState &state, std::string_view narrative, const Extractor &extractor,
                              const SolveLimits &limits) {
    InterventionOutcome out;
    out.state = state;
    auto fail = [&](ErrorCode code, const std::string &message) {
        out.error_code = code;
        out.error = message;
        auto e = make_event(out.state, EventKind::InterventionFailed, out.state.clock);
        e.narrative = std::string(narrative);
        e.error_code = std::string(to_string(code));
        e.error = message;
        e.diagnostics = out.diagnostics;
        emit(out.state, std::move(e));
        return out;
    };

    if (narrative.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        return fail(ErrorCode::EmptyNarrative, "EmptyNarrative: narrative is blank");
    }
    Extraction x;
    try {
        x = extractor(narrative, TaskKnowledgeBase::from_instance(state.instance));
    } catch (const Error &err) {
        const auto code = err.code() == ErrorCode::EmptyNarrative ? ErrorCode::EmptyNarrative : ErrorCode::ExtractionFailed;
        return fail(code, err.what());
    }
    out.deltas = x.deltas;
    out.diagnostics = x.diagnostics;
    if (x.deltas.empty() && !x.diagnostics.empty()) {
        return fail(ErrorCode::ExtractionFailed, "no valid constraint change in the narrative");
    }

    auto applied = make_event(out.state, EventKind::InterventionApplied, state.clock);
    applied.narrative = std::string(narrative);
    applied.deltas = x.deltas;
    applied.diagnostics = x.diagnostics;
    if (x.deltas.empty()) {
        emit(out.state, std::move(applied));
        out.applied = true;
        return out;
    }

    ProblemInstance updated;
    try {
        updated = apply_deltas(state.instance, x.deltas);
        const auto report = validate_instance(updated);
        if (!report.ok()) return fail(ErrorCode::ReplanInfeasible, "updated instance is invalid: " + report.summary());
        auto result = replan(ReplanContext{updated, state.plan, state.clock}, limits);
        if (result.plan.status == SolveStatus::Infeasible || result.plan.status == SolveStatus::Unknown) {
            return fail(ErrorCode::ReplanInfeasible,
                        "no feasible replan (" + std::string(to_string(result.plan.status)) + ")");
        }
        out.replan = std::move(result);
    } catch (const Error &err) {
        return fail(err.code() == ErrorCode::FrozenInfeasible ? ErrorCode::FrozenInfeasible : ErrorCode::ReplanInfeasible,
                    err.what());
    }

    const Plan before = state.plan;
    emit(out.state, std::move(applied));
    auto replanned = make_event(out.state, EventKind::Replanned, state.clock);
    replanned.plan = out.replan->plan;
    replanned.delta = out.replan->delta;
    replanned.makespan_before = before.makespan;
    emit(out.state, std::move(replanned));
    out.applied = true;
    return out;
}

TwinState replay(const std::vector<TwinEvent> &events) {
    if (events.empty() || events.front().kind != EventKind::Genesis) {
        throw Error(ErrorCode::ParseError, "event log must start with a Genesis event");
    }
    TwinState state;
    for (const auto &e : events) {
        apply_event(state, e);
        state.events.push_back(e);
    }
    return state;
}

bool statuses_consistent(const TwinState &state) {
    const auto v = compute(state.instance, state.plan, state.clock);
    return v.tasks == state.tasks && v.robots == state.robots;
}

Json event_to_json(const TwinEvent &e) {
    Json j = {{"seq", e.seq}, {"kind", std::string(to_string(e.kind))}, {"clock", e.clock}};
    switch (e.kind) {
    case EventKind::Genesis:
        j["instance"] = instance_to_json(*e.instance);
        j["plan"] = plan_to_json(*e.plan);
        break;
    case EventKind::TaskStarted:
    case EventKind::TaskCompleted:
        j["task"] = e.task;
        break;
    case EventKind::InterventionApplied:
        j["narrative"] = e.narrative;
        j["changes"] = deltas_to_json(e.deltas)["changes"];
        j["diagnostics"] = e.diagnostics;
        break;
    case EventKind::Replanned:
        j["plan"] = plan_to_json(*e.plan);
        j["reassignments"] = e.delta.reassignments;
        j["retiming_minutes"] = e.delta.retiming;
        j["makespan_before"] = e.makespan_before;
        j["makespan_after"] = e.plan->makespan;
        break;
    case EventKind::InterventionFailed:
        j["narrative"] = e.narrative;
        j["error_code"] = e.error_code;
        j["error"] = e.error;
        j["diagnostics"] = e.diagnostics;
        break;
    case EventKind::ClockAdvanced:
        break;
    }
    return j;
}

TwinEvent event_from_json(const Json &j) {
    TwinEvent e;
    try {
        e.seq = j.at("seq").get<std::uint64_t>();
        const auto kind = j.at("kind").get<std::string>();
        const auto it = std::find(std::begin(kEventNames), std::end(kEventNames), kind);
        if (it == std::end(kEventNames)) throw Error(ErrorCode::ParseError, "unknown event kind " + kind);
        e.kind = static_cast<EventKind>(it - std::begin(kEventNames));
        e.clock = j.at("clock").get<Minutes>();
        e.task = j.value("task", "");
        if (j.contains("instance")) e.instance = instance_from_json(j.at("instance"));
        if (j.contains("plan")) e.plan = plan_from_json(j.at("plan"));
        e.narrative = j.value("narrative", "");
        if (j.contains("changes")) e.deltas = load_deltas(Json{{"changes", j.at("changes")}}.dump());
        if (j.contains("diagnostics")) e.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
        e.delta.reassignments = j.value("reassignments", std::int64_t{0});
        e.delta.retiming = j.value("retiming_minutes", Minutes{0});
        e.makespan_before = j.value("makespan_before", Minutes{0});
        e.error_code = j.value("error_code", "");
        e.error = j.value("error", "");
    } catch (const Json::exception &ex) {
        throw Error(ErrorCode::ParseError, std::string("event: ") + ex.what());
    }
    if ((e.kind == EventKind::Genesis && (!e.instance || !e.plan)) || (e.kind == EventKind::Replanned && !e.plan)) {
        throw Error(ErrorCode::ParseError, "event " + std::string(to_string(e.kind)) + " lacks its payload");
    }
    return e;
}

std::string events_to_ndjson(const std::vector<TwinEvent> &events) {
    std::string out;
    for (const auto &e : events) {
        out += event_to_json(e).dump();
        out += '\n';
    }
    return out;
}

std::vector<TwinEvent> events_from_ndjson(std::string_view text) {
    std::vector<TwinEvent> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(event_from_json(Json::parse(line)));
        } catch (const Json::parse_error &ex) {
            throw Error(ErrorCode::ParseError, "event log line " + std::to_string(number) + ": " + ex.what());
        }
    }
    return out;
}

Json snapshot_to_json(const TwinState &state) {
    Json tasks = Json::object(), robots = Json::object();
    for (const auto &a : state.plan.tasks) tasks[a.task] = std::string(to_string(state.tasks.at(a.task)));
    for (const auto &[unit, task] : state.robots) {
        robots[unit] = task.empty() ? Json{{"status", "Idle"}} : Json{{"status", "Executing"}, {"task", task}};
    }
    return Json{{"clock", state.clock},
                {"plan_index", state.plan_index},
                {"tasks", std::move(tasks)},
                {"robots", std::move(robots)},
                {"plan", plan_to_json(state.plan)},
                {"instance", instance_to_json(state.instance)},
                {"event_count", state.events.size()}};
}

} // namespace forecrew
