#include "forecrew/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace forecrew {

namespace {

[[noreturn]] void field_error(const std::string &where, const std::string &what) {
    throw Error(ErrorCode::ParseError, "field " + where + ": " + what);
}

const Json &require(const Json &obj, const char *key, const std::string &where) {
    if (!obj.is_object()) {
        field_error(where, "expected an object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        field_error(where + "/" + key, "missing");
    }
    return *it;
}

std::string get_string(const Json &v, const std::string &where) {
    if (!v.is_string()) {
        field_error(where, "expected a string");
    }
    return v.get<std::string>();
}

std::int64_t get_int(const Json &v, const std::string &where) {
    if (v.is_number_integer()) {
        return v.get<std::int64_t>();
    }
    if (v.is_number_float()) {
        double d = v.get<double>();
        if (std::floor(d) == d) {
            return static_cast<std::int64_t>(d);
        }
    }
    field_error(where, "expected an integer");
}

double get_number(const Json &v, const std::string &where) {
    if (!v.is_number()) {
        field_error(where, "expected a number");
    }
    return v.get<double>();
}

Json parse_text(std::string_view text) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error &e) {
        std::size_t line = 1;
        std::size_t limit = std::min<std::size_t>(e.byte, text.size());
        for (std::size_t i = 0; i + 1 < limit; ++i) {
            if (text[i] == '\n') {
                ++line;
            }
        }
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + e.what());
    }
}

// Amount vectors are written as {name: amount} maps; arrays indexed by capability id are also read.
std::vector<int> read_amounts(const Json &v, const std::vector<Capability> &caps, const std::string &where) {
    std::vector<int> out(caps.size(), 0);
    if (v.is_array()) {
        out.clear();
        for (std::size_t k = 0; k < v.size(); ++k) {
            out.push_back(static_cast<int>(get_int(v[k], where + "/" + std::to_string(k))));
        }
        return out;
    }
    if (!v.is_object()) {
        field_error(where, "expected a capability map or array");
    }
    for (const auto &[name, amount] : v.items()) {
        auto it = std::find_if(caps.begin(), caps.end(), [&](const Capability &c) { return c.name == name; });
        if (it == caps.end()) {
            field_error(where + "/" + name, "unknown capability");
        }
        out[static_cast<std::size_t>(it - caps.begin())] = static_cast<int>(get_int(amount, where + "/" + name));
    }
    return out;
}

Json write_amounts(const std::vector<int> &amounts, const std::vector<Capability> &caps) {
    if (amounts.size() != caps.size()) {
        return Json(amounts);
    }
    Json out = Json::object();
    for (std::size_t k = 0; k < amounts.size(); ++k) {
        if (amounts[k] != 0) {
            out[caps[k].name] = amounts[k];
        }
    }
    return out;
}

Minutes read_time(const Json &obj, const char *minutes_key, const char *hours_key, const std::string &where,
                  bool required) {
    const bool has_m = obj.contains(minutes_key);
    const bool has_h = obj.contains(hours_key);
    if (has_m && has_h) {
        field_error(where, std::string("give exactly one of '") + minutes_key + "' or '" + hours_key + "'");
    }
    if (has_m) {
        return get_int(obj.at(minutes_key), where + "/" + minutes_key);
    }
    if (has_h) {
        return minutes_from_hours(get_number(obj.at(hours_key), where + "/" + hours_key));
    }
    if (required) {
        field_error(where, std::string("missing '") + minutes_key + "' or '" + hours_key + "'");
    }
    return 0;
}

} // namespace

Minutes minutes_from_hours(double hours) { return static_cast<Minutes>(std::llround(hours * 60.0)); }

Json hours_value(Minutes minutes) {
    if (minutes % 60 == 0) {
        return minutes / 60;
    }
    return static_cast<double>(minutes) / 60.0;
}

// ---------------------------------------------------------------------------
// Instances

ProblemInstance instance_from_json(const Json &doc) {
    ProblemInstance inst;
    if (!doc.is_object()) {
        field_error("/", "expected an object");
    }
    if (auto it = doc.find("capabilities"); it != doc.end()) {
        if (!it->is_array()) field_error("/capabilities", "expected an array");
        for (std::size_t k = 0; k < it->size(); ++k) {
            const auto &c = (*it)[k];
            const std::string where = "/capabilities/" + std::to_string(k);
            if (c.is_string()) {
                inst.capabilities.push_back({static_cast<int>(k), c.get<std::string>()});
            } else {
                inst.capabilities.push_back({static_cast<int>(get_int(require(c, "id", where), where + "/id")),
                                             get_string(require(c, "name", where), where + "/name")});
            }
        }
    }
    if (auto it = doc.find("robot_types"); it != doc.end()) {
        if (!it->is_array()) field_error("/robot_types", "expected an array");
        for (std::size_t r = 0; r < it->size(); ++r) {
            const auto &j = (*it)[r];
            const std::string where = "/robot_types/" + std::to_string(r);
            RobotType rt;
            rt.id = get_string(require(j, "id", where), where + "/id");
            rt.capabilities = read_amounts(require(j, "capabilities", where), inst.capabilities, where + "/capabilities");
            rt.count = static_cast<int>(get_int(require(j, "count", where), where + "/count"));
            inst.robot_types.push_back(std::move(rt));
        }
    }
    if (auto it = doc.find("tasks"); it != doc.end()) {
        if (!it->is_array()) field_error("/tasks", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto &j = (*it)[i];
            const std::string where = "/tasks/" + std::to_string(i);
            Task t;
            t.id = get_string(require(j, "id", where), where + "/id");
            if (j.contains("description")) t.description = get_string(j.at("description"), where + "/description");
            t.duration = read_time(j, "minutes", "hours", where, true);
            if (j.contains("requirements")) {
                t.requirements = read_amounts(j.at("requirements"), inst.capabilities, where + "/requirements");
            } else {
                t.requirements.assign(inst.capabilities.size(), 0);
            }
            if (j.contains("predecessors")) {
                const auto &p = j.at("predecessors");
                if (!p.is_array()) field_error(where + "/predecessors", "expected an array");
                for (std::size_t k = 0; k < p.size(); ++k) {
                    t.predecessors.push_back(get_string(p[k], where + "/predecessors/" + std::to_string(k)));
                }
            }
            if (j.contains("window") && !j.at("window").is_null()) {
                const auto &w = j.at("window");
                const std::string ww = where + "/window";
                if (!w.is_object()) field_error(ww, "expected an object");
                TimeWindow tw;
                tw.earliest_start = read_time(w, "earliest_start_minutes", "earliest_start_hours", ww, false);
                if (w.contains("latest_end_minutes") || w.contains("latest_end_hours")) {
                    tw.latest_end = read_time(w, "latest_end_minutes", "latest_end_hours", ww, true);
                }
                t.window = tw;
            }
            if (j.contains("aliases")) {
                const auto &a = j.at("aliases");
                if (!a.is_array()) field_error(where + "/aliases", "expected an array");
                for (std::size_t k = 0; k < a.size(); ++k) {
                    t.aliases.push_back(get_string(a[k], where + "/aliases/" + std::to_string(k)));
                }
            }
            inst.tasks.push_back(std::move(t));
        }
    }
    if (auto it = doc.find("conflicts"); it != doc.end()) {
        if (!it->is_array()) field_error("/conflicts", "expected an array");
        for (std::size_t k = 0; k < it->size(); ++k) {
            const auto &c = (*it)[k];
            const std::string where = "/conflicts/" + std::to_string(k);
            if (!c.is_array() || c.size() != 2) field_error(where, "expected a pair of task ids");
            inst.conflicts.emplace_back(get_string(c[0], where + "/0"), get_string(c[1], where + "/1"));
        }
    }
    if (auto it = doc.find("weights"); it != doc.end()) {
        const auto &w = *it;
        if (!w.is_object()) field_error("/weights", "expected an object");
        auto weight = [&](const char *key, std::int64_t &slot) {
            if (w.contains(key)) slot = get_int(w.at(key), std::string("/weights/") + key);
        };
        weight("makespan", inst.weights.makespan);
        weight("completion", inst.weights.completion);
        weight("robots", inst.weights.robots);
        weight("reassignment", inst.weights.reassignment);
        weight("retiming", inst.weights.retiming);
    }
    if (auto it = doc.find("horizon_minutes"); it != doc.end() && !it->is_null()) {
        inst.horizon = get_int(*it, "/horizon_minutes");
    }
    return inst;
}

Json instance_to_json(const ProblemInstance &inst) {
    Json doc = Json::object();
    Json caps = Json::array();
    bool dense = true;
    for (std::size_t k = 0; k < inst.capabilities.size(); ++k) {
        dense = dense && inst.capabilities[k].id == static_cast<int>(k);
    }
    for (const auto &c : inst.capabilities) {
        if (dense) {
            caps.push_back(c.name);
        } else {
            caps.push_back(Json{{"id", c.id}, {"name", c.name}});
        }
    }
    doc["capabilities"] = caps;
    Json types = Json::array();
    for (const auto &rt : inst.robot_types) {
        types.push_back(Json{{"id", rt.id},
                             {"capabilities", dense ? write_amounts(rt.capabilities, inst.capabilities) : Json(rt.capabilities)},
                             {"count", rt.count}});
    }
    doc["robot_types"] = types;
    Json tasks = Json::array();
    for (const auto &t : inst.tasks) {
        Json j = Json::object();
        j["id"] = t.id;
        j["description"] = t.description;
        j["minutes"] = t.duration;
        j["requirements"] = dense ? write_amounts(t.requirements, inst.capabilities) : Json(t.requirements);
        j["predecessors"] = t.predecessors;
        if (t.window) {
            Json w = Json::object();
            w["earliest_start_minutes"] = t.window->earliest_start;
            if (t.window->latest_end) {
                w["latest_end_minutes"] = *t.window->latest_end;
            }
            j["window"] = w;
        }
        if (!t.aliases.empty()) {
            j["aliases"] = t.aliases;
        }
        tasks.push_back(std::move(j));
    }
    doc["tasks"] = tasks;
    Json conflicts = Json::array();
    for (const auto &[a, b] : inst.conflicts) {
        conflicts.push_back(Json::array({a, b}));
    }
    doc["conflicts"] = conflicts;
    doc["weights"] = Json{{"makespan", inst.weights.makespan},
                          {"completion", inst.weights.completion},
                          {"robots", inst.weights.robots},
                          {"reassignment", inst.weights.reassignment},
                          {"retiming", inst.weights.retiming}};
    doc["horizon_minutes"] = inst.horizon ? Json(*inst.horizon) : Json(nullptr);
    return doc;
}

ProblemInstance load_instance(std::string_view text) { return instance_from_json(parse_text(text)); }

std::string save_instance(const ProblemInstance &instance) { return instance_to_json(instance).dump(2) + "\n"; }

ProblemInstance load_instance_file(const std::string &path) { return load_instance(read_file(path)); }

// ---------------------------------------------------------------------------
// Deltas

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '#'; }

} // namespace

std::string normalize_json_text(std::string_view text) {
    std::string_view body = text;
    // Keep only the outermost object so fences and chatter around it are ignored.
    auto open = body.find('{');
    auto close = body.rfind('}');
    if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
        body = body.substr(open, close - open + 1);
    }
    std::string out;
    out.reserve(body.size() + 16);
    std::size_t i = 0;
    while (i < body.size()) {
        char c = body[i];
        if (c == '"') {
            std::size_t j = i + 1;
            while (j < body.size() && body[j] != '"') {
                j += body[j] == '\\' ? 2 : 1;
            }
            out.append(body.substr(i, std::min(j + 1, body.size()) - i));
            i = j + 1;
            continue;
        }
        if (c == '\'') {
            // Single-quoted strings become double-quoted.
            std::size_t j = body.find('\'', i + 1);
            if (j == std::string_view::npos) j = body.size();
            out += '"';
            out.append(body.substr(i + 1, j - i - 1));
            out += '"';
            i = j + 1;
            continue;
        }
        const bool exponent = (c == 'e' || c == 'E') && !out.empty() &&
                              std::isdigit(static_cast<unsigned char>(out.back()));
        if (is_ident_start(c) && !exponent) {
            std::size_t j = i;
            while (j < body.size() && is_ident_char(body[j])) ++j;
            std::string_view word = body.substr(i, j - i);
            if (word == "true" || word == "false" || word == "null") {
                out.append(word);
            } else {
                out += '"';
                out.append(word);
                out += '"';
            }
            i = j;
            continue;
        }
        if (c == '+' || c == '-') {
            std::size_t j = i + 1;
            while (j < body.size() && (body[j] == ' ' || body[j] == '\t')) ++j;
            const bool numeric = j < body.size() && (std::isdigit(static_cast<unsigned char>(body[j])) || body[j] == '.');
            if (numeric) {
                if (c == '-') out += '-';
                i = j;
                if (body[i] == '.') out += '0';
                continue;
            }
            out += '"';
            out += c;
            out += '"';
            ++i;
            continue;
        }
        if (c == '.' && i + 1 < body.size() && std::isdigit(static_cast<unsigned char>(body[i + 1])) &&
            (out.empty() || !std::isdigit(static_cast<unsigned char>(out.back())))) {
            out += "0.";
            ++i;
            continue;
        }
        out += c;
        ++i;
    }
    return out;
}

namespace {

std::string param_string(const Json &params, std::size_t k, const char *name, const std::string &where) {
    if (params.is_object()) {
        if (!params.contains(name)) field_error(where + "/" + name, "missing");
        return get_string(params.at(name), where + "/" + name);
    }
    return get_string(params.at(k), where + "/" + std::to_string(k));
}

const Json &param_value(const Json &params, std::size_t k, const char *name, const std::string &where) {
    if (params.is_object()) {
        if (!params.contains(name)) field_error(where + "/" + name, "missing");
        return params.at(name);
    }
    return params.at(k);
}

std::string param_where(const Json &params, std::size_t k, const char *name, const std::string &where) {
    return params.is_object() ? where + "/" + name : where + "/" + std::to_string(k);
}

} // namespace

ConstraintDelta delta_from_json(const Json &entry, const std::string &where) {
    if (!entry.is_object()) field_error(where, "expected an object");
    const Json &type_v = require(entry, "constraint_type", where);
    std::int64_t type = 0;
    if (type_v.is_string()) {
        try {
            type = std::stoll(type_v.get<std::string>());
        } catch (const std::exception &) {
            field_error(where + "/constraint_type", "expected a number 1-5");
        }
    } else {
        type = get_int(type_v, where + "/constraint_type");
    }
    Json params = require(entry, "parameters", where);
    const std::string pw = where + "/parameters";
    // Robot count objects may name the type field either way.
    if (params.is_object() && params.contains("new_robot_type_id") && !params.contains("robot_type_id")) {
        params["robot_type_id"] = params["new_robot_type_id"];
    }
    auto arity = [&](std::size_t n) {
        if (params.is_array() && params.size() != n) {
            field_error(pw, "expected " + std::to_string(n) + " parameters, got " + std::to_string(params.size()));
        }
        if (!params.is_array() && !params.is_object()) {
            field_error(pw, "expected an array");
        }
    };
    switch (type) {
    case 1: {
        arity(3);
        DependencyChange c;
        c.task = param_string(params, 0, "task_id", pw);
        const Json &succ = param_value(params, 1, "successor", pw);
        if (succ.is_array()) {
            field_error(param_where(params, 1, "successor", pw), "successors must not be nested");
        }
        c.successor = get_string(succ, param_where(params, 1, "successor", pw));
        const Json &sign = param_value(params, 2, "sign", pw);
        const std::string sw = param_where(params, 2, "sign", pw);
        if (sign.is_string() && (sign == "+" || sign == "-")) {
            c.add = sign == "+";
        } else if (sign.is_number() && std::abs(sign.get<double>()) == 1.0) {
            c.add = sign.get<double>() > 0;
        } else {
            field_error(sw, "expected \"+\" or \"-\"");
        }
        return c;
    }
    case 2: {
        arity(2);
        DurationChange c;
        c.task = param_string(params, 0, "task_id", pw);
        c.duration = minutes_from_hours(get_number(param_value(params, 1, "new_duration", pw),
                                                   param_where(params, 1, "new_duration", pw)));
        if (c.duration <= 0) field_error(param_where(params, 1, "new_duration", pw), "duration must be positive");
        return c;
    }
    case 3: {
        arity(2);
        StartTimeChange c;
        c.task = param_string(params, 0, "task_id", pw);
        c.shift = minutes_from_hours(get_number(param_value(params, 1, "start_time_change", pw),
                                                param_where(params, 1, "start_time_change", pw)));
        return c;
    }
    case 4: {
        arity(2);
        RobotCountChange c;
        c.robot_type = param_string(params, 0, "robot_type_id", pw);
        c.change = static_cast<int>(get_int(param_value(params, 1, "robot_number_change", pw),
                                            param_where(params, 1, "robot_number_change", pw)));
        return c;
    }
    case 5: {
        arity(2);
        ConflictChange c;
        c.first = param_string(params, 0, "task_id1", pw);
        c.second = param_string(params, 1, "task_id2", pw);
        return c;
    }
    default:
        field_error(where + "/constraint_type", "unknown constraint type " + std::to_string(type));
    }
}

Json delta_to_json(const ConstraintDelta &delta) {
    Json params = std::visit(
        [](const auto &c) -> Json {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, DependencyChange>) {
                return Json::array({c.task, c.successor, c.add ? "+" : "-"});
            } else if constexpr (std::is_same_v<T, DurationChange>) {
                return Json::array({c.task, hours_value(c.duration)});
            } else if constexpr (std::is_same_v<T, StartTimeChange>) {
                return Json::array({c.task, hours_value(c.shift)});
            } else if constexpr (std::is_same_v<T, RobotCountChange>) {
                return Json::array({c.robot_type, c.change});
            } else {
                return Json::array({c.first, c.second});
            }
        },
        delta.change);
    Json out = Json::object();
    out["constraint_type"] = static_cast<int>(delta.kind());
    out["parameters"] = std::move(params);
    return out;
}

Json deltas_to_json(const std::vector<ConstraintDelta> &deltas) {
    Json changes = Json::array();
    for (const auto &d : deltas) {
        changes.push_back(delta_to_json(d));
    }
    return Json{{"changes", changes}};
}

std::string save_deltas(const std::vector<ConstraintDelta> &deltas) { return deltas_to_json(deltas).dump(2) + "\n"; }

namespace {

const Json &changes_array(const Json &doc) {
    if (!doc.is_object() || !doc.contains("changes")) {
        field_error("/changes", "missing");
    }
    const Json &changes = doc.at("changes");
    if (!changes.is_array()) field_error("/changes", "expected an array");
    return changes;
}

} // namespace

DeltaParseResult parse_deltas_lenient(std::string_view text) {
    const Json doc = parse_text(normalize_json_text(text));
    const Json &changes = changes_array(doc);
    DeltaParseResult result;
    for (std::size_t k = 0; k < changes.size(); ++k) {
        try {
            result.deltas.push_back(delta_from_json(changes[k], "/changes/" + std::to_string(k)));
        } catch (const Error &e) {
            result.diagnostics.push_back(e.detail());
        }
    }
    return result;
}

std::vector<ConstraintDelta> load_deltas(std::string_view text) {
    const Json doc = parse_text(text);
    const Json &changes = changes_array(doc);
    std::vector<ConstraintDelta> out;
    for (std::size_t k = 0; k < changes.size(); ++k) {
        out.push_back(delta_from_json(changes[k], "/changes/" + std::to_string(k)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Plans

Json plan_to_json(const Plan &plan, const Json &stats) {
    Json assignments = Json::object();
    Json times = Json::object();
    for (const auto &t : plan.tasks) {
        assignments[t.task] = t.robots;
        times[t.task] = Json::array({t.start, t.end});
    }
    Json doc = Json::object();
    doc["assignments"] = assignments;
    doc["task_times"] = times;
    doc["makespan_minutes"] = plan.makespan;
    doc["objective"] = plan.objective;
    doc["status"] = std::string(to_string(plan.status));
    doc["gap"] = plan.gap;
    doc["stats"] = stats;
    return doc;
}

Plan plan_from_json(const Json &doc) {
    Plan plan;
    const Json &assignments = require(doc, "assignments", "");
    const Json &times = require(doc, "task_times", "");
    if (!assignments.is_object()) field_error("/assignments", "expected an object");
    if (!times.is_object()) field_error("/task_times", "expected an object");
    for (const auto &[task, span] : times.items()) {
        const std::string where = "/task_times/" + task;
        if (!span.is_array() || span.size() != 2) field_error(where, "expected [start, end]");
        TaskAssignment a;
        a.task = task;
        a.start = get_int(span[0], where + "/0");
        a.end = get_int(span[1], where + "/1");
        if (assignments.contains(task)) {
            const auto &units = assignments.at(task);
            if (!units.is_array()) field_error("/assignments/" + task, "expected an array");
            for (std::size_t k = 0; k < units.size(); ++k) {
                a.robots.push_back(get_string(units[k], "/assignments/" + task + "/" + std::to_string(k)));
            }
            std::sort(a.robots.begin(), a.robots.end());
        }
        plan.tasks.push_back(std::move(a));
    }
    for (const auto &[task, units] : assignments.items()) {
        if (!times.contains(task)) field_error("/task_times/" + task, "missing times for assigned task");
    }
    plan.makespan = get_int(require(doc, "makespan_minutes", ""), "/makespan_minutes");
    if (doc.contains("objective")) plan.objective = get_int(doc.at("objective"), "/objective");
    if (doc.contains("status")) {
        auto s = parse_solve_status(get_string(doc.at("status"), "/status"));
        if (!s) field_error("/status", "unknown status");
        plan.status = *s;
    }
    if (doc.contains("gap")) plan.gap = get_number(doc.at("gap"), "/gap");
    return plan;
}

Plan load_plan(std::string_view text) { return plan_from_json(parse_text(text)); }

std::string save_plan(const Plan &plan, const Json &stats) { return plan_to_json(plan, stats).dump(2) + "\n"; }

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string &path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::ParseError, "cannot write '" + path + "'");
    }
    out << content;
}

} // namespace forecrew
