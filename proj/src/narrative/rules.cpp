#include "forecrew/narrative.hpp"

#include <cmath>
#include <map>
#include <regex>

#include "text.hpp"

namespace forecrew {

namespace {

const std::map<std::string, double> &number_words() {
    static const std::map<std::string, double> table = {
        {"a", 1},     {"an", 1},     {"one", 1},   {"another", 1}, {"single", 1}, {"two", 2},
        {"three", 3}, {"four", 4},   {"five", 5},  {"six", 6},     {"seven", 7},  {"eight", 8},
        {"nine", 9},  {"ten", 10},   {"eleven", 11}, {"twelve", 12},
    };
    return table;
}

std::optional<double> number_value(const std::string &token) {
    if (token.empty()) return std::nullopt;
    if (std::isdigit(static_cast<unsigned char>(token[0]))) return std::stod(token);
    auto it = number_words().find(token);
    if (it == number_words().end()) return std::nullopt;
    return it->second;
}

const std::string kNumber = R"((\d+(?:\.\d+)?|an|a|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve))";

// First time expression in the clause, in minutes.
std::optional<Minutes> find_time(const std::string &s) {
    struct Pattern {
        std::regex re;
        int kind; // 0: fixed minutes, 1: number + unit, 2: number and a half hours
        Minutes fixed;
    };
    static const std::vector<Pattern> patterns = [] {
        std::vector<Pattern> p;
        p.push_back({std::regex(R"(\b(an|one) hour and a half\b)"), 0, 90});
        p.push_back({std::regex(R"(\bhalf an hour\b)"), 0, 30});
        p.push_back({std::regex(R"(\b(a )?quarter of an hour\b)"), 0, 15});
        p.push_back({std::regex("\\b" + kNumber + R"( and a half hours?\b)"), 2, 0});
        p.push_back({std::regex("\\b" + kNumber + R"(\s*-?\s*(hours?|hrs?|h|minutes?|mins?)\b)"), 1, 0});
        return p;
    }();
    std::optional<Minutes> best;
    std::ptrdiff_t best_pos = -1;
    for (const auto &p : patterns) {
        std::smatch m;
        if (!std::regex_search(s, m, p.re)) continue;
        const auto pos = m.position(0);
        if (best_pos >= 0 && pos >= best_pos) continue;
        Minutes value = p.fixed;
        if (p.kind == 1) {
            const double n = *number_value(m[1].str());
            const bool hours = m[2].str()[0] == 'h';
            value = std::llround(hours ? n * 60.0 : n);
        } else if (p.kind == 2) {
            value = std::llround((*number_value(m[1].str()) + 0.5) * 60.0);
        }
        best = value;
        best_pos = pos;
    }
    return best;
}

// Absolute clock targets within the current hour ("until half past the hour"), in minutes.
std::optional<Minutes> find_clock(const std::string &s) {
    if (!text::contains(s, "until")) return std::nullopt;
    if (text::contains(s, "half past the hour")) return 30;
    if (text::contains(s, "quarter past the hour")) return 15;
    if (text::contains(s, "quarter to the hour")) return 45;
    if (text::contains(s, "top of the next hour") || text::contains(s, "the next hour")) return 60;
    return std::nullopt;
}

bool has_any(const std::string &s, std::initializer_list<const char *> needles) {
    for (const char *n : needles) {
        if (text::contains(s, n)) return true;
    }
    return false;
}

bool has_word(const std::string &s, const std::string &w) {
    std::size_t pos = 0;
    while ((pos = s.find(w, pos)) != std::string::npos) {
        if (text::word_start(s, pos) && text::word_end(s, pos + w.size())) return true;
        ++pos;
    }
    return false;
}

std::vector<std::string> split_clauses(const std::string &low) {
    static const std::vector<std::string> joiners = {
        ", and ", ", followed by ", " additionally, ", " furthermore, ", " moreover, ", " meanwhile, ", "; ",
    };
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        auto t = text::trim(cur);
        while (!t.empty() && (t.front() == ',' || t.front() == '.')) t = text::trim(t.substr(1));
        for (const char *lead : {"additionally,", "furthermore,", "moreover,", "meanwhile,", "however,"}) {
            const std::string_view l(lead);
            if (t.compare(0, l.size(), l) == 0) t = text::trim(t.substr(l.size()));
        }
        if (!t.empty()) out.push_back(t);
        cur.clear();
    };
    std::size_t i = 0;
    while (i < low.size()) {
        const char c = low[i];
        if (c == '.' || c == '!' || c == '?' || c == ';') {
            const bool decimal = c == '.' && i > 0 && i + 1 < low.size() &&
                                 std::isdigit(static_cast<unsigned char>(low[i - 1])) &&
                                 std::isdigit(static_cast<unsigned char>(low[i + 1]));
            if (!decimal) {
                flush();
                ++i;
                continue;
            }
        }
        bool joined = false;
        for (const auto &j : joiners) {
            if (low.compare(i, j.size(), j) == 0) {
                flush();
                i += j.size();
                joined = true;
                break;
            }
        }
        if (joined) continue;
        cur += c;
        ++i;
    }
    flush();
    return out;
}

struct RobotRef {
    std::vector<std::string> capabilities;
    std::string id;
    int count = 1;
    bool seen = false;
};

RobotRef robot_ref(const std::string &clause, const TaskKnowledgeBase &kb) {
    RobotRef r;
    std::size_t first_robot = std::string::npos;
    for (std::size_t pos = clause.find("robot"); pos != std::string::npos; pos = clause.find("robot", pos + 1)) {
        if (text::word_start(clause, pos)) {
            first_robot = pos;
            break;
        }
    }
    for (const auto &e : kb.robots()) {
        if (has_word(clause, text::lower(e.id))) {
            r.id = e.id;
            r.seen = true;
        }
    }
    r.capabilities = kb.find_capabilities(clause);
    if (first_robot != std::string::npos) r.seen = true;
    // Count: last number word before the first "robot".
    static const std::regex num("\\b(\\d+|an|a|one|another|single|two|three|four|five|six|seven|eight|nine|ten)\\b");
    const std::string head = clause.substr(0, first_robot == std::string::npos ? clause.size() : first_robot);
    for (auto it = std::sregex_iterator(head.begin(), head.end(), num); it != std::sregex_iterator(); ++it) {
        r.count = static_cast<int>(*number_value((*it)[1].str()));
    }
    return r;
}

} // namespace

std::vector<ConstraintDelta> rule_parse(std::string_view narrative, const TaskKnowledgeBase &kb) {
    std::vector<ConstraintDelta> out;
    std::string low = text::lower(narrative);
    for (auto &c : low) {
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    }
    std::string last_task;
    RobotRef carried;

    for (const auto &clause : split_clauses(low)) {
        const auto mentions = kb.find_tasks(clause);
        std::vector<std::string> tasks;
        for (const auto &m : mentions) tasks.push_back(m.id);
        const auto time = find_time(clause);
        const RobotRef robots = robot_ref(clause, kb);
        const std::string *task = !tasks.empty() ? &tasks.front() : (!last_task.empty() ? &last_task : nullptr);
        auto need_task = [&]() -> const std::string & {
            if (!task) throw Error(ErrorCode::UnresolvedReference, "no task referenced in \"" + clause + "\"");
            return *task;
        };
        auto need_time = [&]() -> Minutes {
            if (!time) throw Error(ErrorCode::UnresolvedReference, "no time amount in \"" + clause + "\"");
            return *time;
        };

        const bool conflict_cue = has_any(clause, {"at the same time", "simultaneously", "concurrently", "overlap",
                                                   "cannot be carried out while", "cannot proceed while"});
        const bool dep_removed = has_any(clause, {"no longer needs to wait for", "no longer need to wait for",
                                                  "no longer has to wait for", "without waiting for",
                                                  "no longer depends on", "no longer dependent on"});
        const bool dep_before = has_word(clause, "before");
        const bool dep_after = has_any(clause, {"wait until", "wait for", "depends on", "dependent on"}) ||
                               has_word(clause, "after");
        const bool robot_minus = has_any(clause, {"out of service", "out of power", "ran out", "run out", "broke down",
                                                  "broken down", "malfunction", "unavailable", "not available",
                                                  "taken offline", "removed", "withdrawn", "decommissioned"});
        const bool robot_plus = has_any(clause, {"additional", "arrived", "joined", "join the", "deployed",
                                                 "brought in", "secured"}) ||
                                has_word(clause, "more") || has_word(clause, "extra") || has_word(clause, "added");
        const bool duration_cue = has_any(clause, {"takes ", "take ", "taking ", "instead of", "duration",
                                                   "to complete", "will last", "lasts "});
        const bool start_minus = has_any(clause, {"earlier", "ahead of schedule", "sooner", "brought forward",
                                                  "in advance"});
        const bool start_plus = has_any(clause, {"delayed", "delay", "arrive in", "arriving in", "postponed",
                                                 "pushed back", "from starting for", "hold off"}) ||
                                has_word(clause, "late") || has_word(clause, "later");

        if (conflict_cue && tasks.size() >= 2) {
            out.emplace_back(ConflictChange{tasks[0], tasks[1]});
        } else if (tasks.size() >= 2 && dep_removed) {
            out.emplace_back(DependencyChange{tasks[1], tasks[0], false});
        } else if (tasks.size() >= 2 && dep_before) {
            out.emplace_back(DependencyChange{tasks[0], tasks[1], true});
        } else if (tasks.size() >= 2 && dep_after) {
            out.emplace_back(DependencyChange{tasks[1], tasks[0], true});
        } else if ((robot_minus || robot_plus) &&
                   (robots.seen || (carried.seen && tasks.empty() && !time))) {
            const RobotRef &ref = robots.seen ? robots : carried;
            std::string type = ref.id;
            if (type.empty()) {
                auto resolved = kb.resolve_robot(ref.capabilities);
                if (!resolved) {
                    throw Error(ErrorCode::UnresolvedReference, "cannot tell which robot type \"" + clause + "\" means");
                }
                type = *resolved;
            }
            out.emplace_back(RobotCountChange{type, robot_minus ? -ref.count : ref.count});
            carried = RobotRef{};
        } else if (duration_cue && time) {
            out.emplace_back(DurationChange{need_task(), need_time()});
        } else if (start_plus && find_clock(clause)) {
            const auto &id = need_task();
            const auto &t = kb.instance().tasks[*kb.instance().task_index(id)];
            const Minutes earliest = t.window ? t.window->earliest_start : 0;
            out.emplace_back(StartTimeChange{id, *find_clock(clause) - earliest});
        } else if ((start_minus || start_plus) && time) {
            out.emplace_back(StartTimeChange{need_task(), start_minus ? -need_time() : need_time()});
        } else if (robots.seen) {
            carried = robots;
        }
        if (!tasks.empty()) last_task = tasks.back();
    }
    return out;
}

} // namespace forecrew
