#include "forecrew/narrative.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "text.hpp"

namespace forecrew {

namespace {

// Everyday phrasings of capability names, keyed by lower-case capability name.
const std::map<std::string, std::vector<std::string>> &lexicon() {
    static const std::map<std::string, std::vector<std::string>> table = {
        {"cargo container", {"cargo containers", "cargo container", "cargo bins", "cargo bin"}},
        {"high-payload",
         {"high-payload", "high payload", "heavy loads", "heavy payloads", "high-capacity arms", "high-capacity arm",
          "heavy-lift arms", "heavy-lift arm"}},
        {"precise parallel gripper",
         {"precise parallel grippers", "precise parallel gripper", "fine, precise tasks", "precise tasks",
          "fine-movement grippers", "fine-movement gripper", "precision grippers", "precision gripper"}},
        {"normal parallel gripper",
         {"normal parallel grippers", "normal parallel gripper", "standard parallel grippers",
          "standard parallel gripper", "standard grippers", "standard gripper"}},
        {"suction-based gripper",
         {"suction-based grippers", "suction-based gripper", "suction grippers", "suction gripper", "suction cups"}},
        {"sprayer", {"sprayers", "sprayer", "spray nozzles", "spray nozzle"}},
        {"camera", {"cameras", "camera"}},
        {"iaq sensors", {"iaq sensors", "iaq sensor", "air quality sensors", "air-quality sensors"}},
    };
    return table;
}

std::string capitalize(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

std::string hours_text(Minutes minutes) { return hours_value(minutes).dump(); }

// "T1-T14, T2b" when ids start with a numbered run prefix1..prefixK.
std::string id_range(const std::vector<std::string> &ids) {
    if (ids.empty()) return "";
    std::string prefix;
    for (char c : ids.front()) {
        if (std::isdigit(static_cast<unsigned char>(c))) break;
        prefix += c;
    }
    std::set<std::string> have(ids.begin(), ids.end());
    int k = 0;
    while (!prefix.empty() && have.count(prefix + std::to_string(k + 1))) ++k;
    std::string out;
    std::set<std::string> covered;
    if (k >= 2) {
        out = prefix + "1-" + prefix + std::to_string(k);
        for (int i = 1; i <= k; ++i) covered.insert(prefix + std::to_string(i));
    }
    for (const auto &id : ids) {
        if (covered.count(id)) continue;
        if (!out.empty()) out += ", ";
        out += id;
    }
    return out;
}

} // namespace

TaskKnowledgeBase TaskKnowledgeBase::from_instance(const ProblemInstance &instance) {
    TaskKnowledgeBase kb;
    kb.instance_ = instance;
    for (const auto &t : instance.tasks) {
        TaskEntry e{t.id, t.description, {}};
        std::set<std::string> seen;
        auto add = [&](const std::string &phrase) {
            auto p = text::lower(text::trim(phrase));
            if (!p.empty() && seen.insert(p).second) e.aliases.push_back(p);
        };
        add(t.description);
        for (const auto &a : t.aliases) add(a);
        kb.tasks_.push_back(std::move(e));
    }
    for (const auto &rt : instance.robot_types) {
        RobotEntry e{rt.id, {}};
        for (std::size_t k = 0; k < rt.capabilities.size() && k < instance.capabilities.size(); ++k) {
            if (rt.capabilities[k] > 0) e.capabilities.push_back(instance.capabilities[k].name);
        }
        kb.robots_.push_back(std::move(e));
    }
    return kb;
}

std::vector<TaskKnowledgeBase::Mention> TaskKnowledgeBase::find_tasks(std::string_view text) const {
    const std::string low = text::lower(text);
    std::vector<Mention> out;
    std::size_t i = 0;
    while (i < low.size()) {
        if (!text::word_start(low, i)) {
            ++i;
            continue;
        }
        std::size_t best_len = 0;
        std::string best_id;
        for (const auto &t : tasks_) {
            for (const auto &a : t.aliases) {
                if (a.size() > best_len && low.compare(i, a.size(), a) == 0 && text::word_end(low, i + a.size())) {
                    best_len = a.size();
                    best_id = t.id;
                }
            }
            const std::string id = text::lower(t.id);
            if (id.size() > best_len && low.compare(i, id.size(), id) == 0 && text::word_end(low, i + id.size())) {
                best_len = id.size();
                best_id = t.id;
            }
        }
        if (best_len > 0) {
            out.push_back({i, i + best_len, best_id});
            i += best_len;
        } else {
            ++i;
        }
    }
    return out;
}

std::vector<std::string> TaskKnowledgeBase::capability_phrases(const std::string &capability) const {
    std::vector<std::string> out{text::lower(capability)};
    auto it = lexicon().find(text::lower(capability));
    if (it != lexicon().end()) {
        for (const auto &p : it->second) {
            if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
        }
    }
    return out;
}

std::vector<std::string> TaskKnowledgeBase::find_capabilities(std::string_view text) const {
    const std::string low = text::lower(text);
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < low.size()) {
        if (!text::word_start(low, i)) {
            ++i;
            continue;
        }
        std::size_t best_len = 0;
        std::string best;
        for (const auto &cap : instance_.capabilities) {
            for (const auto &p : capability_phrases(cap.name)) {
                if (p.size() > best_len && low.compare(i, p.size(), p) == 0 && text::word_end(low, i + p.size())) {
                    best_len = p.size();
                    best = cap.name;
                }
            }
        }
        if (best_len > 0) {
            if (std::find(out.begin(), out.end(), best) == out.end()) out.push_back(best);
            i += best_len;
        } else {
            ++i;
        }
    }
    return out;
}

std::optional<std::string> TaskKnowledgeBase::resolve_robot(const std::vector<std::string> &capabilities) const {
    if (capabilities.empty()) return std::nullopt;
    const std::set<std::string> want(capabilities.begin(), capabilities.end());
    std::vector<const RobotEntry *> supersets;
    for (const auto &r : robots_) {
        const std::set<std::string> has(r.capabilities.begin(), r.capabilities.end());
        if (has == want) return r.id;
        if (std::includes(has.begin(), has.end(), want.begin(), want.end())) supersets.push_back(&r);
    }
    std::vector<const RobotEntry *> minimal;
    for (const auto *a : supersets) {
        const std::set<std::string> sa(a->capabilities.begin(), a->capabilities.end());
        bool is_min = true;
        for (const auto *b : supersets) {
            if (a == b) continue;
            const std::set<std::string> sb(b->capabilities.begin(), b->capabilities.end());
            if (sb.size() < sa.size() && std::includes(sa.begin(), sa.end(), sb.begin(), sb.end())) is_min = false;
        }
        if (is_min) minimal.push_back(a);
    }
    if (minimal.size() == 1) return minimal.front()->id;
    return std::nullopt;
}

std::string TaskKnowledgeBase::task_table() const {
    std::string out;
    for (const auto &t : instance_.tasks) {
        std::string preds = t.predecessors.empty() ? "-" : "";
        for (std::size_t k = 0; k < t.predecessors.size(); ++k) {
            if (k) preds += ", ";
            preds += t.predecessors[k];
        }
        // Types able to serve the task on their own, fewest capabilities first.
        std::vector<std::pair<std::size_t, std::string>> servers;
        for (std::size_t ty = 0; ty < instance_.robot_types.size(); ++ty) {
            const auto &caps = instance_.robot_types[ty].capabilities;
            int need = 1;
            bool ok = true;
            for (std::size_t k = 0; k < t.requirements.size(); ++k) {
                if (t.requirements[k] <= 0) continue;
                const int a = k < caps.size() ? caps[k] : 0;
                if (a <= 0) {
                    ok = false;
                    break;
                }
                need = std::max(need, (t.requirements[k] + a - 1) / a);
            }
            if (!ok) continue;
            const std::string label = (need > 1 ? std::to_string(need) + " " : "") + instance_.robot_types[ty].id;
            servers.emplace_back(robots_[ty].capabilities.size(), label);
        }
        std::stable_sort(servers.begin(), servers.end(),
                         [](const auto &a, const auto &b) { return a.first < b.first; });
        std::string types;
        for (std::size_t k = 0; k < servers.size(); ++k) {
            if (k) types += " or ";
            types += servers[k].second;
        }
        if (types.empty()) types = "-";
        out += "- " + t.id + " | " + preds + " | " + hours_text(t.duration) + " | " + t.description + " | " + types +
               "\n";
    }
    if (!out.empty()) out.pop_back();
    return out;
}

std::string TaskKnowledgeBase::robot_table() const {
    std::string out;
    for (const auto &r : robots_) {
        std::string caps;
        for (std::size_t k = 0; k < r.capabilities.size(); ++k) {
            if (k) caps += ", ";
            caps += capitalize(r.capabilities[k]);
        }
        out += "- " + r.id + ": " + caps + "\n";
    }
    if (!out.empty()) out.pop_back();
    return out;
}

std::string TaskKnowledgeBase::task_range() const {
    std::vector<std::string> ids;
    for (const auto &t : tasks_) ids.push_back(t.id);
    return id_range(ids);
}

std::string TaskKnowledgeBase::robot_range() const {
    std::vector<std::string> ids;
    for (const auto &r : robots_) ids.push_back(r.id);
    return id_range(ids);
}

RenderedPrompt render_prompt(const TaskKnowledgeBase &kb, std::string_view narrative) {
    if (text::trim(narrative).empty()) throw Error(ErrorCode::EmptyNarrative, "narrative is empty");
    const std::map<std::string, std::string> slots = {
        {"task_table", kb.task_table()},   {"robot_table", kb.robot_table()},
        {"task_range", kb.task_range()},   {"robot_range", kb.robot_range()},
        {"description", std::string(narrative)},
    };
    const std::string_view tpl = prompt_template();
    std::string out;
    std::size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] == '{') {
            const auto close = tpl.find('}', i);
            if (close != std::string_view::npos) {
                auto it = slots.find(std::string(tpl.substr(i + 1, close - i - 1)));
                if (it != slots.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += tpl[i++];
    }
    RenderedPrompt p;
    const auto split = out.find("\n\n");
    p.system = out.substr(0, split);
    p.user = split == std::string::npos ? "" : out.substr(split + 2);
    return p;
}

std::string build_prompt(const TaskKnowledgeBase &kb, std::string_view narrative) {
    return render_prompt(kb, narrative).text();
}

} // namespace forecrew
