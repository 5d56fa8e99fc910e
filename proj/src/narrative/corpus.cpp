#include "forecrew/narrative.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "text.hpp"

namespace forecrew {

// ---------------------------------------------------------------------------
// Evaluation

namespace {

std::string payload_key(const ConstraintDelta &d) {
    if (const auto *c = std::get_if<ConflictChange>(&d.change)) {
        const auto &[a, b] = std::minmax(c->first, c->second);
        return "5|" + a + "|" + b;
    }
    return delta_to_json(d).dump();
}

} // namespace

Metrics evaluate(const std::vector<ExtractionRecord> &records) {
    if (records.empty()) throw Error(ErrorCode::EmptyGold, "no records to score");
    Metrics m;
    m.records = records.size();
    double constraint_sum = 0.0, parameter_sum = 0.0;
    std::size_t parameter_records = 0;
    for (const auto &r : records) {
        if (r.gold.empty()) throw Error(ErrorCode::EmptyGold, "record has no gold deltas: " + r.narrative);
        std::map<int, std::multiset<std::string>> gold, pred;
        for (const auto &d : r.gold) gold[static_cast<int>(d.kind())].insert(payload_key(d));
        for (const auto &d : r.predicted) pred[static_cast<int>(d.kind())].insert(payload_key(d));
        std::size_t kinds = 0, params = 0;
        for (const auto &[k, g] : gold) {
            auto it = pred.find(k);
            if (it == pred.end()) continue;
            kinds += std::min(g.size(), it->second.size());
            std::vector<std::string> common;
            std::set_intersection(g.begin(), g.end(), it->second.begin(), it->second.end(), std::back_inserter(common));
            params += common.size();
        }
        const bool correct = gold == pred;
        m.gold_deltas += r.gold.size();
        m.kind_matches += kinds;
        m.parameter_matches += params;
        m.correct_records += correct ? 1 : 0;
        constraint_sum += static_cast<double>(kinds) / static_cast<double>(r.gold.size());
        if (kinds > 0) {
            parameter_sum += static_cast<double>(params) / static_cast<double>(kinds);
            ++parameter_records;
        }
    }
    if (m.records > 0) {
        m.constraint_accuracy = constraint_sum / static_cast<double>(m.records);
        m.correct_rate = static_cast<double>(m.correct_records) / static_cast<double>(m.records);
    }
    if (parameter_records > 0) m.parameter_accuracy = parameter_sum / static_cast<double>(parameter_records);
    return m;
}

Json metrics_to_json(const Metrics &m) {
    return Json{{"constraint_accuracy", m.constraint_accuracy},
                {"parameter_accuracy", m.parameter_accuracy},
                {"correct_rate", m.correct_rate},
                {"records", m.records},
                {"gold_deltas", m.gold_deltas},
                {"kind_matches", m.kind_matches},
                {"parameter_matches", m.parameter_matches},
                {"correct_records", m.correct_records}};
}

// ---------------------------------------------------------------------------
// Corpus generation

namespace {

class Generator {
public:
    Generator(const TaskKnowledgeBase &kb, std::uint64_t seed) : kb_(kb), rng_(seed) {}

    ExtractionRecord record(int group) {
        // Each record describes changes against the unmodified instance.
        edges_.clear();
        for (const auto &t : kb_.instance().tasks) {
            for (const auto &p : t.predecessors) edges_.insert({p, t.id});
        }
        ExtractionRecord r;
        r.group = group;
        std::string text;
        for (int k = 0; k < group; ++k) {
            auto [delta, clause] = change();
            r.gold.push_back(std::move(delta));
            clause = hedge() + clause;
            if (k == 0) {
                text = capitalize(clause);
            } else {
                const std::string joiner = pick<std::string>({", and ", ". Additionally, ", ". Furthermore, ", "; ",
                                                              ", followed by further refinements as "});
                text += joiner + clause;
            }
        }
        r.narrative = text + ".";
        return r;
    }

private:
    const TaskKnowledgeBase &kb_;
    std::mt19937_64 rng_;
    std::set<std::pair<std::string, std::string>> edges_;

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

    template <typename T>
    T pick(std::initializer_list<T> items) {
        return *(items.begin() + below(items.size()));
    }
    template <typename T>
    const T &pick_of(const std::vector<T> &items) {
        return items[below(items.size())];
    }

    static std::string capitalize(std::string s) {
        if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
        return s;
    }

    std::string hedge() {
        return pick<std::string>({"", "", "due to how things are unfolding on-site, it's understood that ",
                                  "in light of recent discussions, ", "recent developments suggest that ",
                                  "after coordinating with field staff, it seems that ",
                                  "a revised understanding across teams indicates that ",
                                  "according to the latest site report, "});
    }

    std::string task_phrase(const std::string &id) {
        for (const auto &t : kb_.tasks()) {
            if (t.id == id) return pick_of(t.aliases);
        }
        return id;
    }

    std::string amount(Minutes m) {
        std::vector<std::string> forms;
        auto words = [](Minutes h) -> std::string {
            static const char *names[] = {"zero", "one", "two", "three", "four", "five", "six"};
            return h >= 0 && h <= 6 ? names[h] : std::to_string(h);
        };
        if (m % 60 == 0) {
            const Minutes h = m / 60;
            forms.push_back(h == 1 ? "1 hour" : std::to_string(h) + " hours");
            forms.push_back(h == 1 ? "an hour" : words(h) + " hours");
        } else {
            forms.push_back(hours_value(m).dump() + " hours");
            if (m == 30) forms.push_back("half an hour");
            if (m == 90) forms.push_back("an hour and a half");
        }
        forms.push_back(std::to_string(m) + " minutes");
        return pick_of(forms);
    }

    bool reaches(const std::string &from, const std::string &to) const {
        std::set<std::string> seen{from};
        std::vector<std::string> stack{from};
        while (!stack.empty()) {
            auto cur = stack.back();
            stack.pop_back();
            if (cur == to) return true;
            for (const auto &[a, b] : edges_) {
                if (a == cur && seen.insert(b).second) stack.push_back(b);
            }
        }
        return false;
    }

    std::pair<ConstraintDelta, std::string> change() {
        const auto &inst = kb_.instance();
        for (;;) {
            switch (below(5)) {
            case 0: { // dependency
                const bool removal = !edges_.empty() && below(3) == 0;
                if (removal) {
                    auto it = edges_.begin();
                    std::advance(it, static_cast<std::ptrdiff_t>(below(edges_.size())));
                    const auto [a, b] = *it;
                    edges_.erase(it);
                    const auto A = task_phrase(a), B = task_phrase(b);
                    return {DependencyChange{a, b, false},
                            pick<std::string>({B + " no longer needs to wait for " + A,
                                               B + " can proceed without waiting for " + A})};
                }
                const auto &a = pick_of(inst.tasks).id;
                const auto &b = pick_of(inst.tasks).id;
                if (a == b || edges_.count({a, b}) || reaches(b, a)) continue;
                edges_.insert({a, b});
                const auto A = task_phrase(a), B = task_phrase(b);
                return {DependencyChange{a, b, true},
                        pick<std::string>({A + " must now be finished before " + B + " can begin",
                                           B + " now has to wait until " + A + " is complete",
                                           B + " can only start after " + A + " is done"})};
            }
            case 1: { // duration
                const auto &t = pick_of(inst.tasks);
                const Minutes d = pick<Minutes>({15, 30, 45, 60, 90, 120, 150, 180, 240});
                if (d == t.duration) continue;
                const auto A = task_phrase(t.id), H = amount(d);
                return {DurationChange{t.id, d},
                        pick<std::string>({A + " takes " + H + " instead of " + amount(t.duration),
                                           A + " is now expected to take " + H, A + " will take " + H + " to complete",
                                           "the duration of " + A + " changes to " + H})};
            }
            case 2: { // start time
                const auto &t = pick_of(inst.tasks);
                const Minutes s = pick<Minutes>({15, 30, 45, 60, 90, 120, 150, 180});
                const auto A = task_phrase(t.id), H = amount(s);
                if (below(4) == 0) {
                    return {StartTimeChange{t.id, -s},
                            pick<std::string>({A + " can start " + H + " earlier than planned",
                                               A + " is ahead of schedule by " + H})};
                }
                return {StartTimeChange{t.id, s},
                        pick<std::string>({A + " is delayed by " + H,
                                           "the worker assigned to " + A + " will be arriving " + H + " late",
                                           "the crew for " + A + " can only arrive in " + H,
                                           "a specialist required for " + A +
                                               " calls in sick, preventing work from starting for " + H})};
            }
            case 3: { // robot count
                const auto &rt = pick_of(inst.robot_types);
                const auto &entry = kb_.robots()[static_cast<std::size_t>(&rt - inst.robot_types.data())];
                if (entry.capabilities.empty()) continue;
                const auto robots = robot_phrase(entry);
                if (robots.empty()) continue;
                const bool removal = rt.count > 0 && below(2) == 0;
                if (removal) {
                    const int n = static_cast<int>(below(static_cast<std::size_t>(std::min(rt.count, 3)))) + 1;
                    std::string clause =
                        n == 1 ? pick<std::string>({"one of the robots " + robots + " is currently out of service",
                                                    "one robot " + robots + " broke down"})
                               : pick<std::string>({count_word(n) + " robots " + robots + " have run out of power",
                                                    count_word(n) + " robots " + robots + " are out of service"});
                    return {RobotCountChange{rt.id, -n}, clause};
                }
                const int n = static_cast<int>(below(2)) + 1;
                std::string clause =
                    n == 1 ? pick<std::string>({"an additional robot " + robots + " has arrived on site",
                                                "we have secured one more robot " + robots})
                           : pick<std::string>({count_word(n) + " additional robots " + robots + " have arrived on site",
                                                "we have secured " + count_word(n) + " more robots " + robots});
                return {RobotCountChange{rt.id, n}, clause};
            }
            default: { // conflict
                const auto &a = pick_of(inst.tasks).id;
                const auto &b = pick_of(inst.tasks).id;
                if (a == b) continue;
                const auto A = task_phrase(a), B = task_phrase(b);
                return {ConflictChange{a, b},
                        pick<std::string>({A + " and " + B + " cannot run at the same time",
                                           A + " cannot be carried out while " + B + " is in progress",
                                           A + " and " + B + " must not overlap"})};
            }
            }
        }
    }

    static std::string count_word(int n) {
        static const char *names[] = {"zero", "one", "two", "three"};
        return n >= 0 && n <= 3 ? names[n] : std::to_string(n);
    }

    // "with <capabilities>" naming a capability subset that identifies the type, or its id.
    std::string robot_phrase(const RobotEntry &entry) {
        const auto &caps = entry.capabilities;
        std::vector<std::vector<std::string>> subsets;
        for (unsigned mask = 1; mask < (1u << caps.size()) && caps.size() <= 8; ++mask) {
            std::vector<std::string> s;
            for (std::size_t k = 0; k < caps.size(); ++k) {
                if (mask >> k & 1) s.push_back(caps[k]);
            }
            if (kb_.resolve_robot(s) == entry.id) subsets.push_back(std::move(s));
        }
        if (subsets.empty() || below(5) == 0) return "of type " + entry.id;
        const auto &s = pick_of(subsets);
        std::string out = "with ";
        for (std::size_t k = 0; k < s.size(); ++k) {
            if (k) out += " and ";
            out += pick_of(kb_.capability_phrases(s[k]));
        }
        return out;
    }
};

} // namespace

std::vector<ExtractionRecord> generate_corpus(const TaskKnowledgeBase &kb, std::uint64_t seed, int groups,
                                              int per_group) {
    Generator gen(kb, seed);
    std::vector<ExtractionRecord> out;
    for (int g = 1; g <= groups; ++g) {
        for (int k = 0; k < per_group; ++k) out.push_back(gen.record(g));
    }
    return out;
}

Json corpus_to_json(const std::vector<ExtractionRecord> &records) {
    Json arr = Json::array();
    for (const auto &r : records) {
        Json j = {{"group", r.group}, {"narrative", r.narrative}, {"gold", deltas_to_json(r.gold)}};
        if (!r.predicted.empty() || !r.model.empty()) j["predicted"] = deltas_to_json(r.predicted);
        if (!r.model.empty()) j["model"] = r.model;
        if (r.latency_ms > 0) j["latency_ms"] = r.latency_ms;
        if (!r.error.empty()) j["error"] = r.error;
        arr.push_back(std::move(j));
    }
    return Json{{"records", std::move(arr)}};
}

std::vector<ExtractionRecord> corpus_from_json(const Json &doc) {
    std::vector<ExtractionRecord> out;
    try {
        for (const auto &j : doc.at("records")) {
            ExtractionRecord r;
            r.group = j.value("group", 0);
            r.narrative = j.at("narrative").get<std::string>();
            r.gold = load_deltas(j.at("gold").dump());
            if (j.contains("predicted")) r.predicted = load_deltas(j.at("predicted").dump());
            r.model = j.value("model", "");
            r.latency_ms = j.value("latency_ms", 0.0);
            r.error = j.value("error", "");
            out.push_back(std::move(r));
        }
    } catch (const Json::exception &e) {
        throw Error(ErrorCode::ParseError, std::string("corpus document: ") + e.what());
    }
    return out;
}

} // namespace forecrew
