#include "doctest.h"

#include <deque>

#include "forecrew/narrative.hpp"
#include "support/fixtures.hpp"

using namespace forecrew;

namespace {

TaskKnowledgeBase kb() { return TaskKnowledgeBase::from_instance(fixtures::case_study()); }

class ScriptedClient : public LanguageModelClient {
public:
    explicit ScriptedClient(std::deque<std::string> replies) : replies_(std::move(replies)) {}
    std::string complete(const std::vector<ChatMessage> &messages) override {
        seen.push_back(messages);
        if (replies_.empty()) throw Error(ErrorCode::ClientUnavailable, "script exhausted");
        auto r = replies_.front();
        replies_.pop_front();
        return r;
    }
    [[nodiscard]] std::string model_id() const override { return "scripted"; }

    std::vector<std::vector<ChatMessage>> seen;

private:
    std::deque<std::string> replies_;
};

ErrorCode code_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const Error &e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::ParseError;
}

} // namespace

TEST_SUITE("narrative") {

TEST_CASE("knowledge base covers the instance vocabulary") {
    const auto k = kb();
    CHECK(k.tasks().size() == 18);
    CHECK(k.robots().size() == fixtures::case_study().robot_types.size());
    CHECK(k.task_table().find("T7") != std::string::npos);
    CHECK(k.robot_table().find("R2:") != std::string::npos);
    const auto m = k.find_tasks("please check t6 before lunch");
    REQUIRE(m.size() == 1);
    CHECK(m[0].id == "T6");
}

TEST_CASE("prompt rendering") {
    const auto k = kb();
    const auto p = render_prompt(k, "Robot {R6} is {down}.");
    CHECK(p.text().find("Robot {R6} is {down}.") != std::string::npos);
    CHECK(p.text().find("{narrative}") == std::string::npos);
    CHECK(p.text().find("T14") != std::string::npos);
    CHECK(code_of([&] { (void)render_prompt(k, "   \n\t"); }) == ErrorCode::EmptyNarrative);
}

TEST_CASE("the worked examples parse to their printed outputs") {
    const auto examples = fixtures::worked_examples();
    REQUIRE(examples.size() == 3);
    const auto k = kb();
    for (const auto &ex : examples) {
        CAPTURE(ex.input);
        const auto gold = parse_deltas_lenient(ex.output);
        REQUIRE(gold.diagnostics.empty());
        REQUIRE_FALSE(gold.deltas.empty());
        CHECK(rule_parse(ex.input, k) == gold.deltas);
        RuleBasedClient client(k);
        CHECK(extract(ex.input, k, client).deltas == gold.deltas);
    }
}

TEST_CASE("each constraint kind is recognized") {
    const auto k = kb();
    SUBCASE("start time") {
        const auto d = rule_parse("The crew installing the electrical conduit is arriving an hour late.", k);
        CHECK(d == std::vector<ConstraintDelta>{StartTimeChange{"T7", 60}});
    }
    SUBCASE("start time by id") {
        CHECK(rule_parse("T6 will start 30 minutes later than planned.", k) ==
              std::vector<ConstraintDelta>{StartTimeChange{"T6", 30}});
    }
    SUBCASE("duration") {
        CHECK(rule_parse("T6 will take 2 hours.", k) == std::vector<ConstraintDelta>{DurationChange{"T6", 120}});
    }
    SUBCASE("robot count") {
        const auto d = rule_parse("Robot R6 is out of service.", k);
        CHECK(d == std::vector<ConstraintDelta>{RobotCountChange{"R6", -1}});
    }
    SUBCASE("conflict") {
        const auto d = rule_parse("T6 and T8 cannot be done at the same time.", k);
        REQUIRE(d.size() == 1);
        CHECK(d[0] == ConstraintDelta{ConflictChange{"T6", "T8"}});
    }
    SUBCASE("dependency") {
        const auto d = rule_parse("T9 must wait until T13 is finished.", k);
        CHECK(d == std::vector<ConstraintDelta>{DependencyChange{"T13", "T9", true}});
    }
}

TEST_CASE("unresolved phrases are reported and plain text yields nothing") {
    CHECK(code_of([&] { (void)rule_parse("It will be delayed by 30 minutes.", kb()); }) ==
          ErrorCode::UnresolvedReference);
    CHECK(rule_parse("", kb()).empty());
    CHECK(rule_parse("Nothing unusual on site today.", kb()).empty());
}

TEST_CASE("extraction with scripted replies") {
    const auto k = kb();
    SUBCASE("prose first, then a document") {
        ScriptedClient client({"Sure, here you go.", R"({"changes": [{"constraint_type": 2, "parameters": ["T6", 2]}]})"});
        const auto out = extract("T6 takes longer", k, client);
        CHECK(out.attempts == 2);
        CHECK(out.deltas == std::vector<ConstraintDelta>{DurationChange{"T6", 120}});
        REQUIRE(client.seen.size() == 2);
        CHECK(client.seen[1].size() > client.seen[0].size());
    }
    SUBCASE("fenced reply") {
        ScriptedClient client({"```json\n{\"changes\": [{\"constraint_type\": 4, \"parameters\": [\"R2\", -1]}]}\n```"});
        CHECK(extract("x", k, client).deltas == std::vector<ConstraintDelta>{RobotCountChange{"R2", -1}});
    }
    SUBCASE("never a document") {
        ScriptedClient client({"no", "still no"});
        CHECK(code_of([&] { (void)extract("x", k, client); }) == ErrorCode::ResponseNotJson);
    }
    SUBCASE("empty changes") {
        ScriptedClient client({R"({"changes": []})"});
        const auto out = extract("nothing happened", k, client);
        CHECK(out.deltas.empty());
        CHECK(out.diagnostics.empty());
    }
    SUBCASE("invalid entries are dropped with a diagnostic") {
        ScriptedClient client({R"({"changes": [{"constraint_type": 2, "parameters": ["T99", 2]},
                                               {"constraint_type": 9, "parameters": []},
                                               {"constraint_type": 3, "parameters": ["T5", 1]}]})"});
        const auto out = extract("x", k, client);
        CHECK(out.deltas == std::vector<ConstraintDelta>{StartTimeChange{"T5", 60}});
        CHECK(out.diagnostics.size() == 2);
    }
    SUBCASE("transport failure") {
        ScriptedClient client({});
        CHECK(code_of([&] { (void)extract("x", k, client); }) == ErrorCode::ClientUnavailable);
    }
}

TEST_CASE("metrics on the hand-scored fixture") {
    const auto doc = Json::parse(read_file(fixtures::test_data("hand_scored.json")));
    const auto records = corpus_from_json(doc);
    const auto &exp = doc["expected"];
    const auto m = evaluate(records);
    CHECK(m.constraint_accuracy ==
          doctest::Approx(exp["constraint_accuracy_num"].get<double>() / exp["constraint_accuracy_den"].get<double>())
              .epsilon(1e-12));
    CHECK(m.parameter_accuracy == doctest::Approx(exp["parameter_accuracy"].get<double>()).epsilon(1e-12));
    CHECK(m.correct_rate == doctest::Approx(exp["correct_rate"].get<double>()).epsilon(1e-12));
    CHECK(m.kind_matches == exp["kind_matches"].get<std::size_t>());
    CHECK(m.parameter_matches == exp["parameter_matches"].get<std::size_t>());
    CHECK(m.gold_deltas == exp["gold_deltas"].get<std::size_t>());
    CHECK(m.correct_records == exp["correct_records"].get<std::size_t>());
}

TEST_CASE("records without gold deltas are rejected") {
    ExtractionRecord r;
    r.narrative = "x";
    CHECK(code_of([&] { (void)evaluate({r}); }) == ErrorCode::EmptyGold);
    CHECK(code_of([&] { (void)evaluate({}); }) == ErrorCode::EmptyGold);
}

TEST_CASE("synthetic corpus") {
    const auto k = kb();
    const auto a = generate_corpus(k, 42);
    CHECK(a.size() == 500);
    CHECK(corpus_to_json(a) == corpus_to_json(generate_corpus(k, 42)));
    CHECK(corpus_to_json(a) != corpus_to_json(generate_corpus(k, 43)));
    for (const auto &r : a) {
        CAPTURE(r.narrative);
        CHECK(r.gold.size() == static_cast<std::size_t>(r.group));
    }
    CHECK(corpus_from_json(corpus_to_json(a)).size() == a.size());

    auto scored = a;
    for (auto &r : scored) r.predicted = rule_parse(r.narrative, k);
    const auto m = evaluate(scored);
    CHECK(m.correct_rate == 1.0);
    CHECK(m.constraint_accuracy == 1.0);
    CHECK(m.parameter_accuracy == 1.0);
}

} // TEST_SUITE
