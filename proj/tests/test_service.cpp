#include "doctest.h"

#include <atomic>
#include <fstream>
#include <random>
#include <thread>

#include "forecrew/service.hpp"
#include "httplib.h"
#include "support/fixtures.hpp"

using namespace forecrew;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("forecrew-test-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

ServiceConfig config(const fs::path &dir = {}) {
    ServiceConfig c;
    c.data_dir = dir;
    c.offline = true;
    c.max_wait_seconds = 2.0;
    return c;
}

Json create_body(const std::string &id) {
    return Json{{"instance", instance_to_json(fixtures::case_study())},
                {"plan", plan_to_json(fixtures::reference_plan())},
                {"id", id}};
}

int status_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const ServiceError &e) {
        return e.status;
    }
    return 0;
}

struct Server {
    Service service;
    int port;
    httplib::Client client;
    explicit Server(ServiceConfig c) : service(std::move(c)), port(service.start_background()), client("127.0.0.1", port) {
        client.set_read_timeout(60, 0);
    }
    ~Server() { service.stop(); }

    std::pair<int, Json> post(const std::string &path, const Json &body) {
        auto r = client.Post(path, body.dump(), "application/json");
        REQUIRE(r);
        return {r->status, r->body.empty() ? Json() : Json::parse(r->body)};
    }
    std::pair<int, Json> get(const std::string &path) {
        auto r = client.Get(path);
        REQUIRE(r);
        return {r->status, r->body.empty() ? Json() : Json::parse(r->body)};
    }
};

} // namespace

TEST_SUITE("service") {

TEST_CASE("store operations") {
    SessionStore store(config());
    const auto id = store.create(fixtures::case_study(), fixtures::reference_plan(), "site-a");
    CHECK(id == "site-a");
    CHECK(status_of([&] { store.create(fixtures::case_study(), fixtures::reference_plan(), "site-a"); }) == 409);
    CHECK(status_of([&] { store.create(fixtures::case_study(), fixtures::reference_plan(), "bad id!"); }) == 400);
    CHECK(status_of([&] { (void)store.state("nope"); }) == 404);
    CHECK(status_of([&] { (void)store.plan(id, 3); }) == 404);

    const auto before = store.plan(id, 0);
    store.advance(id, 12);
    CHECK(status_of([&] { store.advance(id, 5); }) == 409);
    const auto r = store.intervene(id, "T4 will start 30 minutes later than planned.");
    CHECK(r.replanned);
    CHECK(r.plan_id == 1);
    CHECK(store.plan(id, 0) == before);
    CHECK(store.plan(id, 1)["plan_id"] == 1);

    CHECK(status_of([&] { store.intervene(id, "It will be delayed by 30 minutes."); }) == 422);
    CHECK(status_of([&] { store.intervene(id, "Robot R6 is out of service."); }) == 409);
    CHECK(store.state(id)["plan_index"] == 1);

    const auto all = store.advance(id, 400);
    for (const auto &[task, st] : all["tasks"].items()) CHECK(st == "Completed");
}

TEST_CASE("a session without a plan is solved") {
    SessionStore store(config());
    const auto id = store.create(fixtures::case_study(), std::nullopt);
    CHECK(store.plan(id, 0)["makespan_minutes"] == 315);
}

TEST_CASE("logs survive a restart, including a torn final line") {
    TempDir dir;
    Json expected;
    {
        SessionStore store(config(dir.path));
        store.create(fixtures::case_study(), fixtures::reference_plan(), "a");
        store.advance("a", 12);
        store.intervene("a", "T4 will start 30 minutes later than planned.");
        store.advance("a", 100);
        expected = store.state("a");
    }
    const auto log = dir.path / "sessions" / "a" / "events.ndjson";
    REQUIRE(fs::exists(log));
    {
        std::ofstream out(log, std::ios::app);
        out << R"({"seq": 999, "kind": "ClockAdv)";
    }
    SessionStore again(config(dir.path));
    CHECK(again.recover() == 1);
    CHECK(again.state("a") == expected);
    again.advance("a", 120);
    CHECK(again.state("a")["clock"] == 120);

    SessionStore third(config(dir.path));
    CHECK(third.recover() == 1);
    CHECK(third.state("a")["clock"] == 120);
}

TEST_CASE("concurrent interventions serialize per session") {
    SessionStore store(config());
    store.create(fixtures::case_study(), fixtures::reference_plan(), "c");
    std::atomic<int> ok{0}, failed{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 4; ++i) {
        threads.emplace_back([&, i] {
            try {
                store.intervene("c", "T1" + std::to_string(i) + " will start 10 minutes later than planned.");
                ++ok;
            } catch (const ServiceError &) {
                ++failed;
            }
        });
    }
    for (auto &t : threads) t.join();
    CHECK(ok + failed == 4);
    const auto events = store.events("c", 0, 0)["events"];
    for (std::size_t i = 0; i < events.size(); ++i) CHECK(events[i]["seq"] == i);
    CHECK(store.state("c")["plan_index"] == ok.load());
}

TEST_CASE("http routes") {
    Server s(config());

    CHECK(s.get("/health").first == 200);

    auto [created, body] = s.post("/sessions", create_body("h"));
    CHECK(created == 201);
    CHECK(s.get("/sessions").second["sessions"] == Json::array({"h"}));

    auto [st, state] = s.get("/sessions/h/state");
    CHECK(st == 200);
    CHECK(state["clock"] == 0);

    CHECK(s.get("/sessions/missing/state").first == 404);
    CHECK(s.post("/sessions", Json{{"tasks", 3}}).first == 400);
    CHECK(s.post("/sessions/h/interventions", Json{{"narrative", "It will be delayed by 30 minutes."}}).first == 422);
    CHECK(s.post("/sessions/h/interventions", Json{{"narrative", "Robot R6 is out of service."}}).first == 409);

    const auto examples = fixtures::worked_examples();
    REQUIRE(examples.size() == 3);
    auto [ist, result] = s.post("/sessions/h/interventions", Json{{"narrative", examples[1].input}});
    CHECK(ist == 200);
    CHECK(result["changes"].size() == 3);
    CHECK(result["plan_id"] == 1);

    auto [ast, advanced] = s.post("/sessions/h/advance", Json{{"to_minutes", 10000}});
    CHECK(ast == 200);
    for (const auto &[task, status] : advanced["tasks"].items()) CHECK(status == "Completed");
    CHECK(s.post("/sessions/h/advance", Json{{"by_minutes", -1}}).first == 409);

    auto [pst, plan0] = s.get("/sessions/h/plans/0");
    CHECK(pst == 200);
    CHECK(plan_from_json(plan0) == fixtures::reference_plan());
}

TEST_CASE("http long-poll wakes on new events") {
    Server s(config());
    s.post("/sessions", create_body("w"));
    const auto [_, first] = s.get("/sessions/w/events?since=0");
    const std::size_t next = first["next"].get<std::size_t>();
    CHECK(next == first["events"].size());

    std::thread later([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
        s.service.store().advance("w", 20);
    });
    const auto [code, polled] = s.get("/sessions/w/events?since=" + std::to_string(next) + "&wait=5");
    later.join();
    CHECK(code == 200);
    REQUIRE_FALSE(polled["events"].empty());
    CHECK(polled["events"][0]["seq"] == next);
}

TEST_CASE("http jobs") {
    Server s(config());
    auto [code, body] = s.post("/sessions", Json{{"instance", instance_to_json(fixtures::case_study())}});
    CHECK(code == 202);
    const auto job = body["job"].get<std::string>();
    Json polled;
    for (int i = 0; i < 600; ++i) {
        polled = s.get("/jobs/" + job).second;
        if (polled["status"] == "done" || polled["status"] == "failed") break;
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    REQUIRE(polled["status"] == "done");
    const auto id = polled["result"]["session"].get<std::string>();
    CHECK(s.get("/sessions/" + id + "/plans/0").second["makespan_minutes"] == 315);
    CHECK(s.get("/jobs/nope").first == 404);
}

TEST_CASE("bearer token is enforced") {
    auto c = config();
    c.api_token = "secret";
    Server s(c);
    CHECK(s.get("/health").first == 200);
    CHECK(s.get("/sessions").first == 401);
    s.client.set_bearer_token_auth("secret");
    CHECK(s.get("/sessions").first == 200);
}

} // TEST_SUITE
