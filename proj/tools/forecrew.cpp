#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "forecrew/bench.hpp"
#include "forecrew/io.hpp"
#include "forecrew/narrative.hpp"
#include "forecrew/replanner.hpp"
#include "forecrew/service.hpp"
#include "forecrew/solver.hpp"

using namespace forecrew;

namespace {

const std::string kDataDir = FORECREW_DEFAULT_DATA;

void emit(const std::string &out, const std::string &content) {
    if (out.empty() || out == "-") {
        std::cout << content;
    } else {
        write_file(out, content);
    }
}

SolveLimits limits_from(double seconds, double gap) {
    SolveLimits l;
    l.time_seconds = seconds;
    l.gap = gap;
    return l;
}

void print_plan_summary(const Plan &plan, const SolveStats &stats) {
    std::fprintf(stderr, "status %s  makespan %lld min  objective %lld  nodes %llu  %.3f s\n",
                 std::string(to_string(plan.status)).c_str(), static_cast<long long>(plan.makespan),
                 static_cast<long long>(plan.objective), static_cast<unsigned long long>(stats.nodes), stats.seconds);
}

std::unique_ptr<LanguageModelClient> make_client(const TaskKnowledgeBase &kb, bool offline) {
    if (offline) return std::make_unique<RuleBasedClient>(kb);
    auto client = HttpChatClient::from_env();
    if (!client) throw Error(ErrorCode::ClientUnavailable, "FORECREW_LLM_URL is not set; pass --offline for the rule parser");
    return client;
}

std::string read_narrative(const std::string &text, const std::string &file) {
    if (!file.empty()) return read_file(file);
    return text;
}

Service *g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Multi-robot task allocation with narrative-driven replanning"};
    app.require_subcommand(1);

    double time_limit = 120.0;
    double gap = 0.0;
    app.add_option("--time-limit", time_limit, "Solver time budget in seconds")->capture_default_str();
    app.add_option("--gap", gap, "Relative optimality gap accepted")->capture_default_str();

    // solve
    auto *solve_cmd = app.add_subcommand("solve", "Compute an optimal plan for an instance");
    std::string instance_path = kDataDir + "/case_study.json", out;
    solve_cmd->add_option("--instance", instance_path, "Instance document")->capture_default_str();
    solve_cmd->add_option("--out", out, "Plan output path (stdout when absent)");

    // replan
    auto *replan_cmd = app.add_subcommand("replan", "Re-optimize future tasks of a plan at a given time");
    std::string plan_path, deltas_path, narrative, narrative_file;
    Minutes at_minutes = 0;
    bool offline = false;
    replan_cmd->add_option("--instance", instance_path, "Instance document")->capture_default_str();
    replan_cmd->add_option("--plan", plan_path, "Original plan")->required();
    replan_cmd->add_option("--at-minutes", at_minutes, "Replanning time T^R in minutes")->required();
    replan_cmd->add_option("--deltas", deltas_path, "Constraint changes to apply first");
    replan_cmd->add_option("--narrative", narrative, "Narrative to extract changes from");
    replan_cmd->add_flag("--offline", offline, "Extract with the rule parser");
    replan_cmd->add_option("--out", out, "Plan output path (stdout when absent)");

    // verify
    auto *verify_cmd = app.add_subcommand("verify", "Check a plan against every constraint family");
    verify_cmd->add_option("--instance", instance_path, "Instance document")->capture_default_str();
    verify_cmd->add_option("--plan", plan_path, "Plan document")->required();

    // extract
    auto *extract_cmd = app.add_subcommand("extract", "Turn a narrative into constraint changes");
    extract_cmd->add_option("--instance", instance_path, "Instance document")->capture_default_str();
    extract_cmd->add_option("--narrative", narrative, "Narrative text");
    extract_cmd->add_option("--narrative-file", narrative_file, "File holding the narrative");
    extract_cmd->add_flag("--offline", offline, "Use the rule parser instead of the model endpoint");
    bool print_prompt = false;
    extract_cmd->add_flag("--print-prompt", print_prompt, "Print the rendered prompt and exit");
    extract_cmd->add_option("--out", out, "Output path (stdout when absent)");

    // gen-corpus
    auto *corpus_cmd = app.add_subcommand("gen-corpus", "Generate a seeded narrative corpus with gold changes");
    std::uint64_t seed = 42;
    int groups = 5, per_group = 100;
    corpus_cmd->add_option("--instance", instance_path, "Instance providing the vocabulary")->capture_default_str();
    corpus_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    corpus_cmd->add_option("--groups", groups, "Groups; group g carries g changes")->capture_default_str();
    corpus_cmd->add_option("--per-group", per_group, "Narratives per group")->capture_default_str();
    corpus_cmd->add_option("--out", out, "Corpus output path (stdout when absent)");

    // eval-llm
    auto *eval_cmd = app.add_subcommand("eval-llm", "Score an extractor on a corpus");
    std::string corpus_path;
    std::size_t limit = 0;
    eval_cmd->add_option("--instance", instance_path, "Instance providing the vocabulary")->capture_default_str();
    eval_cmd->add_option("--corpus", corpus_path, "Corpus document (generated with --seed when absent)");
    eval_cmd->add_option("--seed", seed, "Seed for a generated corpus")->capture_default_str();
    eval_cmd->add_option("--limit", limit, "Evaluate only the first N records");
    eval_cmd->add_flag("--offline", offline, "Use the rule parser instead of the model endpoint");
    std::string records_out;
    eval_cmd->add_option("--records-out", records_out, "Write the scored records");
    eval_cmd->add_option("--out", out, "Metrics output path (stdout when absent)");

    // bench
    auto *bench_cmd = app.add_subcommand("bench", "Solve seeded scenarios and report program sizes and timing");
    std::string mode_name = "all", site_path = kDataDir + "/site_tasks.json", csv_path;
    std::size_t scenarios = 1000;
    unsigned workers = 0;
    bool omit_timing = false;
    bench_cmd->add_option("--mode", mode_name, "original, windows, conflicts, replanning or all")->capture_default_str();
    bench_cmd->add_option("--scenarios", scenarios, "Scenarios per mode")->capture_default_str();
    bench_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    bench_cmd->add_option("--site", site_path, "Task and robot catalogue")->capture_default_str();
    bench_cmd->add_option("--csv", csv_path, "Per-scenario CSV output");
    bench_cmd->add_option("--workers", workers, "Worker threads (0: all cores)");
    bench_cmd->add_flag("--omit-timing", omit_timing, "Leave timing columns out of the CSV");
    bench_cmd->add_option("--out", out, "Summary table output path (stdout when absent)");

    // serve
    auto *serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    std::string host = "127.0.0.1", data_dir, ui_dir;
    int port = 8080;
    serve_cmd->add_option("--host", host, "Bind address")->capture_default_str();
    serve_cmd->add_option("--port", port, "Port")->capture_default_str();
    serve_cmd->add_option("--data-dir", data_dir, "Session persistence directory (FORECREW_DATA_DIR)");
    serve_cmd->add_option("--ui-dir", ui_dir, "Static UI bundle served under /ui");
    serve_cmd->add_flag("--offline", offline, "Use the rule parser for interventions");

    CLI11_PARSE(app, argc, argv);
    const auto limits = limits_from(time_limit, gap);

    try {
        if (*solve_cmd) {
            const auto instance = load_instance_file(instance_path);
            auto [plan, stats] = solve_instance(instance, limits);
            print_plan_summary(plan, stats);
            if (plan.status == SolveStatus::Infeasible || plan.status == SolveStatus::Unknown) return 1;
            emit(out, save_plan(plan, stats_to_json(stats)));
            return 0;
        }

        if (*replan_cmd) {
            auto instance = load_instance_file(instance_path);
            const auto original = load_plan(read_file(plan_path));
            std::vector<ConstraintDelta> deltas;
            if (!deltas_path.empty()) deltas = load_deltas(read_file(deltas_path));
            if (!narrative.empty()) {
                const auto kb = TaskKnowledgeBase::from_instance(instance);
                auto client = make_client(kb, offline);
                const auto x = extract(narrative, kb, *client);
                for (const auto &d : x.diagnostics) std::fprintf(stderr, "%s\n", d.c_str());
                deltas.insert(deltas.end(), x.deltas.begin(), x.deltas.end());
            }
            for (const auto &d : deltas) std::fprintf(stderr, "apply %s\n", describe(d).c_str());
            instance = apply_deltas(instance, deltas);
            const auto result = replan(ReplanContext{instance, original, at_minutes}, limits);
            print_plan_summary(result.plan, result.stats);
            std::fprintf(stderr, "frozen %zu  future %zu  reassignments %lld  retiming %lld min\n",
                         result.split.past.size(), result.split.future.size(),
                         static_cast<long long>(result.delta.reassignments),
                         static_cast<long long>(result.delta.retiming));
            if (result.plan.status == SolveStatus::Infeasible || result.plan.status == SolveStatus::Unknown) return 1;
            auto stats = stats_to_json(result.stats);
            stats["replan_time"] = at_minutes;
            stats["reassignments"] = result.delta.reassignments;
            stats["retiming_minutes"] = result.delta.retiming;
            emit(out, save_plan(result.plan, stats));
            return 0;
        }

        if (*verify_cmd) {
            const auto instance = load_instance_file(instance_path);
            const auto plan = load_plan(read_file(plan_path));
            const auto report = verify_plan(instance, plan);
            if (report.ok()) {
                std::cout << "plan is feasible\n";
                return 0;
            }
            std::cout << report.summary();
            return 1;
        }

        if (*extract_cmd) {
            const auto instance = load_instance_file(instance_path);
            const auto kb = TaskKnowledgeBase::from_instance(instance);
            const auto text = read_narrative(narrative, narrative_file);
            if (print_prompt) {
                emit(out, render_prompt(kb, text).text() + "\n");
                return 0;
            }
            auto client = make_client(kb, offline);
            const auto x = extract(text, kb, *client);
            for (const auto &d : x.diagnostics) std::fprintf(stderr, "%s\n", d.c_str());
            emit(out, save_deltas(x.deltas));
            return 0;
        }

        if (*corpus_cmd) {
            const auto kb = TaskKnowledgeBase::from_instance(load_instance_file(instance_path));
            emit(out, corpus_to_json(generate_corpus(kb, seed, groups, per_group)).dump(2) + "\n");
            return 0;
        }

        if (*eval_cmd) {
            const auto kb = TaskKnowledgeBase::from_instance(load_instance_file(instance_path));
            auto records = corpus_path.empty() ? generate_corpus(kb, seed)
                                               : corpus_from_json(Json::parse(read_file(corpus_path)));
            if (limit && limit < records.size()) records.resize(limit);
            auto client = make_client(kb, offline);
            std::size_t failures = 0;
            for (auto &r : records) {
                r.model = client->model_id();
                r.predicted.clear();
                r.error.clear();
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    r.predicted = extract(r.narrative, kb, *client).deltas;
                } catch (const Error &e) {
                    r.error = e.what();
                    ++failures;
                }
                r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            }
            auto metrics = metrics_to_json(evaluate(records));
            metrics["model"] = client->model_id();
            metrics["extraction_failures"] = failures;
            if (!records_out.empty()) write_file(records_out, corpus_to_json(records).dump(2) + "\n");
            emit(out, metrics.dump(2) + "\n");
            return 0;
        }

        if (*bench_cmd) {
            const auto site = load_instance_file(site_path);
            std::vector<BenchMode> modes;
            if (mode_name == "all") {
                modes = {BenchMode::Original, BenchMode::Windows, BenchMode::Conflicts, BenchMode::Replanning};
            } else if (auto m = parse_bench_mode(mode_name)) {
                modes = {*m};
            } else {
                std::cerr << "unknown mode " << mode_name << '\n';
                return 2;
            }
            std::vector<BenchRow> all;
            std::vector<BenchSummary> summaries;
            for (auto m : modes) {
                BenchOptions opts{m, scenarios, seed, limits, workers};
                auto rows = run_bench(site, opts);
                summaries.push_back(summarize(m, rows));
                all.insert(all.end(), rows.begin(), rows.end());
            }
            if (!csv_path.empty()) write_file(csv_path, bench_csv(all, !omit_timing));
            emit(out, summary_table(summaries));
            bool ok = true;
            for (const auto &s : summaries) ok = ok && s.failures == 0;
            return ok ? 0 : 1;
        }

        if (*serve_cmd) {
            auto config = ServiceConfig::from_env();
            if (!data_dir.empty()) config.data_dir = data_dir;
            if (offline) config.offline = true;
            config.limits = limits;
            Service service(config, ui_dir);
            const auto recovered = service.store().recover();
            g_service = &service;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::fprintf(stderr, "listening on %s:%d (%s, %zu sessions recovered)\n", host.c_str(), port,
                         config.offline ? "offline" : "model endpoint", recovered);
            if (!service.listen(host, port)) {
                std::fprintf(stderr, "cannot bind %s:%d\n", host.c_str(), port);
                return 1;
            }
            g_service = nullptr;
            return 0;
        }
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
