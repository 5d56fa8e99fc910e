#pragma once

#include <string>
#include <utility>
#include <vector>

#include "forecrew/io.hpp"
#include "forecrew/narrative.hpp"

namespace fixtures {

inline std::string data(const std::string &name) { return std::string(FORECREW_TEST_DATA_DIR) + "/" + name; }
inline std::string test_data(const std::string &name) { return std::string(FORECREW_TEST_FIXTURE_DIR) + "/" + name; }

inline forecrew::ProblemInstance case_study() { return forecrew::load_instance_file(data("case_study.json")); }
inline forecrew::ProblemInstance site() { return forecrew::load_instance_file(data("site_tasks.json")); }
inline forecrew::Plan reference_plan() { return forecrew::load_plan(forecrew::read_file(data("case_study_plan.json"))); }

struct WorkedExample {
    std::string input;
    std::string output; // the printed delta document
};

/// The few-shot examples carried by the extraction template: an `Input: "..."` line followed by an
/// `Output:` block that runs to the line holding only `]}`.
inline std::vector<WorkedExample> worked_examples() {
    std::vector<WorkedExample> out;
    const std::string tpl(forecrew::prompt_template());
    std::size_t pos = 0;
    while ((pos = tpl.find("Input: \"", pos)) != std::string::npos) {
        const auto a = pos + 8;
        const auto b = tpl.find("\"\n", a);
        const auto o = tpl.find("Output:", b);
        const auto e = tpl.find("\n]}", o) + 1;
        out.push_back({tpl.substr(a, b - a), tpl.substr(o + 7, e + 2 - (o + 7))});
        pos = e;
    }
    return out;
}

} // namespace fixtures
