#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "forecrew/model.hpp"

namespace forecrew {

using Json = nlohmann::ordered_json;

// Instance documents. Durations are read from exactly one of `hours` or `minutes`.
ProblemInstance instance_from_json(const Json &doc);
Json instance_to_json(const ProblemInstance &instance);
/// Throws Error{ParseError} naming the line or the offending field.
ProblemInstance load_instance(std::string_view text);
std::string save_instance(const ProblemInstance &instance);
ProblemInstance load_instance_file(const std::string &path);

// Delta documents: {"changes":[{"constraint_type":N,"parameters":[...]}]}, times in hours.
ConstraintDelta delta_from_json(const Json &entry, const std::string &where = "change");
Json delta_to_json(const ConstraintDelta &delta);
Json deltas_to_json(const std::vector<ConstraintDelta> &deltas);
std::string save_deltas(const std::vector<ConstraintDelta> &deltas);

struct DeltaParseResult {
    std::vector<ConstraintDelta> deltas;
    /// One message per dropped entry.
    std::vector<std::string> diagnostics;
};

/// Rewrites loosely formatted model output (code fences, bare identifiers, "+2.5") into strict JSON.
std::string normalize_json_text(std::string_view text);

/// Parses a delta document after normalization. Malformed entries are dropped and reported;
/// a document that is not JSON or lacks a `changes` array throws Error{ParseError}.
DeltaParseResult parse_deltas_lenient(std::string_view text);

/// Strict variant: any malformed entry throws Error{ParseError}.
std::vector<ConstraintDelta> load_deltas(std::string_view text);

// Plan documents.
Json plan_to_json(const Plan &plan, const Json &stats = Json::object());
Plan plan_from_json(const Json &doc);
Plan load_plan(std::string_view text);
std::string save_plan(const Plan &plan, const Json &stats = Json::object());

/// Hours as the shortest decimal form ("1.5", "2", "0.25").
Json hours_value(Minutes minutes);
Minutes minutes_from_hours(double hours);

std::string read_file(const std::string &path);
void write_file(const std::string &path, std::string_view content);

} // namespace forecrew
