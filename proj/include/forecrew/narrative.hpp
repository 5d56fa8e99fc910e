#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forecrew/io.hpp"
#include "forecrew/model.hpp"

namespace forecrew {

// ---------------------------------------------------------------------------
// Knowledge base

struct TaskEntry {
    std::string id;
    std::string description;
    std::vector<std::string> aliases; // lower-case phrases, including the description
};

struct RobotEntry {
    std::string id;
    std::vector<std::string> capabilities; // capability names of the type
};

/// Task and robot vocabulary of one instance, used for prompting and reference resolution.
class TaskKnowledgeBase {
public:
    static TaskKnowledgeBase from_instance(const ProblemInstance &instance);

    [[nodiscard]] const ProblemInstance &instance() const noexcept { return instance_; }
    [[nodiscard]] const std::vector<TaskEntry> &tasks() const noexcept { return tasks_; }
    [[nodiscard]] const std::vector<RobotEntry> &robots() const noexcept { return robots_; }

    struct Mention {
        std::size_t begin = 0, end = 0; // byte offsets into the lower-cased text
        std::string id;
    };
    /// Task references in text order: longest alias match wins, then literal ids such as "T6".
    [[nodiscard]] std::vector<Mention> find_tasks(std::string_view text) const;
    /// Capability names mentioned in text through the capability lexicon.
    [[nodiscard]] std::vector<std::string> find_capabilities(std::string_view text) const;
    /// Type whose capability set equals the mentioned set, else the unique inclusion-minimal
    /// superset. nullopt when none or ambiguous.
    [[nodiscard]] std::optional<std::string> resolve_robot(const std::vector<std::string> &capabilities) const;
    /// Phrases that denote a capability, the name itself first.
    [[nodiscard]] std::vector<std::string> capability_phrases(const std::string &capability) const;

    /// Task table rows: "T7 | T1, T6 | 1 | Install Electrical Conduit | R5 or R2".
    [[nodiscard]] std::string task_table() const;
    /// Robot table rows: "R2: High-payload, Precise parallel gripper, Normal parallel gripper".
    [[nodiscard]] std::string robot_table() const;
    [[nodiscard]] std::string task_range() const;
    [[nodiscard]] std::string robot_range() const;

private:
    ProblemInstance instance_;
    std::vector<TaskEntry> tasks_;
    std::vector<RobotEntry> robots_;
};

// ---------------------------------------------------------------------------
// Prompt

struct RenderedPrompt {
    std::string system;
    std::string user;

    [[nodiscard]] std::string text() const { return system + "\n\n" + user; }
};

/// Renders the extraction template. The narrative is inserted once and never re-expanded.
/// Throws Error{EmptyNarrative} for blank input.
RenderedPrompt render_prompt(const TaskKnowledgeBase &kb, std::string_view narrative);
std::string build_prompt(const TaskKnowledgeBase &kb, std::string_view narrative);
/// Raw template with its placeholders.
std::string_view prompt_template();

// ---------------------------------------------------------------------------
// Language model client

struct ChatMessage {
    std::string role;
    std::string content;
};

class LanguageModelClient {
public:
    virtual ~LanguageModelClient() = default;
    /// Returns the assistant text. Throws Error{ClientUnavailable} on transport failure.
    virtual std::string complete(const std::vector<ChatMessage> &messages) = 0;
    [[nodiscard]] virtual std::string model_id() const = 0;
};

/// Chat-completion endpoint speaking the common {"model","messages"} -> {"choices":[{"message"}]}
/// protocol over plain HTTP.
class HttpChatClient : public LanguageModelClient {
public:
    HttpChatClient(std::string url, std::string model, std::string token = {}, double timeout_seconds = 120.0);
    /// Reads FORECREW_LLM_URL, FORECREW_LLM_MODEL and FORECREW_LLM_TOKEN; nullptr when the URL is unset.
    static std::unique_ptr<HttpChatClient> from_env();

    std::string complete(const std::vector<ChatMessage> &messages) override;
    [[nodiscard]] std::string model_id() const override { return model_; }

private:
    std::string url_, model_, token_;
    double timeout_;
};

/// Offline client answering with the rule parser's output as a delta document.
class RuleBasedClient : public LanguageModelClient {
public:
    explicit RuleBasedClient(TaskKnowledgeBase kb) : kb_(std::move(kb)) {}
    std::string complete(const std::vector<ChatMessage> &messages) override;
    [[nodiscard]] std::string model_id() const override { return "rule-parser"; }

private:
    TaskKnowledgeBase kb_;
};

struct Extraction {
    std::vector<ConstraintDelta> deltas;
    std::vector<std::string> diagnostics; // one per dropped entry
    std::string raw_response;
    int attempts = 0;
};

/// Sends the rendered prompt, parses the `changes` array and validates each entry against the
/// knowledge base. Re-asks once with a format reminder when the reply is not a delta document.
/// Throws Error{EmptyNarrative, ClientUnavailable, ResponseNotJson}.
Extraction extract(std::string_view narrative, const TaskKnowledgeBase &kb, LanguageModelClient &client);

/// Deterministic pattern-based extraction. Throws Error{UnresolvedReference} naming the phrase.
std::vector<ConstraintDelta> rule_parse(std::string_view narrative, const TaskKnowledgeBase &kb);

// ---------------------------------------------------------------------------
// Evaluation

struct ExtractionRecord {
    int group = 0;
    std::string narrative;
    std::vector<ConstraintDelta> gold;
    std::vector<ConstraintDelta> predicted;
    std::string model;
    double latency_ms = 0.0;
    std::string error; // extraction failure, scored as an empty prediction
};

struct Metrics {
    double constraint_accuracy = 0.0;
    double parameter_accuracy = 0.0;
    double correct_rate = 0.0;
    std::size_t records = 0;
    std::size_t gold_deltas = 0;
    std::size_t kind_matches = 0;
    std::size_t parameter_matches = 0;
    std::size_t correct_records = 0;
};

/// Per record, predicted deltas are aligned to gold deltas of the same kind, pairing identical
/// payloads first: kind matches = sum over kinds of min(gold, predicted) counts, parameter matches =
/// size of the per-kind payload multiset intersection. Record scores are kind matches / gold deltas,
/// parameter matches / kind matches (records without kind matches are skipped) and whether the
/// predicted multiset equals gold; the metrics average record scores. Throws Error{EmptyGold}.
Metrics evaluate(const std::vector<ExtractionRecord> &records);

/// Seeded synthetic corpus: `groups` groups of `per_group` narratives, group g carrying g deltas.
std::vector<ExtractionRecord> generate_corpus(const TaskKnowledgeBase &kb, std::uint64_t seed, int groups = 5,
                                              int per_group = 100);

Json corpus_to_json(const std::vector<ExtractionRecord> &records);
std::vector<ExtractionRecord> corpus_from_json(const Json &doc);
Json metrics_to_json(const Metrics &metrics);

} // namespace forecrew
