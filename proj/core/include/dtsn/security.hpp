#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dtsn/toy_model.hpp"

namespace dtsn::sec {

// Three-party data service: A owns training pairs and uploads a fitted
// delta, C hosts the merged model and answers queries, B asks them. The
// harness runs the same adversary script against the real protocol and
// against an idealized data store, and compares what an outside observer
// sees of the two runs.

enum class Role { A, B, C };
enum class World { real, ideal };

struct Message {
    int step = 0;
    Role from = Role::A;
    Role to = Role::A;
    std::string kind;    // "upload", "receipt", "request", "response"
    std::string digest;  // content digest of the wire payload
    // Whether the payload is part of the service's outside interface
    // (requests and responses are; upload wire content and receipts are
    // internal and compare by kind only).
    bool observable = false;
};

struct Transcript {
    World world = World::real;
    std::string script_digest;
    std::vector<Message> messages;
    // What each party saw on the wire, keyed by role; used to state
    // negative results such as "C never saw the raw pairs".
    std::map<Role, std::string> views;
};

struct Action {
    enum class Kind { inject, modify_response, request, observe };
    Kind kind = Kind::observe;
    std::string arg;
};

struct AdversaryScript {
    std::set<Role> corruptions;
    std::vector<Action> actions;
};

// Line-oriented script text:
//   corrupt <A|B|C>
//   request <query text>
//   modify-response <replacement text>
//   inject <prompt> -> <completion>
//   observe <note>
// '#' starts a comment. Throws ParseError with the failing line number.
AdversaryScript parse_script(const std::string& text);

// Canonical re-serialization digest; identical scripts hash identically.
std::string script_digest(const AdversaryScript& script);

struct HarnessInputs {
    std::vector<toy::TrainingPair> pairs;
    std::vector<std::string> queries;
    toy::ToyModel base;
    double budget_fraction = 0.01;
};

// Deterministic default dataset and base model for the harness.
HarnessInputs default_inputs();

// Scripted run of the real protocol: A encodes and fits, C merges and
// answers with the merged model. Corruptions change behavior only at the
// corrupted role.
Transcript real_run(const AdversaryScript& script, const HarnessInputs& inputs);

// Scripted run against the ideal data store: uploads are stored as plain
// pairs and answered by direct forward lookup; a simulator reproduces the
// corrupted parties' wire behavior (dummy upload content for a corrupted C,
// honest protocol on behalf of a corrupted A).
Transcript ideal_run(const AdversaryScript& script, const HarnessInputs& inputs);

// Projection to what an outside observer sees: step, endpoints, kind, and
// the digest only for observable payloads. Idempotent.
std::vector<std::string> canonical_messages(const Transcript& t);

// True when the canonical sequences differ. Throws ValidationError when
// the transcripts were produced from different scripts.
bool distinguish(const Transcript& real, const Transcript& ideal);

// Count-argmax answer computed directly from the pairs, bypassing the
// model machinery; ties break to the lexicographically smallest completion.
std::optional<std::string> plaintext_answer(const std::vector<toy::TrainingPair>& pairs,
                                            const std::string& query);

// fit -> merge -> generate must equal the plaintext answer for every query.
bool homomorphism_check(const std::vector<toy::TrainingPair>& pairs,
                        const std::vector<std::string>& queries);

struct AttackResult {
    int trials = 0;
    int successes = 0;
    double success_rate = 0.0;
};

// Reverse-direction probing: builds `trials` queries from the known answers
// (plus seeded decoys) asking which key maps to them; a success is an
// answer that exactly recovers a sensitive key.
AttackResult reversal_attack(const toy::ToyModel& model,
                             const std::vector<std::string>& known_answers,
                             const std::vector<std::string>& sensitive_keys,
                             int trials, std::uint64_t seed);

struct CheckRow {
    std::string script;
    std::string check;
    bool passed = false;
    std::string detail;
};

// All checks for one script: outside-observer equality of the two runs,
// answer homomorphism, forward accuracy, zero reversal success, and the
// no-raw-data view property for C.
std::vector<CheckRow> run_script_checks(const std::string& script_name,
                                        const AdversaryScript& script,
                                        const HarnessInputs& inputs);

// "script,check,passed,detail" rows.
std::string report_csv(const std::vector<CheckRow>& rows);

} // namespace dtsn::sec
