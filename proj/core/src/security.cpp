#include "dtsn/security.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <random>

#include "dtsn/errors.hpp"
#include "dtsn/format.hpp"

namespace dtsn::sec {

namespace {

char role_letter(Role r) {
    switch (r) {
        case Role::A: return 'A';
        case Role::B: return 'B';
        case Role::C: return 'C';
    }
    return '?';
}

std::string trim(const std::string& s) {
    std::size_t first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    std::size_t last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        return s.substr(1, s.size() - 2);
    return s;
}

void validate_actions(const AdversaryScript& script) {
    for (const Action& action : script.actions) {
        switch (action.kind) {
            case Action::Kind::inject:
                if (!script.corruptions.count(Role::A))
                    throw ValidationError("inject requires a corrupted A");
                break;
            case Action::Kind::request:
            case Action::Kind::modify_response:
                if (!script.corruptions.count(Role::B))
                    throw ValidationError(
                        std::string(action.kind == Action::Kind::request ? "request"
                                                                         : "modify-response") +
                        " requires a corrupted B");
                break;
            case Action::Kind::observe:
                if (!script.corruptions.count(Role::C))
                    throw ValidationError("observe requires a corrupted C");
                break;
        }
    }
}

std::pair<std::string, std::string> split_inject(const std::string& arg) {
    std::size_t pos = arg.find(" -> ");
    return {trim(arg.substr(0, pos)), trim(arg.substr(pos + 4))};
}

// The pairs A effectively uploads: its honest forward-only encoding, plus
// any raw rows a corrupted A injects.
std::vector<toy::TrainingPair> effective_pairs(const AdversaryScript& script,
                                               const HarnessInputs& inputs) {
    std::vector<toy::TrainingPair> pairs = toy::encode_secure_pairs(inputs.pairs);
    for (const Action& action : script.actions) {
        if (action.kind != Action::Kind::inject) continue;
        auto [prompt, completion] = split_inject(action.arg);
        pairs.push_back({prompt, completion, false});
    }
    return pairs;
}

std::vector<std::string> effective_queries(const AdversaryScript& script,
                                           const HarnessInputs& inputs) {
    std::vector<std::string> queries = inputs.queries;
    for (const Action& action : script.actions)
        if (action.kind == Action::Kind::request) queries.push_back(action.arg);
    return queries;
}

std::string serialize_pairs(const std::vector<toy::TrainingPair>& pairs) {
    std::string out;
    for (const toy::TrainingPair& p : pairs)
        out += p.prompt + "\t" + p.completion + "\t" + (p.sensitive ? "1" : "0") + "\n";
    return out;
}

const std::string& dist_argmax(const toy::Distribution& dist) {
    const std::string* best = &dist.begin()->first;
    double best_p = dist.begin()->second;
    for (const auto& [completion, p] : dist) {
        if (p > best_p) {
            best_p = p;
            best = &completion;
        }
    }
    return *best;
}

// Shared query loop: both runs append request/response message pairs, with
// a corrupted B consuming modify-response actions in script order.
void answer_queries(Transcript& t, const AdversaryScript& script,
                    const std::vector<std::string>& queries,
                    const std::function<std::string(const std::string&)>& answer_fn) {
    std::vector<const Action*> pending_edits;
    for (const Action& action : script.actions)
        if (action.kind == Action::Kind::modify_response) pending_edits.push_back(&action);
    std::size_t next_edit = 0;

    int step = static_cast<int>(t.messages.size());
    std::string b_view;
    for (const std::string& q : queries) {
        t.messages.push_back(
            {++step, Role::B, Role::C, "request", fnv1a_hex(canonical_text(q)), true});
        std::string answer = answer_fn(q);
        if (script.corruptions.count(Role::B) && next_edit < pending_edits.size())
            answer = pending_edits[next_edit++]->arg;
        t.messages.push_back({++step, Role::C, Role::B, "response", fnv1a_hex(answer), true});
        b_view += answer + "\n";
    }
    t.views[Role::B] = fnv1a_hex(b_view);
}

} // namespace

AdversaryScript parse_script(const std::string& text) {
    AdversaryScript script;
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = trim(text.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (end == text.size() && line.empty() && start > text.size()) break;
        if (line.empty() || line[0] == '#') continue;

        std::size_t space = line.find(' ');
        std::string verb = space == std::string::npos ? line : line.substr(0, space);
        std::string rest = space == std::string::npos ? "" : trim(line.substr(space + 1));

        if (verb == "corrupt") {
            if (rest == "A") script.corruptions.insert(Role::A);
            else if (rest == "B") script.corruptions.insert(Role::B);
            else if (rest == "C") script.corruptions.insert(Role::C);
            else throw ParseError("unknown role '" + rest + "' (expected A, B or C)", line_no);
        } else if (verb == "request") {
            if (rest.empty()) throw ParseError("request needs a query", line_no);
            script.actions.push_back({Action::Kind::request, strip_quotes(rest)});
        } else if (verb == "modify-response") {
            if (rest.empty()) throw ParseError("modify-response needs replacement text", line_no);
            script.actions.push_back({Action::Kind::modify_response, strip_quotes(rest)});
        } else if (verb == "inject") {
            if (rest.find(" -> ") == std::string::npos)
                throw ParseError("inject needs '<prompt> -> <completion>'", line_no);
            script.actions.push_back({Action::Kind::inject, strip_quotes(rest)});
        } else if (verb == "observe") {
            script.actions.push_back({Action::Kind::observe, strip_quotes(rest)});
        } else {
            throw ParseError("unknown directive '" + verb + "'", line_no);
        }
    }
    return script;
}

std::string script_digest(const AdversaryScript& script) {
    std::string canon;
    for (Role r : script.corruptions) {
        canon += "corrupt ";
        canon += role_letter(r);
        canon += '\n';
    }
    for (const Action& action : script.actions) {
        switch (action.kind) {
            case Action::Kind::inject: canon += "inject "; break;
            case Action::Kind::modify_response: canon += "modify-response "; break;
            case Action::Kind::request: canon += "request "; break;
            case Action::Kind::observe: canon += "observe "; break;
        }
        canon += action.arg;
        canon += '\n';
    }
    return fnv1a_hex(canon);
}

HarnessInputs default_inputs() {
    HarnessInputs inputs;
    inputs.pairs = {
        {"home1 lighting light brightness range", "100%", false},
        {"home2 lighting light brightness range", "90%", false},
        {"home3 lighting light brightness range", "80%", false},
        {"home1 lighting light mode", "auto", false},
        {"home1 lighting light mode", "auto", false},
        {"home1 lighting light mode", "auto", false},
        {"home1 lighting light mode", "manual", false},
        {"home1 climate sensor temperature unit", "celsius", false},
        {"home2 climate sensor temperature unit", "celsius", false},
        {"home1 profile owner name", "alice", true},
        {"home2 profile owner name", "bob", true},
        {"home3 profile owner name", "carol", true},
    };
    inputs.queries = {
        "home1 lighting light brightness range",
        "home1 lighting light mode",
        "home2 profile owner name",
        "ref 17",
        "something nobody trained",
    };
    inputs.base = toy::make_reference_base(2000);
    inputs.budget_fraction = 0.01;
    return inputs;
}

Transcript real_run(const AdversaryScript& script, const HarnessInputs& inputs) {
    validate_actions(script);
    Transcript t;
    t.world = World::real;
    t.script_digest = script_digest(script);

    std::vector<toy::TrainingPair> uploaded = effective_pairs(script, inputs);
    toy::Delta delta = toy::fit_delta(inputs.base, uploaded, inputs.budget_fraction);
    std::string wire = toy::serialize_delta(delta);

    t.messages.push_back({1, Role::A, Role::C, "upload", fnv1a_hex(wire), false});
    t.messages.push_back({2, Role::C, Role::A, "receipt", fnv1a_hex("receipt"), false});
    t.views[Role::C] = fnv1a_hex(wire);
    t.views[Role::A] = fnv1a_hex("receipt");

    toy::ToyModel model = toy::merge(inputs.base, delta);
    answer_queries(t, script, effective_queries(script, inputs),
                   [&model](const std::string& q) {
                       std::optional<std::string> answer = toy::generate(model, q, {});
                       return answer ? *answer : std::string(toy::kNoKnowledge);
                   });
    return t;
}

Transcript ideal_run(const AdversaryScript& script, const HarnessInputs& inputs) {
    validate_actions(script);
    Transcript t;
    t.world = World::ideal;
    t.script_digest = script_digest(script);

    std::vector<toy::TrainingPair> stored = effective_pairs(script, inputs);

    t.messages.push_back({1, Role::A, Role::C, "upload", fnv1a_hex("ideal store"), false});
    t.messages.push_back({2, Role::C, Role::A, "receipt", fnv1a_hex("receipt"), false});
    // A corrupted C is handed simulator-fabricated upload content; an honest
    // C sees nothing of the store at all.
    t.views[Role::C] = script.corruptions.count(Role::C)
                           ? fnv1a_hex("dummy delta for corrupted host")
                           : fnv1a_hex("");
    t.views[Role::A] = fnv1a_hex("receipt");

    const toy::ToyModel& base = inputs.base;
    answer_queries(t, script, effective_queries(script, inputs),
                   [&stored, &base](const std::string& q) {
                       std::optional<std::string> answer = plaintext_answer(stored, q);
                       if (!answer) answer = toy::generate(base, q, {});
                       return answer ? *answer : std::string(toy::kNoKnowledge);
                   });
    return t;
}

std::vector<std::string> canonical_messages(const Transcript& t) {
    std::vector<std::string> out;
    out.reserve(t.messages.size());
    for (const Message& m : t.messages) {
        std::string row = std::to_string(m.step);
        row += '|';
        row += role_letter(m.from);
        row += '>';
        row += role_letter(m.to);
        row += '|';
        row += m.kind;
        row += '|';
        row += m.observable ? m.digest : std::string("-");
        out.push_back(std::move(row));
    }
    return out;
}

bool distinguish(const Transcript& real, const Transcript& ideal) {
    if (real.script_digest != ideal.script_digest)
        throw ValidationError("transcripts come from different scripts");
    return canonical_messages(real) != canonical_messages(ideal);
}

std::optional<std::string> plaintext_answer(const std::vector<toy::TrainingPair>& pairs,
                                            const std::string& query) {
    std::string key = canonical_text(query);
    std::map<std::string, std::size_t> counts;
    for (const toy::TrainingPair& p : pairs)
        if (canonical_text(p.prompt) == key) counts[canonical_text(p.completion)] += 1;
    if (counts.empty()) return std::nullopt;

    const std::string* best = &counts.begin()->first;
    std::size_t best_n = counts.begin()->second;
    for (const auto& [completion, n] : counts) {
        if (n > best_n) {
            best_n = n;
            best = &completion;
        }
    }
    return *best;
}

bool homomorphism_check(const std::vector<toy::TrainingPair>& pairs,
                        const std::vector<std::string>& queries) {
    toy::ToyModel empty_base;
    toy::Delta delta = toy::fit_delta(empty_base, pairs, 1.0);
    toy::ToyModel model = toy::merge(empty_base, delta);
    for (const std::string& q : queries) {
        std::optional<std::string> via_model = toy::generate(model, q, {});
        std::optional<std::string> via_counts = plaintext_answer(pairs, q);
        if (via_model != via_counts) return false;
    }
    return true;
}

AttackResult reversal_attack(const toy::ToyModel& model,
                             const std::vector<std::string>& known_answers,
                             const std::vector<std::string>& sensitive_keys,
                             int trials, std::uint64_t seed) {
    if (trials < 1) throw ValidationError("trials must be >= 1");
    if (known_answers.empty()) throw ValidationError("no answers to probe with");

    std::set<std::string> keys;
    for (const std::string& k : sensitive_keys) keys.insert(canonical_text(k));

    std::mt19937_64 rng(seed);
    std::vector<std::string> vocab = known_answers;
    std::size_t decoys = std::max<std::size_t>(4, known_answers.size());
    for (std::size_t i = 0; i < decoys; ++i) {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(rng()));
        vocab.push_back("decoy " + std::string(buf));
    }

    AttackResult result;
    result.trials = trials;
    for (int t = 0; t < trials; ++t) {
        const std::string& answer = vocab[static_cast<std::size_t>(t) % vocab.size()];
        std::string query;
        switch (t % 4) {
            case 0: query = "which key maps to " + answer; break;
            case 1: query = "who has " + answer; break;
            case 2: query = "what maps to " + answer; break;
            default: query = answer; break;
        }
        std::optional<std::string> reply = toy::generate(model, query, {});
        if (reply && keys.count(canonical_text(*reply))) result.successes += 1;
    }
    result.success_rate = static_cast<double>(result.successes) / static_cast<double>(trials);
    return result;
}

std::vector<CheckRow> run_script_checks(const std::string& script_name,
                                        const AdversaryScript& script,
                                        const HarnessInputs& inputs) {
    std::vector<CheckRow> rows;
    Transcript real = real_run(script, inputs);
    Transcript ideal = ideal_run(script, inputs);

    bool distinguishable = distinguish(real, ideal);
    rows.push_back({script_name, "outside_view_equal", !distinguishable,
                    std::to_string(real.messages.size()) + " messages"});

    bool homo = homomorphism_check(inputs.pairs, inputs.queries);
    rows.push_back({script_name, "homomorphism", homo,
                    std::to_string(inputs.queries.size()) + " queries"});

    std::vector<toy::TrainingPair> secure = toy::encode_secure_pairs(inputs.pairs);
    toy::ToyModel model =
        toy::merge(inputs.base, toy::fit_delta(inputs.base, secure, inputs.budget_fraction));

    std::set<std::string> prompts;
    for (const toy::TrainingPair& p : secure) prompts.insert(canonical_text(p.prompt));
    std::size_t correct = 0;
    for (const std::string& prompt : prompts) {
        std::optional<std::string> via_model = toy::generate(model, prompt, {});
        std::optional<std::string> via_counts = plaintext_answer(secure, prompt);
        if (via_model && via_counts && *via_model == *via_counts) ++correct;
    }
    rows.push_back({script_name, "forward_accuracy", correct == prompts.size(),
                    std::to_string(correct) + "/" + std::to_string(prompts.size())});

    std::vector<std::string> answers;
    std::vector<std::string> sensitive_keys;
    for (const toy::TrainingPair& p : inputs.pairs) {
        if (!p.sensitive) continue;
        answers.push_back(p.completion);
        sensitive_keys.push_back(p.prompt);
    }
    if (answers.empty()) {
        rows.push_back({script_name, "reversal_zero_success", true, "no sensitive pairs"});
    } else {
        AttackResult attack = reversal_attack(model, answers, sensitive_keys, 1000, 1);
        rows.push_back({script_name, "reversal_zero_success", attack.successes == 0,
                        std::to_string(attack.successes) + "/" +
                            std::to_string(attack.trials) + " recovered"});
    }

    std::string raw_digest = fnv1a_hex(serialize_pairs(inputs.pairs));
    auto c_view = real.views.find(Role::C);
    bool no_raw = c_view != real.views.end() && c_view->second != raw_digest;
    rows.push_back({script_name, "host_never_sees_raw_pairs", no_raw, "view is delta digest"});

    return rows;
}

std::string report_csv(const std::vector<CheckRow>& rows) {
    std::string csv = "script,check,passed,detail\n";
    for (const CheckRow& row : rows)
        csv += csv_line({row.script, row.check, row.passed ? "true" : "false", row.detail});
    return csv;
}

} // namespace dtsn::sec
