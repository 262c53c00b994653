#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dtsn/prompt_record.hpp"

namespace dtsn::toy {

// A desk-scale stand-in for a large conditional model: a table from
// canonical prompt keys to completion distributions. Fine-tuning produces a
// sparse overlay (the delta) that replaces whole rows on merge, which keeps
// the merge operation a pure function and the generate path deterministic.

// completion -> probability; entries positive, summing to 1 within 1e-9.
using Distribution = std::map<std::string, double>;

// Rendered in place of an answer when a key is unknown.
inline constexpr const char* kNoKnowledge = "<no-knowledge>";

struct TrainingPair {
    std::string prompt;
    std::string completion;
    // A sensitive pair is stored in forward orientation only: the protected
    // key is the prompt, the answer is the completion.
    bool sensitive = false;
};

class ToyModel {
public:
    ToyModel() = default;
    explicit ToyModel(std::map<std::string, Distribution> table);

    const std::map<std::string, Distribution>& table() const { return table_; }
    const std::set<std::string>& vocab() const { return vocab_; }

    // Total (key, completion) cells; the desk-scale analogue of a
    // parameter count.
    std::size_t param_count() const;

    const Distribution* find(const std::string& canonical_key) const;

private:
    std::map<std::string, Distribution> table_;
    std::set<std::string> vocab_;
};

struct Delta {
    std::map<std::string, Distribution> overlays;
    int owner = 0;
};

// Number of overlay rows (distinct prompts).
std::size_t delta_size(const Delta& d);

// Count-based fit: one overlay row per distinct canonical prompt, with
// completion probabilities proportional to observed counts. A non-empty
// base bounds the fit: delta_size must stay within budget_fraction of the
// base's param_count. Throws ValidationError on empty pairs, a pair with an
// empty side, or a blown budget.
Delta fit_delta(const ToyModel& base, const std::vector<TrainingPair>& pairs,
                double budget_fraction);

// Overlay application; neither input is mutated.
ToyModel merge(const ToyModel& base, const Delta& d);

// Deterministic argmax completion for the key built from the prompt plus
// canonicalized context (newest record per entity, entities in id order).
// A prompt+context key falls back to the context-free key before giving up.
std::optional<std::string> generate(const ToyModel& m, const std::string& prompt,
                                    const std::vector<PromptRecord>& context);

// Forward-orientation filter: sensitive pairs pass through as provided
// (protected key as prompt), and any pair that states a sensitive fact in
// reverse (answer in the prompt, protected key in the completion) is
// dropped. Non-sensitive pairs pass through unchanged.
std::vector<TrainingPair> encode_secure_pairs(const std::vector<TrainingPair>& pairs);

// Line format "key<TAB>completion<TAB>probability", rows sorted by key then
// completion, probabilities in shortest round-trip form. Byte-stable.
std::string serialize_delta(const Delta& d);
Delta parse_delta(const std::string& text);

// Deterministic filler table ("ref i" -> "entry i"), used where a fit needs
// a large base to be budgeted against.
ToyModel make_reference_base(std::size_t entries);

} // namespace dtsn::toy
