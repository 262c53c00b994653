#include "dtsn/toy_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "dtsn/errors.hpp"
#include "dtsn/format.hpp"

namespace dtsn::toy {

namespace {

void check_distribution(const std::string& key, const Distribution& dist) {
    if (dist.empty())
        throw ValidationError("empty distribution for key '" + key + "'");
    double sum = 0.0;
    for (const auto& [completion, p] : dist) {
        if (p <= 0.0)
            throw ValidationError("non-positive probability for key '" + key + "'");
        sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw ValidationError("distribution for key '" + key + "' does not sum to 1");
}

void insert_vocab(std::set<std::string>& vocab, const std::string& text) {
    for (std::string& token : split_tokens(text)) vocab.insert(std::move(token));
}

// Argmax with ties going to the lexicographically smallest completion,
// which is the first maximal entry of the ordered map.
const std::string& argmax(const Distribution& dist) {
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

std::string context_suffix(const std::vector<PromptRecord>& context) {
    // newest record per entity, then entities in id order
    std::map<std::string, const PromptRecord*> newest;
    for (const PromptRecord& r : context) {
        auto it = newest.find(r.entity);
        if (it == newest.end() || r.tick >= it->second->tick) newest[r.entity] = &r;
    }
    std::string out;
    for (const auto& [entity, record] : newest) {
        if (!out.empty()) out += " | ";
        out += canonical_text(entity) + "=" + canonical_text(record->payload);
    }
    return out;
}

} // namespace

ToyModel::ToyModel(std::map<std::string, Distribution> table) : table_(std::move(table)) {
    std::map<std::string, Distribution> canonical;
    for (auto& [key, dist] : table_) {
        check_distribution(key, dist);
        Distribution canon_dist;
        for (auto& [completion, p] : dist) canon_dist[canonical_text(completion)] += p;
        canonical[canonical_text(key)] = std::move(canon_dist);
    }
    table_ = std::move(canonical);
    for (const auto& [key, dist] : table_) {
        insert_vocab(vocab_, key);
        for (const auto& [completion, p] : dist) insert_vocab(vocab_, completion);
    }
}

std::size_t ToyModel::param_count() const {
    std::size_t count = 0;
    for (const auto& [key, dist] : table_) count += dist.size();
    return count;
}

const Distribution* ToyModel::find(const std::string& canonical_key) const {
    auto it = table_.find(canonical_key);
    return it == table_.end() ? nullptr : &it->second;
}

std::size_t delta_size(const Delta& d) {
    return d.overlays.size();
}

Delta fit_delta(const ToyModel& base, const std::vector<TrainingPair>& pairs,
                double budget_fraction) {
    if (pairs.empty())
        throw ValidationError("cannot fit a delta from zero pairs");
    if (budget_fraction <= 0.0 || budget_fraction > 1.0)
        throw ValidationError("budget_fraction must be in (0, 1]");

    std::map<std::string, std::map<std::string, std::size_t>> counts;
    for (const TrainingPair& pair : pairs) {
        std::string key = canonical_text(pair.prompt);
        std::string completion = canonical_text(pair.completion);
        if (key.empty() || completion.empty())
            throw ValidationError("training pair with an empty side");
        counts[key][completion] += 1;
    }

    if (base.param_count() > 0) {
        double allowed = budget_fraction * static_cast<double>(base.param_count());
        if (static_cast<double>(counts.size()) > allowed + 1e-9)
            throw ValidationError(
                "fine-tune budget exceeded: fit needs " + std::to_string(counts.size()) +
                " rows, budget allows " + std::to_string(static_cast<long long>(allowed)));
    }

    Delta d;
    for (const auto& [key, completions] : counts) {
        std::size_t total = 0;
        for (const auto& [completion, n] : completions) total += n;
        Distribution dist;
        for (const auto& [completion, n] : completions)
            dist[completion] = static_cast<double>(n) / static_cast<double>(total);
        d.overlays[key] = std::move(dist);
    }
    return d;
}

ToyModel merge(const ToyModel& base, const Delta& d) {
    std::map<std::string, Distribution> table = base.table();
    for (const auto& [key, dist] : d.overlays) table[key] = dist;
    return ToyModel(std::move(table));
}

std::optional<std::string> generate(const ToyModel& m, const std::string& prompt,
                                    const std::vector<PromptRecord>& context) {
    std::string key = canonical_text(prompt);
    if (key.empty())
        throw ValidationError("empty prompt");
    if (!context.empty()) {
        const Distribution* with_context = m.find(key + " :: " + context_suffix(context));
        if (with_context) return argmax(*with_context);
    }
    const Distribution* dist = m.find(key);
    if (!dist) return std::nullopt;
    return argmax(*dist);
}

std::vector<TrainingPair> encode_secure_pairs(const std::vector<TrainingPair>& pairs) {
    std::vector<std::pair<std::string, std::string>> protected_facts;
    for (const TrainingPair& pair : pairs)
        if (pair.sensitive)
            protected_facts.emplace_back(canonical_text(pair.prompt),
                                         canonical_text(pair.completion));

    std::vector<TrainingPair> out;
    out.reserve(pairs.size());
    for (const TrainingPair& pair : pairs) {
        std::string prompt = canonical_text(pair.prompt);
        std::string completion = canonical_text(pair.completion);
        bool reversed = false;
        for (const auto& [key, answer] : protected_facts) {
            if (prompt == key && completion == answer) continue; // the forward fact itself
            if (completion.empty()) continue;
            bool answer_in_prompt = prompt.find(answer) != std::string::npos;
            // The completion names the protected subject if either string
            // contains the other ("alice" within "alice.brightness" counts).
            bool names_subject = completion.find(key) != std::string::npos ||
                                 key.find(completion) != std::string::npos;
            if (answer_in_prompt && names_subject) {
                reversed = true;
                break;
            }
        }
        if (!reversed) out.push_back(pair);
    }
    return out;
}

std::string serialize_delta(const Delta& d) {
    std::string out;
    for (const auto& [key, dist] : d.overlays)
        for (const auto& [completion, p] : dist)
            out += key + "\t" + completion + "\t" + format_double(p) + "\n";
    return out;
}

Delta parse_delta(const std::string& text) {
    Delta d;
    std::map<std::string, Distribution> rows;
    int line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;

        std::size_t tab1 = line.find('\t');
        std::size_t tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos)
            throw ParseError("expected key<TAB>completion<TAB>probability", line_no);
        std::string key = line.substr(0, tab1);
        std::string completion = line.substr(tab1 + 1, tab2 - tab1 - 1);
        std::string prob_text = line.substr(tab2 + 1);
        double p = 0.0;
        auto res = std::from_chars(prob_text.data(), prob_text.data() + prob_text.size(), p);
        if (res.ec != std::errc() || res.ptr != prob_text.data() + prob_text.size())
            throw ParseError("bad probability '" + prob_text + "'", line_no);
        rows[key][completion] = p;
    }
    d.overlays = std::move(rows);
    for (const auto& [key, dist] : d.overlays) check_distribution(key, dist);
    return d;
}

ToyModel make_reference_base(std::size_t entries) {
    std::map<std::string, Distribution> table;
    for (std::size_t i = 0; i < entries; ++i)
        table["ref " + std::to_string(i)] = {{"entry " + std::to_string(i), 1.0}};
    return ToyModel(std::move(table));
}

} // namespace dtsn::toy
