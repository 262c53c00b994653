#include "dtsn/protocol.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <tuple>

#include "dtsn/errors.hpp"
#include "dtsn/format.hpp"

namespace dtsn::sim {

namespace {

constexpr const char* kFl = "fl";
constexpr const char* kSemantic = "llm_twin";

// Epsilon-robust ceiling: 0.05 * 100 must land on 5, not 6.
double units_ceil(double x) {
    return std::ceil(x - 1e-9);
}

double require_rate(double rate) {
    if (rate <= 0.0) throw ValidationError("dead channel: link rate must be positive");
    return rate;
}

// Parses "70" or "70%"; returns the number and whether a '%' followed it.
std::optional<std::pair<double, bool>> parse_value(const std::string& token) {
    std::string_view body = token;
    bool percent = !body.empty() && body.back() == '%';
    if (percent) body.remove_suffix(1);
    double v = 0.0;
    auto res = std::from_chars(body.data(), body.data() + body.size(), v);
    if (res.ec != std::errc() || res.ptr != body.data() + body.size()) return std::nullopt;
    return std::make_pair(v, percent);
}

// Value token following the property token in a payload, if any.
std::optional<std::pair<double, bool>> payload_value(const std::string& payload,
                                                     const std::string& property) {
    std::vector<std::string> tokens = split_tokens(payload);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
        if (tokens[i] == property) return parse_value(tokens[i + 1]);
    return std::nullopt;
}

std::string format_value(double v, bool percent) {
    std::string out = format_double(v);
    if (percent) out.push_back('%');
    return out;
}

} // namespace

void PromptDatabase::append(PromptRecord record) {
    total_units_ += record.units;
    records_.push_back(std::move(record));
}

void PromptDatabase::preload(double units) {
    if (units < 0.0) throw ValidationError("negative prompt database size");
    total_units_ += units;
}

EncodedPayload encode_semantic(const std::vector<StateRecord>& state, double ratio) {
    if (state.empty())
        throw ValidationError("nothing to encode: state is empty");
    if (ratio <= 0.0 || ratio >= 1.0)
        throw ValidationError("semantic ratio must be in (0, 1)");

    double count = static_cast<double>(state.size());
    EncodedPayload out;
    out.units = units_ceil(ratio * count);
    if (!(out.units < count))
        throw ValidationError("semantic payload does not compress its source");

    std::vector<const StateRecord*> kept;
    for (const StateRecord& r : state)
        if (!r.sensitive) kept.push_back(&r);
    std::sort(kept.begin(), kept.end(), [](const StateRecord* a, const StateRecord* b) {
        return std::tie(a->system, a->device, a->property) <
               std::tie(b->system, b->device, b->property);
    });
    for (const StateRecord* r : kept) {
        if (!out.tokens.empty()) out.tokens += " ; ";
        out.tokens += canonical_text(r->system + " " + r->device + " " + r->property + " " + r->value);
    }
    return out;
}

std::vector<toy::TrainingPair> pairs_from_state(const std::string& entity_id,
                                                const std::vector<StateRecord>& records) {
    std::vector<toy::TrainingPair> pairs;
    pairs.reserve(records.size());
    for (const StateRecord& r : records) {
        toy::TrainingPair pair;
        pair.prompt = entity_id + " " + r.system + " " + r.device + " " + r.property;
        pair.completion = r.value;
        pair.sensitive = r.sensitive;
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

DigitalTwin build_twin(const PhysicalEntity& e, const toy::ToyModel& base,
                       double budget_fraction) {
    DigitalTwin twin;
    twin.owner = e.id;
    twin.kb_version = 1;
    twin.last_sync_tick = 0;
    if (e.local_pairs.empty()) {
        twin.merged_model = base;
    } else {
        toy::Delta delta = toy::fit_delta(base, e.local_pairs, budget_fraction);
        twin.merged_model = toy::merge(base, delta);
    }
    return twin;
}

std::optional<TimingEvent> intra_sync(const PhysicalEntity& e, DigitalTwin& twin,
                                      long long tick, int kb_period,
                                      const toy::ToyModel& base, double budget_fraction,
                                      double rate) {
    if (kb_period < 1) throw ValidationError("kb_period must be >= 1");
    if (tick - twin.last_sync_tick < kb_period) return std::nullopt;
    require_rate(rate);

    if (e.local_pairs.empty()) {
        twin.merged_model = base;
    } else {
        toy::Delta delta = toy::fit_delta(base, e.local_pairs, budget_fraction);
        twin.merged_model = toy::merge(base, delta);
    }
    twin.kb_version += 1;
    twin.last_sync_tick = tick;

    TimingEvent ev;
    ev.tick = tick;
    ev.actor = e.id;
    ev.kind = "delta_upload";
    ev.units = e.profile.delta_params;
    ev.seconds = e.profile.delta_params / rate;
    ev.paradigm = kSemantic;
    ev.subject = e.id;
    return ev;
}

std::vector<PromptRecord> query_prompts(const PromptDatabase& db,
                                        const std::string& /*requester*/,
                                        const std::string& selector) {
    std::string wanted = canonical_text(selector);
    if (wanted.empty()) throw ValidationError("empty selector");

    struct Newest {
        const PromptRecord* record = nullptr;
        std::size_t index = 0;
    };
    std::map<std::string, Newest> newest;
    const std::vector<PromptRecord>& records = db.records();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const PromptRecord& r = records[i];
        std::vector<std::string> tokens = split_tokens(r.payload);
        if (std::find(tokens.begin(), tokens.end(), wanted) == tokens.end()) continue;
        auto it = newest.find(r.entity);
        if (it == newest.end() || r.tick > it->second.record->tick ||
            (r.tick == it->second.record->tick && i > it->second.index)) {
            newest[r.entity] = {&r, i};
        }
    }
    std::vector<PromptRecord> out;
    out.reserve(newest.size());
    for (const auto& [entity, hit] : newest) out.push_back(*hit.record);
    return out;
}

Decision inter_twin_decide(const DigitalTwin& twin, const DecisionRequest& request,
                           const PromptDatabase& db) {
    std::string property = canonical_text(request.property);
    if (property.empty()) throw ValidationError("decision request without a property");

    std::vector<PromptRecord> context = query_prompts(db, twin.owner, property);
    std::string owner = canonical_text(twin.owner);

    std::optional<std::pair<double, bool>> own;
    std::vector<double> values;
    for (const PromptRecord& r : context) {
        auto v = payload_value(r.payload, property);
        if (!v) continue;
        values.push_back(v->first);
        if (canonical_text(r.entity) == owner) own = v;
    }

    if (!own) {
        // Fall back to the twin's static knowledge of its own entity.
        for (const auto& [key, dist] : twin.merged_model.table()) {
            std::vector<std::string> tokens = split_tokens(key);
            if (tokens.empty() || tokens.front() != owner) continue;
            if (std::find(tokens.begin(), tokens.end(), property) == tokens.end()) continue;
            if (std::find(tokens.begin(), tokens.end(), "range") != tokens.end()) continue;
            std::optional<std::string> answer = toy::generate(twin.merged_model, key, {});
            if (!answer) continue;
            auto v = parse_value(*answer);
            if (v) {
                own = v;
                break;
            }
        }
    }

    Decision decision;
    if (!own) {
        decision.known = false;
        decision.text = toy::kNoKnowledge;
        return decision;
    }

    double mean = own->first;
    if (!values.empty()) {
        double sum = 0.0;
        for (double v : values) sum += v;
        mean = sum / static_cast<double>(values.size());
    }

    double cap = std::numeric_limits<double>::infinity();
    for (const auto& [key, dist] : twin.merged_model.table()) {
        std::vector<std::string> tokens = split_tokens(key);
        if (tokens.empty() || tokens.front() != owner) continue;
        bool has_range = false;
        for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
            if (tokens[i] == property && tokens[i + 1] == "range") has_range = true;
        if (!has_range) continue;
        std::optional<std::string> answer = toy::generate(twin.merged_model, key, {});
        if (!answer) continue;
        auto v = parse_value(*answer);
        if (v) {
            cap = v->first;
            break;
        }
    }

    decision.known = true;
    if (own->first < mean) {
        decision.value = std::min(mean, cap);
        decision.text = "set " + property + " to " + format_value(decision.value, own->second);
    } else {
        decision.value = own->first;
        decision.text = "keep " + property + " at " + format_value(decision.value, own->second);
    }
    return decision;
}

Simulation::Simulation(cost::Scenario scenario, std::vector<PhysicalEntity> entities,
                       SimParams params, Paradigm paradigm)
    : scenario_(std::move(scenario)),
      entities_(std::move(entities)),
      params_(std::move(params)),
      paradigm_(paradigm) {
    if (entities_.empty())
        throw ValidationError("scenario has no entities");

    // The profiles carried by the entities are the single source of truth.
    scenario_.entities.clear();
    for (const PhysicalEntity& e : entities_) scenario_.entities.push_back(e.profile);
    cost::validate_scenario(scenario_, paradigm_ == Paradigm::semantic);

    for (const PhysicalEntity& e : entities_) {
        if (!e.dynamic_state.empty()) {
            double count = static_cast<double>(e.dynamic_state.size());
            if (std::fabs(count - e.profile.dynamic_state_units) > 1e-9)
                throw ValidationError("entity '" + e.id +
                                      "': dynamic records disagree with profile size");
            double encoded = units_ceil(params_.semantic_ratio * count);
            if (std::fabs(encoded - e.profile.semantic_state_units) > 1e-9)
                throw ValidationError("entity '" + e.id +
                                      "': semantic size disagrees with encoded dynamic state");
        }
        if (!e.static_state.empty()) {
            double count = static_cast<double>(e.static_state.size());
            if (std::fabs(count - e.profile.static_state_units) > 1e-9)
                throw ValidationError("entity '" + e.id +
                                      "': static records disagree with profile size");
        }
    }

    if (paradigm_ == Paradigm::semantic) {
        // Size the reference base so every fit stays inside its budget by
        // at least the configured fraction, as a full-scale model would.
        std::size_t max_rows = 1;
        for (const PhysicalEntity& e : entities_) {
            std::set<std::string> keys;
            for (const toy::TrainingPair& p : e.local_pairs)
                keys.insert(canonical_text(p.prompt));
            max_rows = std::max(max_rows, keys.size());
        }
        auto base_entries = static_cast<std::size_t>(
            std::ceil(static_cast<double>(max_rows) / params_.budget_fraction));
        base_ = toy::make_reference_base(std::max<std::size_t>(base_entries, 1000));

        for (const PhysicalEntity& e : entities_)
            twins_.push_back(build_twin(e, base_, params_.budget_fraction));

        db_.preload(scenario_.prompt_db_units);
        db_snapshot_units_ = db_.total_units();
    }
}

void Simulation::run_ticks(long long ticks) {
    if (paradigm_ != Paradigm::semantic)
        throw ValidationError("run_ticks is only valid for the semantic paradigm");
    if (ticks < 0)
        throw ValidationError("negative tick count");
    for (long long t = 0; t < ticks; ++t) tick_semantic();
}

void Simulation::tick_semantic() {
    now_ += 1;
    ticks_run_ += 1;
    double virtual_rate = require_rate(cost::resolved_virtual_rate(scenario_));

    // 1. Every entity pushes its encoded dynamic state.
    for (std::size_t i = 0; i < entities_.size(); ++i) {
        const PhysicalEntity& e = entities_[i];
        double rate = require_rate(cost::entity_rate(scenario_, i));

        PromptRecord record;
        record.entity = e.id;
        record.tick = now_;
        record.units = e.profile.semantic_state_units;
        if (!e.dynamic_state.empty()) {
            record.payload = encode_semantic(e.dynamic_state, params_.semantic_ratio).tokens;
        } else {
            record.payload = canonical_text(e.id) + " state tick " + std::to_string(now_);
        }
        db_.append(record);

        TimingEvent ev;
        ev.tick = now_;
        ev.actor = e.id;
        ev.kind = "prompt_push";
        ev.units = e.profile.semantic_state_units;
        ev.seconds = e.profile.semantic_state_units / rate;
        ev.paradigm = kSemantic;
        ev.subject = e.id;
        events_.push_back(std::move(ev));
    }

    // 2. Every twin consults the database and decides.
    for (std::size_t i = 0; i < entities_.size(); ++i) {
        const PhysicalEntity& e = entities_[i];
        Decision decision =
            inter_twin_decide(twins_[i], DecisionRequest{params_.decision_property}, db_);
        decisions_.push_back({now_, e.id, decision});

        double priced_units = params_.pricing == DbPricing::snapshot ? db_snapshot_units_
                                                                     : db_.total_units();
        TimingEvent ev;
        ev.tick = now_;
        ev.actor = e.id;
        ev.kind = "prompt_query";
        ev.units = priced_units;
        ev.seconds = priced_units / virtual_rate;
        ev.paradigm = kSemantic;
        ev.subject = e.id;
        events_.push_back(std::move(ev));
    }

    // 3. Knowledge-base sync when due, then refresh the pricing snapshot.
    bool any_sync = false;
    for (std::size_t i = 0; i < entities_.size(); ++i) {
        const PhysicalEntity& e = entities_[i];
        double rate = require_rate(cost::entity_rate(scenario_, i));
        std::optional<TimingEvent> upload =
            intra_sync(e, twins_[i], now_, scenario_.kb_period, base_, params_.budget_fraction, rate);
        if (!upload) continue;
        any_sync = true;

        TimingEvent finetune;
        finetune.tick = now_;
        finetune.actor = e.id;
        finetune.kind = "finetune";
        finetune.units = e.profile.delta_params;
        finetune.seconds = cost::lt_entity_finetune(e.profile);
        finetune.paradigm = kSemantic;
        finetune.subject = e.id;
        events_.push_back(std::move(finetune));

        TimingEvent merge_ev;
        merge_ev.tick = now_;
        merge_ev.actor = "server";
        merge_ev.kind = "merge";
        merge_ev.units = e.profile.delta_params;
        merge_ev.seconds = cost::lt_server_merge(scenario_.server, e.profile.delta_params);
        merge_ev.paradigm = kSemantic;
        merge_ev.subject = e.id;
        events_.push_back(std::move(merge_ev));

        events_.push_back(std::move(*upload));
    }
    if (any_sync) db_snapshot_units_ = db_.total_units();
}

void Simulation::run_epoch() {
    if (paradigm_ != Paradigm::federated)
        throw ValidationError("run_epoch is only valid for the federated paradigm");
    if (epoch_done_)
        throw ValidationError("construction epoch already run");
    epoch_done_ = true;

    std::vector<double> sizes;
    sizes.reserve(entities_.size());
    for (const PhysicalEntity& e : entities_) sizes.push_back(e.profile.full_params);

    // One-time history upload before the first round.
    for (std::size_t i = 0; i < entities_.size(); ++i) {
        const PhysicalEntity& e = entities_[i];
        double rate = require_rate(cost::entity_rate(scenario_, i));
        TimingEvent ev;
        ev.tick = 0;
        ev.actor = e.id;
        ev.kind = "history_upload";
        ev.units = e.profile.history_units;
        ev.seconds = e.profile.history_units / rate;
        ev.paradigm = kFl;
        ev.subject = e.id;
        events_.push_back(std::move(ev));
    }

    for (int round = 1; round <= scenario_.fl_rounds; ++round) {
        for (std::size_t i = 0; i < entities_.size(); ++i) {
            const PhysicalEntity& e = entities_[i];
            double rate = require_rate(cost::entity_rate(scenario_, i));

            TimingEvent train;
            train.tick = round;
            train.actor = e.id;
            train.kind = "train";
            train.units = e.profile.full_params;
            train.seconds = cost::fl_entity_compute(e.profile);
            train.paradigm = kFl;
            train.subject = e.id;
            events_.push_back(std::move(train));

            TimingEvent exchange;
            exchange.tick = round;
            exchange.actor = e.id;
            exchange.kind = "weight_exchange";
            exchange.units = 2.0 * e.profile.full_params;
            exchange.seconds = 2.0 * e.profile.full_params / rate;
            exchange.paradigm = kFl;
            exchange.subject = e.id;
            events_.push_back(std::move(exchange));
        }

        TimingEvent agg;
        agg.tick = round;
        agg.actor = "server";
        agg.kind = "aggregate";
        agg.units = 0.0;
        for (double s : sizes) agg.units += s;
        agg.seconds = cost::fl_server_aggregate(scenario_.server, sizes);
        agg.paradigm = kFl;
        agg.subject = "server";
        events_.push_back(std::move(agg));
    }
}

cost::TimeBreakdown Simulation::event_totals() const {
    std::size_t idx = cost::straggler_index(scenario_);
    const std::string& straggler = entities_[idx].id;

    cost::TimeBreakdown out;
    if (paradigm_ == Paradigm::federated) {
        for (const TimingEvent& ev : events_) {
            if (ev.kind == "train" && ev.actor == straggler) out.entity_compute += ev.seconds;
            if (ev.kind == "aggregate") out.server_compute += ev.seconds;
            if ((ev.kind == "weight_exchange" || ev.kind == "history_upload") &&
                ev.actor == straggler)
                out.intra_comm += ev.seconds;
        }
        out.inter_comm = out.server_compute;
        out.total = out.entity_compute + out.server_compute + out.intra_comm;
        return out;
    }

    if (ticks_run_ == 0) return out;
    double ticks = static_cast<double>(ticks_run_);
    for (const TimingEvent& ev : events_) {
        if (ev.subject != straggler) continue;
        if (ev.kind == "finetune") out.entity_compute += ev.seconds;
        if (ev.kind == "merge") out.server_compute += ev.seconds;
        if (ev.kind == "delta_upload" || ev.kind == "prompt_push") out.intra_comm += ev.seconds;
        if (ev.kind == "prompt_query") out.inter_comm += ev.seconds;
    }
    out.entity_compute /= ticks;
    out.server_compute /= ticks;
    out.intra_comm /= ticks;
    out.inter_comm /= ticks;
    out.total = out.entity_compute + out.server_compute + out.intra_comm + out.inter_comm;
    return out;
}

std::string events_to_csv(const std::vector<TimingEvent>& events) {
    std::string csv = "tick,actor,event,units,seconds,paradigm\n";
    for (const TimingEvent& ev : events)
        csv += csv_line({std::to_string(ev.tick), ev.actor, ev.kind, format_double(ev.units),
                         format_double(ev.seconds), ev.paradigm});
    return csv;
}

std::string Simulation::events_csv() const {
    return events_to_csv(events_);
}

} // namespace dtsn::sim
