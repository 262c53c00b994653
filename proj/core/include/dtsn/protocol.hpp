#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dtsn/cost_model.hpp"
#include "dtsn/prompt_record.hpp"
#include "dtsn/toy_model.hpp"

namespace dtsn::sim {

// Time is logical ticks; every protocol step emits a TimingEvent whose
// seconds come from the cost model, so an event log can be summed and
// checked against the closed forms.

struct StateRecord {
    std::string system;
    std::string device;
    std::string property;
    std::string value;
    bool sensitive = false;
};

struct PhysicalEntity {
    std::string id;
    cost::EntityProfile profile;
    std::vector<StateRecord> static_state;
    std::vector<StateRecord> dynamic_state;
    std::vector<toy::TrainingPair> local_pairs;
};

struct EncodedPayload {
    std::string tokens;
    double units = 0.0;
};

class PromptDatabase {
public:
    // Appends are serialized; records are never rewritten.
    void append(PromptRecord record);
    const std::vector<PromptRecord>& records() const { return records_; }
    double total_units() const { return total_units_; }

    // Pre-existing history carried into a run (no materialized records).
    void preload(double units);

private:
    std::vector<PromptRecord> records_;
    double total_units_ = 0.0;
};

struct DigitalTwin {
    std::string owner;
    toy::ToyModel merged_model;
    long long kb_version = 0;
    long long last_sync_tick = 0;
};

struct TimingEvent {
    long long tick = 0;
    std::string actor;   // entity id or "server"
    std::string kind;
    double units = 0.0;
    double seconds = 0.0;
    std::string paradigm; // "fl" or "llm_twin"
    // Entity whose pipeline the event belongs to; equals actor for entity
    // events. Not part of the CSV format.
    std::string subject;
};

struct DecisionRequest {
    std::string property;
};

struct Decision {
    bool known = false;
    std::string text;    // e.g. "set brightness to 70%", or the no-knowledge marker
    double value = 0.0;  // target value when known
};

// Lossy-by-accounting projection of a state snapshot: keeps the shareable
// fields (system, device, property, value) of non-sensitive records; the
// accounted size is ceil(ratio * record_count) and must be strictly smaller
// than the source. Throws ValidationError on empty state, ratio outside
// (0,1), or a payload that fails to compress.
EncodedPayload encode_semantic(const std::vector<StateRecord>& state, double ratio);

// Static records as forward training pairs: "<id> <system> <device>
// <property>" -> value, carrying the record's sensitive flag.
std::vector<toy::TrainingPair> pairs_from_state(const std::string& entity_id,
                                                const std::vector<StateRecord>& records);

// Fits the entity's pairs (skipped when empty) and merges onto the base.
DigitalTwin build_twin(const PhysicalEntity& e, const toy::ToyModel& base,
                       double budget_fraction);

// Refits and re-merges when at least kb_period ticks have passed since the
// last sync; returns the priced delta-upload event, or nullopt when skipped.
std::optional<TimingEvent> intra_sync(const PhysicalEntity& e, DigitalTwin& twin,
                                      long long tick, int kb_period,
                                      const toy::ToyModel& base, double budget_fraction,
                                      double rate);

// Newest record per entity whose payload mentions the selector property,
// entities in id order.
std::vector<PromptRecord> query_prompts(const PromptDatabase& db,
                                        const std::string& requester,
                                        const std::string& selector);

// Case-study decision rule: compare the owner's current value against the
// mean over the queried context; when below the mean, raise to the mean
// clamped to the owner's static range; otherwise keep. Own range and (when
// the context lacks it) own value come from the twin's merged model.
Decision inter_twin_decide(const DigitalTwin& twin, const DecisionRequest& request,
                           const PromptDatabase& db);

// How a tick's decisions price the prompt-database consultation:
// `snapshot` uses the database size captured at the current sync boundary
// (matches the closed-form model exactly), `live` uses the current size.
enum class DbPricing { snapshot, live };

struct SimParams {
    double semantic_ratio = 0.05;
    double budget_fraction = 0.01;
    std::string decision_property = "brightness";
    DbPricing pricing = DbPricing::snapshot;
};

enum class Paradigm { federated, semantic };

struct DecisionLogEntry {
    long long tick = 0;
    std::string entity;
    Decision decision;
};

// Deterministic replay of one paradigm. The semantic loop runs per tick:
// every entity pushes its encoded dynamic state, then queries and decides,
// then syncs its knowledge base when due. The federated loop runs one
// construction epoch: per-entity history uploads at tick 0, then fl_rounds
// rounds of local training, weight exchange and aggregation.
class Simulation {
public:
    Simulation(cost::Scenario scenario, std::vector<PhysicalEntity> entities,
               SimParams params, Paradigm paradigm);

    // Semantic paradigm only; runs `ticks` ticks, appending to the log.
    void run_ticks(long long ticks);

    // Federated paradigm only; runs one construction epoch.
    void run_epoch();

    const std::vector<TimingEvent>& events() const { return events_; }
    const PromptDatabase& db() const { return db_; }
    const std::vector<DigitalTwin>& twins() const { return twins_; }
    const std::vector<DecisionLogEntry>& decisions() const { return decisions_; }
    long long ticks_run() const { return ticks_run_; }

    // Event-log aggregation along the straggler's critical path, normalized
    // to one tick (semantic) or one epoch (federated); the independent
    // counterpart of the closed-form totals.
    cost::TimeBreakdown event_totals() const;

    std::string events_csv() const;

private:
    void tick_semantic();

    cost::Scenario scenario_;
    std::vector<PhysicalEntity> entities_;
    SimParams params_;
    Paradigm paradigm_;
    std::vector<DigitalTwin> twins_;
    toy::ToyModel base_;
    PromptDatabase db_;
    std::vector<TimingEvent> events_;
    std::vector<DecisionLogEntry> decisions_;
    long long now_ = 0;
    long long ticks_run_ = 0;
    double db_snapshot_units_ = 0.0;
    bool epoch_done_ = false;
};

// "tick,actor,event,units,seconds,paradigm" rows.
std::string events_to_csv(const std::vector<TimingEvent>& events);

} // namespace dtsn::sim
