#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dtsn::cost {

// All sizes below are abstract units: data-units for state/history payloads
// and parameter-units for model weights. Seconds come out of the closed
// forms; bytes appear only when a report multiplies by bytes_per_unit.

enum class LogBase { two, natural };

// Resource profile of one physical entity and its digital twin.
struct EntityProfile {
    double cpu_hz = 0.0;              // local CPU cycle frequency
    double train_cycles = 0.0;        // cycles per (data-unit x parameter-unit) trained
    double history_units = 0.0;       // accumulated training data
    double static_state_units = 0.0;  // slowly-changing state used for fine-tuning
    double full_state_units = 0.0;    // complete state snapshot
    double dynamic_state_units = 0.0; // fast-changing state slice
    double semantic_state_units = 0.0;// dynamic slice after semantic encoding
    double full_params = 0.0;         // full model size
    double delta_params = 0.0;        // fine-tune delta size
};

// Shared edge server hosting the twins.
struct ServerProfile {
    double cpu_hz = 0.0;              // server CPU cycle frequency
    double agg_cycles_per_param = 0.0;// cycles per parameter-unit aggregated or merged
    double virtual_rate = 0.0;        // twin-to-twin rate; 0 means "derive as
                                      // 100x the fastest physical link"
};

// Uplink model shared by all entities: each link gets a slice of the
// total bandwidth proportional to its subchannel count.
struct ChannelConfig {
    double bandwidth_hz = 0.0;
    int total_subchannels = 0;
    std::vector<int> entity_subchannels; // one entry per entity
    std::vector<int> server_subchannels; // one entry per server link
    double snr = 0.0;                    // linear (not dB), >= 0
    LogBase log_base = LogBase::two;
};

struct Scenario {
    std::vector<EntityProfile> entities;
    ServerProfile server;
    ChannelConfig channel;
    int fl_rounds = 1;           // construction rounds for the federated paradigm
    int kb_period = 1;           // ticks between knowledge-base syncs (semantic paradigm)
    double prompt_db_units = 0.0;// shared prompt database size
    double bytes_per_unit = 1.0; // report formatting only, never enters a formula
};

// One paradigm's wall-clock composition. total is the paradigm-specific
// sum: the federated paradigm serves twin-to-twin exchange out of server
// compute, so there total = entity_compute + server_compute + intra_comm
// and inter_comm merely mirrors server_compute; the semantic paradigm adds
// all four fields.
struct TimeBreakdown {
    double entity_compute = 0.0;
    double server_compute = 0.0;
    double intra_comm = 0.0;
    double inter_comm = 0.0;
    double total = 0.0;
};

struct AllocationReport {
    bool ok = true;
    int excess = 0; // subchannels requested beyond the total, 0 when ok
};

struct ConstraintReport {
    bool ok = true;
    std::vector<std::string> violations; // human-readable, one per failed inequality
};

struct CompareResult {
    double difference = 0.0;        // semantic minus federated total, single round/tick
    bool constraints_satisfied = false;
    double ratio = 0.0;             // federated / semantic at the configured rounds/period
};

// Shannon-style link rate: (subchannels/total) * bandwidth * log(1+snr).
// Throws ValidationError when the config has no subchannels, the count is
// negative or exceeds the total, or snr is negative.
double channel_rate(int subchannels, const ChannelConfig& cfg, double snr);

// Checks sum(entity) + sum(server) <= total. Violation is a value, not an error.
AllocationReport validate_allocation(const ChannelConfig& cfg);

// Throw ValidationError on non-positive frequencies, negative sizes, or
// (when semantic_paradigm is set) a broken size ordering:
// semantic < dynamic < full state and delta < full params, all strict.
void validate_entity(const EntityProfile& e, bool semantic_paradigm);
void validate_server(const ServerProfile& s);
void validate_channel(const ChannelConfig& cfg);
void validate_scenario(const Scenario& sc, bool semantic_paradigm);

// Local training time for one federated round: cycles grow with both the
// data held and the model trained.
double fl_entity_compute(const EntityProfile& e);

// Server-side aggregation time over all submitted models.
double fl_server_aggregate(const ServerProfile& s, const std::vector<double>& param_sizes);

// Twin fine-tune time: only the static slice and the delta participate.
double lt_entity_finetune(const EntityProfile& e);

// Merging one delta into the hosted model.
double lt_server_merge(const ServerProfile& s, double delta_params);

// Physical uplink time for a full model + full state exchange.
double fl_intra_time(const EntityProfile& e, double rate);

// Twin-to-twin exchange in the federated paradigm is served by the
// aggregation itself, so its time equals fl_server_aggregate.
double fl_inter_time(const ServerProfile& s, const std::vector<double>& param_sizes);

// Physical uplink time for a delta + semantic state push.
double lt_intra_time(const EntityProfile& e, double rate);

// Prompt-database consultation over the twin network.
double lt_inter_time(double prompt_db_units, double virtual_rate);

// Link rate of entity `index` under the scenario channel.
double entity_rate(const Scenario& sc, std::size_t index);

// Configured virtual rate, or 100x the fastest physical link when unset.
double resolved_virtual_rate(const Scenario& sc);

// Index of the entity with the largest federated compute time (first one
// on ties). Per-entity terms of both paradigm totals are evaluated there.
std::size_t straggler_index(const Scenario& sc);

// Strict inequalities the efficiency argument assumes, checked per entity.
ConstraintReport check_paradigm_constraints(const Scenario& sc);

// Federated construction: fl_rounds * (slowest local training + aggregation
// + up/down weight exchange) + one-time history upload, all at the straggler.
TimeBreakdown fl_total(const Scenario& sc);

// Semantic construction per tick: sync cost amortized over kb_period, plus
// the per-tick semantic push and prompt-database consultation.
TimeBreakdown lt_total(const Scenario& sc);

// difference uses one round / one tick (fl_rounds = kb_period = 1);
// ratio uses the configured values.
CompareResult compare(const Scenario& sc);

} // namespace dtsn::cost
