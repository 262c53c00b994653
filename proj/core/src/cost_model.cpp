#include "dtsn/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dtsn/errors.hpp"

namespace dtsn::cost {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

double positive_rate(double rate) {
    if (rate <= 0.0) throw ValidationError("dead channel: link rate must be positive");
    return rate;
}

} // namespace

double channel_rate(int subchannels, const ChannelConfig& cfg, double snr) {
    require(cfg.total_subchannels > 0, "channel has no subchannels to allocate");
    require(subchannels >= 0, "negative subchannel count");
    require(subchannels <= cfg.total_subchannels,
            "allocation of " + std::to_string(subchannels) + " subchannels exceeds total of " +
                std::to_string(cfg.total_subchannels));
    require(cfg.bandwidth_hz >= 0.0, "negative bandwidth");
    require(snr >= 0.0, "negative snr");
    double share = static_cast<double>(subchannels) / static_cast<double>(cfg.total_subchannels);
    double gain = cfg.log_base == LogBase::two ? std::log2(1.0 + snr) : std::log(1.0 + snr);
    return share * cfg.bandwidth_hz * gain;
}

AllocationReport validate_allocation(const ChannelConfig& cfg) {
    long long used = 0;
    for (int c : cfg.entity_subchannels) used += c;
    for (int c : cfg.server_subchannels) used += c;
    AllocationReport report;
    if (used > cfg.total_subchannels) {
        report.ok = false;
        report.excess = static_cast<int>(used - cfg.total_subchannels);
    }
    return report;
}

void validate_entity(const EntityProfile& e, bool semantic_paradigm) {
    require(e.cpu_hz > 0.0, "entity cpu frequency must be positive");
    require(e.train_cycles >= 0.0, "negative train_cycles");
    require(e.history_units >= 0.0, "negative history size");
    require(e.static_state_units >= 0.0, "negative static state size");
    require(e.full_state_units >= 0.0, "negative full state size");
    require(e.dynamic_state_units >= 0.0, "negative dynamic state size");
    require(e.semantic_state_units >= 0.0, "negative semantic state size");
    require(e.full_params >= 0.0, "negative model size");
    require(e.delta_params >= 0.0, "negative delta size");
    if (semantic_paradigm) {
        require(e.semantic_state_units < e.dynamic_state_units,
                "constraint violated: semantic_state < dynamic_state");
        require(e.dynamic_state_units < e.full_state_units,
                "constraint violated: dynamic_state < full_state");
        require(e.static_state_units < e.full_state_units,
                "constraint violated: static_state < full_state");
        require(e.delta_params < e.full_params,
                "constraint violated: delta_params < full_params");
    }
}

void validate_server(const ServerProfile& s) {
    require(s.cpu_hz > 0.0, "server cpu frequency must be positive");
    require(s.agg_cycles_per_param >= 0.0, "negative agg_cycles_per_param");
    require(s.virtual_rate >= 0.0, "negative virtual rate");
}

void validate_channel(const ChannelConfig& cfg) {
    require(cfg.bandwidth_hz > 0.0, "channel bandwidth must be positive");
    require(cfg.total_subchannels > 0, "channel has no subchannels to allocate");
    require(cfg.snr >= 0.0, "negative snr");
    for (int c : cfg.entity_subchannels) require(c >= 0, "negative subchannel count");
    for (int c : cfg.server_subchannels) require(c >= 0, "negative subchannel count");
    AllocationReport alloc = validate_allocation(cfg);
    require(alloc.ok, "subchannel allocation exceeds total by " + std::to_string(alloc.excess));
}

void validate_scenario(const Scenario& sc, bool semantic_paradigm) {
    require(!sc.entities.empty(), "scenario has no entities");
    require(sc.fl_rounds >= 1, "fl_rounds must be >= 1");
    require(sc.kb_period >= 1, "kb_period must be >= 1");
    require(sc.prompt_db_units >= 0.0, "negative prompt database size");
    require(sc.bytes_per_unit > 0.0, "bytes_per_unit must be positive");
    for (const EntityProfile& e : sc.entities) validate_entity(e, semantic_paradigm);
    validate_server(sc.server);
    validate_channel(sc.channel);
    require(sc.channel.entity_subchannels.size() == sc.entities.size(),
            "entity_subchannels must have one entry per entity");
}

double fl_entity_compute(const EntityProfile& e) {
    require(e.cpu_hz > 0.0, "entity cpu frequency must be positive");
    return e.train_cycles * e.history_units * e.full_params / e.cpu_hz;
}

double fl_server_aggregate(const ServerProfile& s, const std::vector<double>& param_sizes) {
    require(s.cpu_hz > 0.0, "server cpu frequency must be positive");
    double sum = 0.0;
    for (double p : param_sizes) {
        require(p >= 0.0, "negative model size");
        sum += p;
    }
    return s.agg_cycles_per_param * sum / s.cpu_hz;
}

double lt_entity_finetune(const EntityProfile& e) {
    require(e.cpu_hz > 0.0, "entity cpu frequency must be positive");
    return e.train_cycles * e.static_state_units * e.delta_params / e.cpu_hz;
}

double lt_server_merge(const ServerProfile& s, double delta_params) {
    require(s.cpu_hz > 0.0, "server cpu frequency must be positive");
    require(delta_params >= 0.0, "negative delta size");
    return s.agg_cycles_per_param * delta_params / s.cpu_hz;
}

double fl_intra_time(const EntityProfile& e, double rate) {
    positive_rate(rate);
    return (e.full_params + e.full_state_units) / rate;
}

double fl_inter_time(const ServerProfile& s, const std::vector<double>& param_sizes) {
    return fl_server_aggregate(s, param_sizes);
}

double lt_intra_time(const EntityProfile& e, double rate) {
    positive_rate(rate);
    return (e.delta_params + e.semantic_state_units) / rate;
}

double lt_inter_time(double prompt_db_units, double virtual_rate) {
    require(prompt_db_units >= 0.0, "negative prompt database size");
    positive_rate(virtual_rate);
    return prompt_db_units / virtual_rate;
}

double entity_rate(const Scenario& sc, std::size_t index) {
    require(index < sc.entities.size(), "entity index out of range");
    require(index < sc.channel.entity_subchannels.size(),
            "entity_subchannels must have one entry per entity");
    return channel_rate(sc.channel.entity_subchannels[index], sc.channel, sc.channel.snr);
}

double resolved_virtual_rate(const Scenario& sc) {
    if (sc.server.virtual_rate > 0.0) return sc.server.virtual_rate;
    double fastest = 0.0;
    for (std::size_t i = 0; i < sc.entities.size(); ++i)
        fastest = std::max(fastest, entity_rate(sc, i));
    return 100.0 * fastest;
}

std::size_t straggler_index(const Scenario& sc) {
    require(!sc.entities.empty(), "scenario has no entities");
    std::size_t best = 0;
    double worst = fl_entity_compute(sc.entities[0]);
    for (std::size_t i = 1; i < sc.entities.size(); ++i) {
        double t = fl_entity_compute(sc.entities[i]);
        if (t > worst) {
            worst = t;
            best = i;
        }
    }
    return best;
}

ConstraintReport check_paradigm_constraints(const Scenario& sc) {
    ConstraintReport report;
    auto fail = [&report](std::size_t i, const std::string& text) {
        report.ok = false;
        report.violations.push_back("entity " + std::to_string(i) + ": " + text);
    };
    double param_sum = 0.0;
    for (const EntityProfile& e : sc.entities) param_sum += e.full_params;
    for (std::size_t i = 0; i < sc.entities.size(); ++i) {
        const EntityProfile& e = sc.entities[i];
        if (!(e.semantic_state_units < e.dynamic_state_units))
            fail(i, "semantic_state < dynamic_state");
        if (!(e.dynamic_state_units < e.full_state_units))
            fail(i, "dynamic_state < full_state");
        if (!(e.static_state_units < e.full_state_units))
            fail(i, "static_state < full_state");
        if (!(e.delta_params < e.full_params))
            fail(i, "delta_params < full_params");
        if (!(e.static_state_units * e.delta_params < e.full_state_units * e.full_params))
            fail(i, "static_state*delta_params < full_state*full_params");
        if (!(e.delta_params < param_sum))
            fail(i, "delta_params < sum of full_params");
        if (!(e.delta_params + e.semantic_state_units < e.full_params + e.full_state_units))
            fail(i, "delta_params + semantic_state < full_params + full_state");
    }
    return report;
}

TimeBreakdown fl_total(const Scenario& sc) {
    validate_scenario(sc, false);
    std::size_t idx = straggler_index(sc);
    const EntityProfile& straggler = sc.entities[idx];
    double rate = positive_rate(entity_rate(sc, idx));

    std::vector<double> sizes;
    sizes.reserve(sc.entities.size());
    for (const EntityProfile& e : sc.entities) sizes.push_back(e.full_params);

    double rounds = static_cast<double>(sc.fl_rounds);
    TimeBreakdown out;
    out.entity_compute = rounds * fl_entity_compute(straggler);
    out.server_compute = rounds * fl_server_aggregate(sc.server, sizes);
    // Per round the straggler uploads this round's model and downloads the
    // next one; the training history goes up once, before the first round.
    out.intra_comm = rounds * (2.0 * straggler.full_params) / rate + straggler.history_units / rate;
    out.inter_comm = out.server_compute;
    out.total = out.entity_compute + out.server_compute + out.intra_comm;
    return out;
}

TimeBreakdown lt_total(const Scenario& sc) {
    validate_scenario(sc, true);
    std::size_t idx = straggler_index(sc);
    const EntityProfile& straggler = sc.entities[idx];
    double rate = positive_rate(entity_rate(sc, idx));
    double virtual_rate = positive_rate(resolved_virtual_rate(sc));
    double period = static_cast<double>(sc.kb_period);

    TimeBreakdown out;
    out.entity_compute = lt_entity_finetune(straggler) / period;
    out.server_compute = lt_server_merge(sc.server, straggler.delta_params) / period;
    out.intra_comm = (straggler.delta_params / rate) / period + straggler.semantic_state_units / rate;
    out.inter_comm = lt_inter_time(sc.prompt_db_units, virtual_rate);
    out.total = out.entity_compute + out.server_compute + out.intra_comm + out.inter_comm;
    return out;
}

CompareResult compare(const Scenario& sc) {
    CompareResult result;
    result.constraints_satisfied = check_paradigm_constraints(sc).ok;

    Scenario single = sc;
    single.fl_rounds = 1;
    single.kb_period = 1;
    result.difference = lt_total(single).total - fl_total(single).total;

    double semantic = lt_total(sc).total;
    double federated = fl_total(sc).total;
    result.ratio = semantic > 0.0
                       ? federated / semantic
                       : std::numeric_limits<double>::infinity();
    return result;
}

} // namespace dtsn::cost
