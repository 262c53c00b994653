#include "dtsn/scenario_io.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dtsn/errors.hpp"
#include "dtsn/format.hpp"

namespace dtsn::io {

namespace {

using nlohmann::json;

int line_of_byte(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

double require_number(const json& node, const std::string& key) {
    if (!node.contains(key)) throw ValidationError("missing field '" + key + "'");
    const json& v = node.at(key);
    if (!v.is_number()) throw ValidationError("field '" + key + "' must be a number");
    return v.get<double>();
}

double number_or(const json& node, const std::string& key, double fallback) {
    if (!node.contains(key)) return fallback;
    const json& v = node.at(key);
    if (!v.is_number()) throw ValidationError("field '" + key + "' must be a number");
    return v.get<double>();
}

std::string string_or(const json& node, const std::string& key, const std::string& fallback) {
    if (!node.contains(key)) return fallback;
    const json& v = node.at(key);
    if (!v.is_string()) throw ValidationError("field '" + key + "' must be a string");
    return v.get<std::string>();
}

cost::EntityProfile parse_profile(const json& node) {
    cost::EntityProfile p;
    p.cpu_hz = require_number(node, "cpu_hz");
    p.train_cycles = require_number(node, "train_cycles");
    p.history_units = require_number(node, "history_units");
    p.static_state_units = require_number(node, "static_state_units");
    p.full_state_units = require_number(node, "full_state_units");
    p.dynamic_state_units = require_number(node, "dynamic_state_units");
    p.semantic_state_units = require_number(node, "semantic_state_units");
    p.full_params = require_number(node, "full_params");
    p.delta_params = require_number(node, "delta_params");
    return p;
}

std::vector<sim::StateRecord> parse_records(const json& node, const std::string& key) {
    std::vector<sim::StateRecord> records;
    if (!node.contains(key)) return records;
    const json& arr = node.at(key);
    if (!arr.is_array()) throw ValidationError("field '" + key + "' must be an array");
    for (const json& r : arr) {
        sim::StateRecord rec;
        rec.system = string_or(r, "system", "");
        rec.device = string_or(r, "device", "");
        rec.property = string_or(r, "property", "");
        if (r.contains("value") && r.at("value").is_number())
            rec.value = format_double(r.at("value").get<double>());
        else
            rec.value = string_or(r, "value", "");
        rec.sensitive = r.value("sensitive", false);
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace

ScenarioDoc parse_scenario_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), line_of_byte(text, e.byte > 0 ? e.byte - 1 : 0));
    }
    if (!doc.is_object()) throw ValidationError("scenario document must be a JSON object");

    ScenarioDoc out;
    out.seed = static_cast<std::uint64_t>(number_or(doc, "seed", 1.0));
    out.ticks = static_cast<long long>(number_or(doc, "ticks", 1.0));
    if (out.ticks < 1) throw ValidationError("ticks must be >= 1");

    out.params.semantic_ratio = number_or(doc, "semantic_ratio", 0.05);
    out.params.budget_fraction = number_or(doc, "budget_fraction", 0.01);
    out.params.decision_property = string_or(doc, "decision_property", "brightness");
    std::string pricing = string_or(doc, "pricing", "snapshot");
    if (pricing == "snapshot") out.params.pricing = sim::DbPricing::snapshot;
    else if (pricing == "live") out.params.pricing = sim::DbPricing::live;
    else throw ValidationError("pricing must be 'snapshot' or 'live'");

    cost::Scenario& sc = out.scenario;
    sc.kb_period = static_cast<int>(number_or(doc, "kb_period", 1.0));
    sc.prompt_db_units = number_or(doc, "prompt_db_units", 0.0);
    sc.bytes_per_unit = number_or(doc, "bytes_per_unit", 1.0);

    if (doc.contains("fl_rounds") && doc.at("fl_rounds").is_string()) {
        if (doc.at("fl_rounds").get<std::string>() != "measured")
            throw ValidationError("fl_rounds must be a number or the string 'measured'");
        out.fl_rounds_measured = true;
        sc.fl_rounds = 1;
    } else {
        sc.fl_rounds = static_cast<int>(number_or(doc, "fl_rounds", 1.0));
    }

    if (!doc.contains("server")) throw ValidationError("missing field 'server'");
    const json& server = doc.at("server");
    sc.server.cpu_hz = require_number(server, "cpu_hz");
    sc.server.agg_cycles_per_param = require_number(server, "agg_cycles_per_param");
    sc.server.virtual_rate = number_or(server, "virtual_rate", 0.0);

    if (!doc.contains("channel")) throw ValidationError("missing field 'channel'");
    const json& channel = doc.at("channel");
    sc.channel.bandwidth_hz = require_number(channel, "bandwidth_hz");
    sc.channel.total_subchannels = static_cast<int>(require_number(channel, "total_subchannels"));
    sc.channel.snr = require_number(channel, "snr");
    std::string base = string_or(channel, "log_base", "two");
    if (base == "two") sc.channel.log_base = cost::LogBase::two;
    else if (base == "natural") sc.channel.log_base = cost::LogBase::natural;
    else throw ValidationError("log_base must be 'two' or 'natural'");

    if (!doc.contains("entities")) throw ValidationError("missing field 'entities'");
    const json& entities = doc.at("entities");
    if (!entities.is_array() || entities.empty())
        throw ValidationError("entities must be a non-empty array");
    for (const json& e : entities) {
        sim::PhysicalEntity entity;
        entity.id = string_or(e, "id", "entity" + std::to_string(out.entities.size() + 1));
        if (!e.contains("profile")) throw ValidationError("entity '" + entity.id + "' has no profile");
        entity.profile = parse_profile(e.at("profile"));
        entity.static_state = parse_records(e, "static_state");
        entity.dynamic_state = parse_records(e, "dynamic_state");
        entity.local_pairs = sim::pairs_from_state(entity.id, entity.static_state);
        sc.entities.push_back(entity.profile);
        out.entities.push_back(std::move(entity));
    }

    if (!channel.contains("entity_subchannels"))
        throw ValidationError("missing field 'entity_subchannels'");
    const json& esub = channel.at("entity_subchannels");
    if (esub.is_number()) {
        sc.channel.entity_subchannels.assign(out.entities.size(), esub.get<int>());
    } else if (esub.is_array()) {
        for (const json& v : esub) {
            if (!v.is_number()) throw ValidationError("entity_subchannels entries must be numbers");
            sc.channel.entity_subchannels.push_back(v.get<int>());
        }
        if (sc.channel.entity_subchannels.size() != out.entities.size())
            throw ValidationError("entity_subchannels has " +
                                  std::to_string(sc.channel.entity_subchannels.size()) +
                                  " entries for " + std::to_string(out.entities.size()) +
                                  " entities");
    } else {
        throw ValidationError("entity_subchannels must be a number or an array");
    }
    if (channel.contains("server_subchannels")) {
        const json& ssub = channel.at("server_subchannels");
        if (ssub.is_number()) {
            sc.channel.server_subchannels.push_back(ssub.get<int>());
        } else if (ssub.is_array()) {
            for (const json& v : ssub) sc.channel.server_subchannels.push_back(v.get<int>());
        } else {
            throw ValidationError("server_subchannels must be a number or an array");
        }
    }

    if (doc.contains("fl_task")) {
        const json& task = doc.at("fl_task");
        FlTask t;
        t.spec.entities = static_cast<int>(number_or(task, "entities",
                                                     static_cast<double>(out.entities.size())));
        t.spec.samples_per_entity = static_cast<int>(number_or(task, "samples_per_entity", 16.0));
        t.spec.dim = static_cast<int>(number_or(task, "dim", 2.0));
        t.spec.noise_sigma = number_or(task, "noise", 0.0);
        t.eta = number_or(task, "eta", 0.05);
        t.tolerance = number_or(task, "tolerance", 1e-6);
        t.max_rounds = static_cast<int>(number_or(task, "max_rounds", 200.0));
        out.fl_task = t;
    }
    if (out.fl_rounds_measured && !out.fl_task)
        throw ValidationError("fl_rounds 'measured' needs an fl_task");

    if (doc.contains("sweep")) {
        const json& sweep = doc.at("sweep");
        SweepSpec s;
        s.parameter = string_or(sweep, "parameter", "");
        if (s.parameter.empty()) throw ValidationError("sweep needs a parameter name");
        if (!sweep.contains("values") || !sweep.at("values").is_array() ||
            sweep.at("values").empty())
            throw ValidationError("sweep needs a non-empty values array");
        for (const json& v : sweep.at("values")) {
            if (!v.is_number()) throw ValidationError("sweep values must be numbers");
            s.values.push_back(v.get<double>());
        }
        out.sweep = std::move(s);
    }

    cost::validate_scenario(sc, true);
    return out;
}

ScenarioDoc load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_scenario_text(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), 0);
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::uint64_t effective_seed(const ScenarioDoc& doc) {
    const char* env = std::getenv("DTSNSIM_SEED");
    if (!env || !*env) return doc.seed;
    std::uint64_t value = 0;
    const char* end = env + std::char_traits<char>::length(env);
    auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec != std::errc{} || ptr != end)
        throw ValidationError("DTSNSIM_SEED must be an unsigned integer, got '" +
                              std::string(env) + "'");
    return value;
}

fl::FederatedRun resolve_fl_rounds(ScenarioDoc& doc) {
    if (!doc.fl_task) throw ValidationError("scenario has no fl_task to measure rounds from");
    const FlTask& task = *doc.fl_task;
    std::vector<fl::LocalDataset> data = fl::make_synthetic(task.spec, effective_seed(doc));
    fl::FederatedRun run = fl::run_federated(data, task.eta, task.tolerance, task.max_rounds);
    doc.scenario.fl_rounds = run.rounds_executed;
    return run;
}

} // namespace dtsn::io
