#include "dtsn/presets.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "dtsn/errors.hpp"
#include "dtsn/format.hpp"
#include "dtsn/svg_chart.hpp"

namespace dtsn::presets {

namespace {

long long cycles_completed(long long tick, int period) {
    return (tick + period - 1) / period;
}

std::string sweep_csv(const std::vector<double>& xs, const std::vector<double>& fl,
                      const std::vector<double>& lt, const std::string& header) {
    std::string csv = header + "\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double ratio = lt[i] > 0.0 ? fl[i] / lt[i] : std::numeric_limits<double>::infinity();
        csv += csv_line({format_double(xs[i]), format_double(fl[i]), format_double(lt[i]),
                         format_double(ratio)});
    }
    return csv;
}

std::vector<OutputFile> sweep_outputs(const std::string& name, const std::string& title,
                                      const std::string& x_label, const std::string& y_label,
                                      const std::vector<double>& xs,
                                      const std::vector<double>& fl,
                                      const std::vector<double>& lt,
                                      const std::string& header) {
    io::ChartSpec chart;
    chart.title = title;
    chart.x_label = x_label;
    chart.y_label = y_label;
    chart.xs = xs;
    chart.series = {{"federated", fl}, {"llm_twin", lt}};
    return {{name + ".csv", sweep_csv(xs, fl, lt, header)},
            {name + ".svg", io::render_line_chart(chart)}};
}

std::vector<OutputFile> run_fig5(const io::ScenarioDoc& doc) {
    const cost::Scenario& sc = doc.scenario;
    cost::EntityProfile p = sc.entities[cost::straggler_index(sc)];
    std::vector<double> xs, fl, lt;
    for (int i = 0; i < 10; ++i) {
        p.history_units = 100.0 * std::pow(2.0, i);
        xs.push_back(p.history_units);
        fl.push_back(cost::fl_entity_compute(p));
        lt.push_back(cost::lt_entity_finetune(p));
    }
    return sweep_outputs("fig5", "Entity compute time vs accumulated data", "data units",
                         "seconds", xs, fl, lt, "sweep_value,fl_seconds,llm_twin_seconds,ratio");
}

std::vector<OutputFile> run_fig6(const io::ScenarioDoc& doc) {
    const cost::Scenario& sc = doc.scenario;
    const cost::EntityProfile& straggler = sc.entities[cost::straggler_index(sc)];
    double fraction = straggler.delta_params / straggler.full_params;
    std::vector<double> param_grid = {3.5e9, 7e9};
    std::vector<double> counts;
    for (int n = 2; n <= 20; n += 2) counts.push_back(n);

    std::string csv = "param_units,entities,fl_seconds,llm_twin_seconds,ratio\n";
    io::ChartSpec chart;
    chart.title = "Server compute time vs entity count";
    chart.x_label = "entities";
    chart.y_label = "seconds";
    chart.xs = counts;
    for (double params : param_grid) {
        double delta = params * fraction;
        double merge = cost::lt_server_merge(sc.server, delta);
        std::vector<double> fl_ys, lt_ys;
        for (double n : counts) {
            std::vector<double> sizes(static_cast<std::size_t>(n), params);
            double agg = cost::fl_server_aggregate(sc.server, sizes);
            fl_ys.push_back(agg);
            lt_ys.push_back(merge);
            csv += csv_line({format_double(params), format_double(n), format_double(agg),
                             format_double(merge), format_double(agg / merge)});
        }
        chart.series.push_back({"federated w=" + format_double(params), fl_ys});
        chart.series.push_back({"llm_twin w=" + format_double(params), lt_ys});
    }
    return {{"fig6.csv", csv}, {"fig6.svg", io::render_line_chart(chart)}};
}

std::vector<OutputFile> run_fig7(const io::ScenarioDoc& doc) {
    const cost::Scenario& sc = doc.scenario;
    std::size_t s = cost::straggler_index(sc);
    const cost::EntityProfile& p = sc.entities[s];
    double r = cost::entity_rate(sc, s);
    double r_n = cost::resolved_virtual_rate(sc);
    double push_sum = 0.0;
    for (const cost::EntityProfile& e : sc.entities) push_sum += e.semantic_state_units;

    double fl_cycle = (sc.fl_rounds * 2.0 * p.full_params + p.history_units) / r;
    long long ticks = std::max<long long>(doc.ticks, 2 * sc.kb_period);
    std::vector<double> xs, fl, lt;
    double lt_cum = 0.0;
    for (long long t = 1; t <= ticks; ++t) {
        double db_units = sc.prompt_db_units + static_cast<double>(t - 1) * push_sum;
        lt_cum += p.semantic_state_units / r + db_units / r_n;
        double lt_t = lt_cum + static_cast<double>(cycles_completed(t, sc.kb_period)) *
                                   (p.delta_params / r);
        xs.push_back(static_cast<double>(t));
        fl.push_back(static_cast<double>(cycles_completed(t, sc.kb_period)) * fl_cycle);
        lt.push_back(lt_t);
    }
    return sweep_outputs("fig7", "Cumulative communication time", "tick", "seconds", xs, fl,
                         lt, "sweep_value,fl_seconds,llm_twin_seconds,ratio");
}

std::vector<OutputFile> run_fig8(const io::ScenarioDoc& doc) {
    const cost::Scenario& sc = doc.scenario;
    double fl_once = 0.0, push_sum = 0.0, delta_sum = 0.0;
    for (const cost::EntityProfile& e : sc.entities) {
        fl_once += sc.fl_rounds * 2.0 * e.full_params + e.history_units;
        push_sum += e.semantic_state_units;
        delta_sum += e.delta_params;
    }
    long long ticks = std::max<long long>(doc.ticks, 2 * sc.kb_period);
    std::vector<double> xs, fl, lt;
    for (long long t = 1; t <= ticks; ++t) {
        xs.push_back(static_cast<double>(t));
        fl.push_back(fl_once);
        lt.push_back(static_cast<double>(cycles_completed(t, sc.kb_period)) * delta_sum +
                     static_cast<double>(t) * push_sum);
    }
    return sweep_outputs("fig8", "Cumulative transmitted content", "tick", "units", xs, fl,
                         lt, "sweep_value,fl_units,llm_twin_units,ratio");
}

std::vector<OutputFile> run_fig9(const io::ScenarioDoc& doc) {
    cost::Scenario sc = doc.scenario;
    double lt_value = cost::lt_total(sc).total;
    std::vector<double> xs, fl, lt;
    for (int k = 1; k <= 20; ++k) {
        sc.fl_rounds = k;
        xs.push_back(k);
        fl.push_back(cost::fl_total(sc).total);
        lt.push_back(lt_value);
    }
    return sweep_outputs("fig9", "Construction time vs round count", "rounds", "seconds", xs,
                         fl, lt, "sweep_value,fl_seconds,llm_twin_seconds,ratio");
}

std::vector<OutputFile> run_casestudy(const io::ScenarioDoc& doc) {
    sim::Simulation semantic(doc.scenario, doc.entities, doc.params, sim::Paradigm::semantic);
    semantic.run_ticks(doc.ticks);
    sim::Simulation federated(doc.scenario, doc.entities, doc.params,
                              sim::Paradigm::federated);
    federated.run_epoch();

    std::string decisions = "tick,entity,known,decision,value\n";
    for (const sim::DecisionLogEntry& d : semantic.decisions())
        decisions += csv_line({std::to_string(d.tick), d.entity,
                               d.decision.known ? "true" : "false", d.decision.text,
                               format_double(d.decision.value)});

    cost::TimeBreakdown fl = cost::fl_total(doc.scenario);
    cost::TimeBreakdown lt = cost::lt_total(doc.scenario);
    std::string summary = "metric,fl_seconds,llm_twin_seconds\n";
    summary += csv_line({"entity_compute", format_double(fl.entity_compute),
                         format_double(lt.entity_compute)});
    summary += csv_line({"server_compute", format_double(fl.server_compute),
                         format_double(lt.server_compute)});
    summary += csv_line({"intra_comm", format_double(fl.intra_comm),
                         format_double(lt.intra_comm)});
    summary += csv_line({"inter_comm", format_double(fl.inter_comm),
                         format_double(lt.inter_comm)});
    summary += csv_line({"total", format_double(fl.total), format_double(lt.total)});

    std::vector<OutputFile> files = {{"events_llm_twin.csv", semantic.events_csv()},
                                     {"events_fl.csv", federated.events_csv()},
                                     {"decisions.csv", decisions},
                                     {"summary.csv", summary}};
    if (doc.fl_task) {
        const io::FlTask& task = *doc.fl_task;
        std::vector<fl::LocalDataset> data = fl::make_synthetic(task.spec, io::effective_seed(doc));
        fl::FederatedRun run = fl::run_federated(data, task.eta, task.tolerance, task.max_rounds);
        files.push_back({"loss.csv", fl::loss_history_csv(run)});
    }
    return files;
}

void apply_sweep_value(cost::Scenario& sc, const std::string& parameter, double value) {
    if (parameter == "fl_rounds") {
        sc.fl_rounds = static_cast<int>(value);
    } else if (parameter == "kb_period") {
        sc.kb_period = static_cast<int>(value);
    } else if (parameter == "prompt_db_units") {
        sc.prompt_db_units = value;
    } else if (parameter == "snr") {
        sc.channel.snr = value;
    } else if (parameter == "bandwidth_hz") {
        sc.channel.bandwidth_hz = value;
    } else if (parameter == "virtual_rate") {
        sc.server.virtual_rate = value;
    } else if (parameter == "history_units") {
        for (cost::EntityProfile& e : sc.entities) e.history_units = value;
    } else if (parameter == "static_state_units") {
        for (cost::EntityProfile& e : sc.entities) e.static_state_units = value;
    } else if (parameter == "full_params") {
        for (cost::EntityProfile& e : sc.entities) e.full_params = value;
    } else if (parameter == "delta_params") {
        for (cost::EntityProfile& e : sc.entities) e.delta_params = value;
    } else {
        throw ValidationError("unknown sweep parameter '" + parameter + "'");
    }
}

std::vector<OutputFile> run_custom(const io::ScenarioDoc& doc) {
    if (!doc.sweep) throw ValidationError("custom preset needs a sweep block in the scenario");
    const io::SweepSpec& sweep = *doc.sweep;
    std::vector<double> xs, fl, lt;
    for (double value : sweep.values) {
        cost::Scenario sc = doc.scenario;
        apply_sweep_value(sc, sweep.parameter, value);
        cost::validate_scenario(sc, true);
        xs.push_back(value);
        fl.push_back(cost::fl_total(sc).total);
        lt.push_back(cost::lt_total(sc).total);
    }
    return sweep_outputs("custom", "Paradigm totals vs " + sweep.parameter, sweep.parameter,
                         "seconds", xs, fl, lt, "sweep_value,fl_seconds,llm_twin_seconds,ratio");
}

} // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"fig5", "fig6", "fig7", "fig8",
                                                   "fig9", "casestudy", "custom"};
    return names;
}

bool is_preset(const std::string& name) {
    for (const std::string& n : preset_names())
        if (n == name) return true;
    return false;
}

std::vector<OutputFile> run_preset(const std::string& name, const io::ScenarioDoc& doc) {
    if (name == "fig5") return run_fig5(doc);
    if (name == "fig6") return run_fig6(doc);
    if (name == "fig7") return run_fig7(doc);
    if (name == "fig8") return run_fig8(doc);
    if (name == "fig9") return run_fig9(doc);
    if (name == "casestudy") return run_casestudy(doc);
    if (name == "custom") return run_custom(doc);
    throw ValidationError("unknown preset '" + name + "'");
}

void write_outputs(const std::vector<OutputFile>& files, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    for (const OutputFile& f : files) {
        std::ofstream out(std::filesystem::path(out_dir) / f.path, std::ios::binary);
        if (!out) throw ValidationError("cannot write output file: " + f.path);
        out << f.bytes;
    }
}

} // namespace dtsn::presets
