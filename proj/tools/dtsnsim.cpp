#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dtsn/cost_model.hpp"
#include "dtsn/errors.hpp"
#include "dtsn/format.hpp"
#include "dtsn/presets.hpp"
#include "dtsn/scenario_io.hpp"
#include "dtsn/security.hpp"

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw dtsn::ValidationError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int run_simulate(const std::string& scenario_path, const std::string& preset,
                 const std::string& out_dir) {
    dtsn::io::ScenarioDoc doc = dtsn::io::load_scenario(scenario_path);
    if (doc.fl_rounds_measured) {
        dtsn::fl::FederatedRun run = dtsn::io::resolve_fl_rounds(doc);
        std::cout << "measured fl_rounds: " << run.rounds_executed
                  << (run.converged ? " (converged)" : " (round limit)") << "\n";
    }
    std::vector<dtsn::presets::OutputFile> files = dtsn::presets::run_preset(preset, doc);
    dtsn::presets::write_outputs(files, out_dir);
    for (const dtsn::presets::OutputFile& f : files)
        std::cout << "wrote " << (fs::path(out_dir) / f.path).string() << "\n";
    return 0;
}

int run_compare(const std::string& scenario_path) {
    dtsn::io::ScenarioDoc doc = dtsn::io::load_scenario(scenario_path);
    if (doc.fl_rounds_measured) {
        dtsn::fl::FederatedRun run = dtsn::io::resolve_fl_rounds(doc);
        std::cout << "measured fl_rounds: " << run.rounds_executed
                  << (run.converged ? " (converged)" : " (round limit)") << "\n";
    }
    const dtsn::cost::Scenario& sc = doc.scenario;
    dtsn::cost::TimeBreakdown fl = dtsn::cost::fl_total(sc);
    dtsn::cost::TimeBreakdown lt = dtsn::cost::lt_total(sc);
    dtsn::cost::CompareResult cmp = dtsn::cost::compare(sc);

    auto line = [](const char* name, const dtsn::cost::TimeBreakdown& t) {
        std::cout << name << " total " << dtsn::format_double(t.total) << " s (entity "
                  << dtsn::format_double(t.entity_compute) << ", server "
                  << dtsn::format_double(t.server_compute) << ", intra "
                  << dtsn::format_double(t.intra_comm) << ", inter "
                  << dtsn::format_double(t.inter_comm) << ")\n";
    };
    line("federated", fl);
    line("llm_twin ", lt);
    std::cout << "single round/tick difference (llm_twin - federated): "
              << dtsn::format_double(cmp.difference) << " s\n";
    std::cout << "ratio federated/llm_twin at fl_rounds=" << sc.fl_rounds
              << " kb_period=" << sc.kb_period << ": " << dtsn::format_double(cmp.ratio)
              << "\n";
    if (cmp.constraints_satisfied) {
        std::cout << "paradigm constraints: satisfied\n";
    } else {
        std::cout << "paradigm constraints: violated\n";
        for (const std::string& v : dtsn::cost::check_paradigm_constraints(sc).violations)
            std::cout << "  - " << v << "\n";
    }
    return 0;
}

int run_security(const std::string& script_path, const std::string& out_dir) {
    std::vector<fs::path> scripts;
    if (fs::is_directory(script_path)) {
        for (const fs::directory_entry& entry : fs::directory_iterator(script_path))
            if (entry.path().extension() == ".txt") scripts.push_back(entry.path());
        std::sort(scripts.begin(), scripts.end());
        if (scripts.empty())
            throw dtsn::ValidationError("no .txt scripts in directory: " + script_path);
    } else {
        scripts.push_back(script_path);
    }

    dtsn::sec::HarnessInputs inputs = dtsn::sec::default_inputs();
    std::vector<dtsn::sec::CheckRow> rows;
    for (const fs::path& path : scripts) {
        dtsn::sec::AdversaryScript script = dtsn::sec::parse_script(read_file(path.string()));
        std::vector<dtsn::sec::CheckRow> script_rows =
            dtsn::sec::run_script_checks(path.stem().string(), script, inputs);
        rows.insert(rows.end(), script_rows.begin(), script_rows.end());
    }

    fs::create_directories(out_dir);
    fs::path report = fs::path(out_dir) / "security_report.csv";
    {
        std::ofstream out(report, std::ios::binary);
        if (!out) throw dtsn::ValidationError("cannot write report: " + report.string());
        out << dtsn::sec::report_csv(rows);
    }

    bool all_passed = true;
    for (const dtsn::sec::CheckRow& row : rows) {
        std::cout << (row.passed ? "pass " : "FAIL ") << row.script << " " << row.check
                  << " (" << row.detail << ")\n";
        all_passed = all_passed && row.passed;
    }
    std::cout << "wrote " << report.string() << "\n";
    return all_passed ? 0 : 3;
}

int run_attack(int trials, std::uint64_t seed) {
    dtsn::sec::HarnessInputs inputs = dtsn::sec::default_inputs();
    std::vector<dtsn::toy::TrainingPair> secure = dtsn::toy::encode_secure_pairs(inputs.pairs);
    dtsn::toy::ToyModel model = dtsn::toy::merge(
        inputs.base, dtsn::toy::fit_delta(inputs.base, secure, inputs.budget_fraction));

    std::vector<std::string> answers, keys;
    for (const dtsn::toy::TrainingPair& p : inputs.pairs) {
        if (!p.sensitive) continue;
        answers.push_back(p.completion);
        keys.push_back(p.prompt);
    }
    dtsn::sec::AttackResult reverse =
        dtsn::sec::reversal_attack(model, answers, keys, trials, seed);
    std::cout << "reverse queries: " << reverse.successes << "/" << reverse.trials
              << " recovered a protected key (rate "
              << dtsn::format_double(reverse.success_rate) << ")\n";

    int forward_hits = 0;
    for (const std::string& key : keys) {
        std::optional<std::string> answer = dtsn::toy::generate(model, key, {});
        std::optional<std::string> expected = dtsn::sec::plaintext_answer(secure, key);
        if (answer && expected && *answer == *expected) ++forward_hits;
    }
    std::cout << "forward queries: " << forward_hits << "/" << keys.size()
              << " answered correctly\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Digital twin network simulator: federated baseline vs semantic twins"};
    app.require_subcommand(1);

    std::string scenario_path, preset, out_dir = ".", script_path;
    int trials = 1000;
    std::uint64_t seed = 1;
    bool reverse = false;

    CLI::App* simulate = app.add_subcommand("simulate", "Run an experiment preset");
    simulate->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    simulate->add_option("--preset", preset, "Preset name")
        ->required()
        ->check(CLI::IsMember(dtsn::presets::preset_names()));
    simulate->add_option("--out", out_dir, "Output directory");

    CLI::App* compare = app.add_subcommand("compare", "Compare paradigm totals");
    compare->add_option("--scenario", scenario_path, "Scenario JSON file")->required();

    CLI::App* security = app.add_subcommand("security", "Run adversary script checks");
    security->add_option("--script", script_path, "Script file or directory")->required();
    security->add_option("--out", out_dir, "Output directory");

    CLI::App* attack = app.add_subcommand("attack", "Probe the model directly");
    attack->add_flag("--reverse", reverse, "Reverse-direction recovery attack");
    attack->add_option("--trials", trials, "Number of probe queries")
        ->check(CLI::PositiveNumber);
    attack->add_option("--seed", seed, "Decoy vocabulary seed");

    try {
        app.parse(argc, argv);
        if (simulate->parsed()) return run_simulate(scenario_path, preset, out_dir);
        if (compare->parsed()) return run_compare(scenario_path);
        if (security->parsed()) return run_security(script_path, out_dir);
        if (attack->parsed()) {
            if (!reverse) throw dtsn::ValidationError("attack needs --reverse");
            return run_attack(trials, seed);
        }
        return 1;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const dtsn::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const dtsn::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
