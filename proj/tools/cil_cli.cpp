// Command-line front end: run, sweep, align, metrics, probe.
#include <CLI11.hpp>

#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cil/errors.hpp"
#include "cil/experiment.hpp"
#include "cil/membudget.hpp"

namespace fs = std::filesystem;
using namespace cil;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

RunRecord read_record(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open run record '" + path.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("run record '" + path.string() + "': " + e.what(), e.byte);
    }
    return record_from_json(j);
}

std::vector<double> parse_points(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size() || !(v > 0.0))
            throw ContractError("memory point '" + item + "' is not a positive number");
        out.push_back(v);
    }
    if (out.empty()) throw ContractError("no memory points given");
    return out;
}

std::string point_tag(double mb) {
    std::ostringstream s;
    s << mb;
    return s.str();
}

int cmd_run(const std::string& config, const std::string& out_dir) {
    const auto cfg = load_config(config);
    const auto rec = run_experiment(cfg);
    const fs::path path = fs::path(out_dir) / "run.json";
    write_text(path, to_json(rec).dump(2) + "\n");
    std::cout << to_string(cfg.method) << ": average " << rec.average_accuracy << "%, last " << rec.last_accuracy
              << "%, memory " << rec.memory_mb << " MB (" << rec.budget.ledger.exemplar_count << " exemplars) -> "
              << path.string() << "\n";
    return 0;
}

int cmd_sweep(const std::string& config, const std::string& points_csv, const std::string& out_dir) {
    const auto base = load_config(config);
    const auto points = parse_points(points_csv);
    const Dataset data = load_experiment_data(base);
    std::vector<RunRecord> records(points.size());
    std::vector<std::string> errors(points.size());
    // Independent runs; each owns its learner, model and generator.
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < points.size(); ++i) {
        try {
            auto cfg = base;
            cfg.budget.align_to.reset();
            cfg.budget.target_mb = points[i];
            records[i] = run_experiment(cfg, data);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (std::size_t i = 0; i < points.size(); ++i)
        if (!errors[i].empty()) throw ContractError("memory point " + point_tag(points[i]) + " MB: " + errors[i]);
    for (std::size_t i = 0; i < points.size(); ++i)
        write_text(fs::path(out_dir) / (to_string(base.method) + "_" + point_tag(points[i]) + "MB.json"),
                   to_json(records[i]).dump(2) + "\n");
    const std::string curve = emit_curve(records);
    write_text(fs::path(out_dir) / (to_string(base.method) + "_curve.csv"), curve);
    std::cout << curve;
    return 0;
}

int cmd_align(std::uint64_t params, std::uint64_t bpe, double target_mb, std::uint64_t base, std::uint64_t bpp) {
    const std::uint64_t target = megabytes_to_bytes(target_mb);
    const std::uint64_t k = align_budget(target, params * bpp, bpe, base);
    const BudgetLedger ledger{params, bpp, k, bpe};
    Json j{{"target_bytes", target},       {"model_bytes", ledger.model_bytes()},
           {"exemplar_count", k},          {"exemplar_bytes", ledger.exemplar_bytes()},
           {"total_bytes", ledger.total_bytes()}, {"total_mb", total_megabytes(ledger)},
           {"model_ratio", model_ratio(ledger)},  {"exemplar_equivalent_of_model", exemplar_equivalent(params, bpp, bpe)}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_metrics(const std::string& runs_dir, const std::string& table) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(runs_dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ContractError("no run records (*.json) under '" + runs_dir + "'");
    std::vector<RunRecord> records;
    for (const auto& f : files) records.push_back(read_record(f));
    const std::string csv = metrics_table(records);
    write_text(table, csv);
    std::cout << csv;
    return 0;
}

int cmd_probe(const std::string& run, const std::string& figure, const std::string& out) {
    fs::path path(run);
    if (fs::is_directory(path)) path /= "run.json";
    const std::string csv = probe_csv(read_record(path), probe_figure_from_string(figure));
    if (out.empty())
        std::cout << csv;
    else
        write_text(out, csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Class-incremental learning under a fixed memory budget"};
    app.require_subcommand(1);

    std::string config, out_dir, points, runs, table, run, figure, probe_out;
    std::uint64_t params = 0, bpe = 0, base = 0, bpp = 4;
    double target_mb = 0.0;

    auto* run_cmd = app.add_subcommand("run", "Train one method through every stage and write run.json");
    run_cmd->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--out", out_dir, "Output directory")->required();

    auto* sweep_cmd = app.add_subcommand("sweep", "Run one config at several total budgets");
    sweep_cmd->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--memory-points", points, "Comma-separated budgets in MB")->required();
    sweep_cmd->add_option("--out", out_dir, "Output directory")->default_val("sweep");

    auto* align_cmd = app.add_subcommand("align", "Exemplar count that fills a total budget");
    align_cmd->add_option("--params", params, "Model parameter count")->required();
    align_cmd->add_option("--bytes-per-exemplar", bpe, "Bytes per stored instance")->required()->check(CLI::PositiveNumber);
    align_cmd->add_option("--target-mb", target_mb, "Total budget in MB (2^20 bytes)")->required()->check(CLI::PositiveNumber);
    align_cmd->add_option("--base", base, "Exemplars the method keeps regardless")->default_val(0);
    align_cmd->add_option("--bytes-per-param", bpp, "Bytes per parameter")->default_val(4)->check(CLI::PositiveNumber);

    auto* metrics_cmd = app.add_subcommand("metrics", "Metrics table over a directory of run records");
    metrics_cmd->add_option("--runs", runs, "Directory of run records")->required()->check(CLI::ExistingDirectory);
    metrics_cmd->add_option("--table", table, "Output CSV")->required();

    auto* probe_cmd = app.add_subcommand("probe", "Probe traces of one run as CSV");
    probe_cmd->add_option("--run", run, "run.json or its directory")->required()->check(CLI::ExistingPath);
    probe_cmd->add_option("--figure", figure, "gradnorm, shift or cka")
        ->required()
        ->check(CLI::IsMember({"gradnorm", "shift", "cka"}));
    probe_cmd->add_option("--out", probe_out, "Output CSV (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return cmd_run(config, out_dir);
        if (*sweep_cmd) return cmd_sweep(config, points, out_dir);
        if (*align_cmd) return cmd_align(params, bpe, target_mb, base, bpp);
        if (*metrics_cmd) return cmd_metrics(runs, table);
        if (*probe_cmd) return cmd_probe(run, figure, probe_out);
    } catch (const ParseError& e) {
        std::cerr << "parse error (byte " << e.offset() << "): " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
