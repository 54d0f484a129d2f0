#include "metabias/error.hpp"
#include "metabias/harness.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace metabias;
using namespace metabias::harness;

std::vector<Method> parse_method_list(const std::string& list) {
    std::vector<Method> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(parse_method(item));
    }
    if (out.empty()) throw Error(ErrorCode::ConfigError, "--methods: empty method list");
    return out;
}

void write_output(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot open output file '" + path + "'");
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Publication-bias adjusted meta-analysis and simulation harness"};
    app.require_subcommand(1);

    std::string dataset_path, config_path, out_path, methods_arg, effects_out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    double alpha = 0.05;

    auto* analyze_cmd = app.add_subcommand("analyze", "Run every requested method on a study-level CSV");
    analyze_cmd->add_option("dataset", dataset_path, "CSV with raw arm summaries or precomputed effects")
        ->required()
        ->check(CLI::ExistingFile);
    analyze_cmd->add_option("--out", out_path, "Write the result table here instead of stdout");
    analyze_cmd->add_option("--methods", methods_arg, "Comma-separated method list (default: all seven)");
    analyze_cmd->add_option("--alpha", alpha, "Significance level used by p-uniform")->check(CLI::Range(0.0, 1.0));
    analyze_cmd->add_option("--emit-effects", effects_out, "Also write the computed effects as a precomputed CSV");

    auto* calibrate_cmd = app.add_subcommand("calibrate", "Calibrate the suppression probability per grid cell");
    auto* simulate_cmd = app.add_subcommand("simulate", "Run the scenario-grid simulation");
    for (auto* cmd : {calibrate_cmd, simulate_cmd}) {
        cmd->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", out_path, "Write the CSV here instead of stdout (overrides config)");
        cmd->add_option("--seed", seed, "Master seed (overrides config)");
        cmd->add_option("--threads", threads, "Worker threads; 0 picks automatically")->check(CLI::NonNegativeNumber);
        cmd->add_option("--methods", methods_arg, "Comma-separated method list (overrides config)");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze_cmd->parsed()) {
            const Dataset ds = load_dataset(dataset_path);
            const std::vector<Method> methods = methods_arg.empty()
                                                    ? std::vector<Method>(std::begin(kAllMethods), std::end(kAllMethods))
                                                    : parse_method_list(methods_arg);
            const auto rows = analyze(ds, methods, alpha);
            for (const auto& r : rows) {
                if (!r.result) {
                    std::cerr << "warning: " << method_name(r.method) << " (" << effect_kind_name(r.kind)
                              << "): " << r.error << "\n";
                }
            }
            write_output(analysis_csv(rows), out_path);
            if (!effects_out.empty()) write_output(effects_csv(ds), effects_out);
            return 0;
        }

        RunConfig cfg = load_run_config(config_path);
        if (seed) cfg.seed = *seed;
        if (!methods_arg.empty()) cfg.methods = parse_method_list(methods_arg);
        if (!out_path.empty()) cfg.output = out_path;
        const int n_threads = resolve_threads(threads.value_or(cfg.threads));

        if (calibrate_cmd->parsed()) {
            write_output(calibration_csv(run_calibration(cfg, n_threads)), cfg.output);
        } else {
            write_output(simulation_csv(run_simulation(cfg, n_threads)), cfg.output);
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error [" << error_name(e.code()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
