// scatex: scattering + Lasso-MLR + class-revealing signal extraction.
//
// Subcommands follow the pipeline order; sweep is an offline helper for
// choosing mu and nu.
//
// Exit codes: 0 success, 2 configuration error, 3 stage failure.

#include "scatex/errors.hpp"
#include "scatex/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

constexpr int exit_config = 2;
constexpr int exit_stage = 3;

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

scatex::ExperimentConfig resolve(const Overrides& o)
{
    auto config = scatex::load_experiment_config(o.config_path);
    if (o.seed)
        config.master_seed = *o.seed;
    if (o.out)
        config.output_dir = *o.out;
    config.validate();
    return config;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Scattering-transform classifier with class-revealing signal extraction"};
    app.require_subcommand(0, 1);

    std::string print_config;
    app.add_option("--print-config", print_config, "Print the full default config for a dataset and exit")
        ->check(CLI::IsMember({"cbf", "triangle"}));

    Overrides o;
    struct Cmd {
        const char* name;
        const char* help;
    };
    const Cmd cmds[] = {{"run", "All stages: gen, scatter, train, extract, eval, plot"},
                        {"gen", "Generate train and test datasets"},
                        {"scatter", "Build the filter bank and scattering features"},
                        {"train", "Fit the Lasso multinomial logistic regression"},
                        {"extract", "Extract one class-revealing signal per class"},
                        {"eval", "Write report.json and report.txt"},
                        {"plot", "Write SVG plots and their CSV data"},
                        {"sweep", "Sweep mu and nu over a logarithmic grid (needs train)"}};
    long sweep_evals = 0;
    for (const auto& c : cmds) {
        auto* sub = app.add_subcommand(c.name, c.help);
        if (std::string(c.name) == "sweep")
            sub->add_option("--max-evals", sweep_evals, "DE budget per sweep run (default: config value)");
        sub->add_option("--config", o.config_path, "Experiment config JSON")->required();
        sub->add_option("--seed", o.seed, "Override master_seed");
        sub->add_option("--out", o.out, "Override output_dir");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }

    if (!print_config.empty()) {
        std::cout << scatex::to_json(scatex::default_config(scatex::generator_from_string(print_config))).dump(2)
                  << '\n';
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return exit_config;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    scatex::ExperimentConfig config;
    try {
        config = resolve(o);
    } catch (const scatex::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }

    try {
        if (cmd == "run") {
            const auto report = scatex::run_experiment(config);
            std::cout << scatex::format_report(report);
        } else if (cmd == "gen") {
            scatex::stage_gen(config);
        } else if (cmd == "scatter") {
            scatex::stage_scatter(config);
        } else if (cmd == "train") {
            scatex::stage_train(config);
        } else if (cmd == "extract") {
            scatex::stage_extract(config);
        } else if (cmd == "eval") {
            std::cout << scatex::format_report(scatex::stage_eval(config));
        } else if (cmd == "plot") {
            scatex::stage_plot(config);
        } else if (cmd == "sweep") {
            const auto r = scatex::stage_sweep(config, sweep_evals);
            for (std::size_t i = 0; i < r.points.size(); ++i) {
                const auto& p = r.points[i];
                std::cout << (i == r.selected ? "* " : "  ") << "mu " << p.mu << "  nu " << p.nu << "  min p_k "
                          << p.min_probability() << "  mean support " << p.mean_support() << '\n';
            }
            std::cout << "sparsity limit " << (r.sparsity_feasible ? "met" : "not met by any point") << '\n';
        }
    } catch (const scatex::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const scatex::StageError& e) {
        std::cerr << "stage failed: " << e.what() << '\n';
        return exit_stage;
    } catch (const std::exception& e) {
        std::cerr << "stage failed: " << cmd << ": " << e.what() << '\n';
        return exit_stage;
    }
    return 0;
}
