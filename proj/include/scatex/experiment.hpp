#pragma once

// End-to-end experiment driver: dataset generation, scattering, Lasso-MLR
// training, class-revealing signal extraction, evaluation and plotting.
//
// Every stage reads and writes files in one output directory and records
// their SHA-256 digests plus the producing config hash in manifest.json.
// Downstream stages refuse inputs whose digest or config hash differs.

#include "scatex/mlr.hpp"
#include "scatex/scattering.hpp"
#include "scatex/synthgen.hpp"
#include "scatex/zoopt.hpp"

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace scatex {

inline constexpr int report_schema_version = 1;

struct ExperimentConfig {
    Generator dataset = Generator::cbf;
    int n_train_per_class = 100;
    int n_test_per_class = 1000;
    ScatteringConfig scattering;
    FitConfig fit;
    // de.seed is derived from master_seed; de.bounds, when left at the single
    // default value, is replaced by de_bound_factor times the per-slot
    // maximum |DCT coefficient| over the training signals.
    DeConfig de;
    double de_bound_factor = 10.0;
    double mu = 0.0;
    double nu = 0.0;
    std::string output_dir = "out";
    std::uint64_t master_seed = 0;
    unsigned threads = 0;

    void validate() const;

    std::uint64_t train_seed() const { return master_seed; }
    std::uint64_t test_seed() const { return master_seed + 1; }
    std::uint64_t fit_seed() const { return master_seed + 2; }
    std::uint64_t de_seed() const { return master_seed + 3; }
};

/// Pinned defaults for each dataset.
ExperimentConfig default_config(Generator dataset);

/// Full config with every field spelled out.
nlohmann::json to_json(const ExperimentConfig& config);
/// Parses and validates; unknown or mistyped fields raise ConfigError naming
/// the field. Missing fields take the dataset's defaults.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

/// Hash of the canonical config JSON, excluding output_dir and threads.
std::string config_hash(const ExperimentConfig& config);

/// A stage failed; what() is prefixed with the stage name.
class StageError : public std::runtime_error {
public:
    StageError(const std::string& stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(stage)
    {
    }
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

namespace artifacts {
inline constexpr const char* manifest = "manifest.json";
inline constexpr const char* train_csv = "train.csv";
inline constexpr const char* test_csv = "test.csv";
inline constexpr const char* filter_bank = "filterbank.json";
inline constexpr const char* train_features = "train_features.csv";
inline constexpr const char* test_features = "test_features.csv";
inline constexpr const char* model = "model.json";
inline constexpr const char* fit_path = "fit_path.json";
inline constexpr const char* extracted = "extracted_signals.csv";
inline constexpr const char* report_json = "report.json";
inline constexpr const char* report_txt = "report.txt";
inline constexpr const char* sweep = "sweep.json";
std::string zorun(int k); // zorun_class<k>.json
} // namespace artifacts

// Stage entry points. Each throws StageError (or ConfigError for bad
// configuration) and returns its wall-clock seconds.
double stage_gen(const ExperimentConfig& config);
double stage_scatter(const ExperimentConfig& config);
double stage_train(const ExperimentConfig& config);
double stage_extract(const ExperimentConfig& config);
/// Writes report.json and report.txt; `timing` is stored verbatim under the
/// report's "timing" key.
nlohmann::json stage_eval(const ExperimentConfig& config, const nlohmann::json& timing = nlohmann::json::object());
void stage_plot(const ExperimentConfig& config);

/// Penalty sweep over the default logarithmic grid using the trained model.
/// max_evals > 0 replaces the config's DE budget for every sweep run.
/// Writes sweep.json; the config itself is not modified.
SweepResult stage_sweep(const ExperimentConfig& config, long max_evals = 0);

/// All stages in order; returns the report.
nlohmann::json run_experiment(const ExperimentConfig& config);

/// Human-readable rendering of a report.
std::string format_report(const nlohmann::json& report);

/// Report with wall-clock fields removed, for determinism comparisons.
nlohmann::json report_numeric_fields(const nlohmann::json& report);

// Criterion helpers shared by the report and the tests.

/// Extraction self-consistency: argmax_j p_j = k and p_k >= 0.9.
bool self_consistent(const Eigen::VectorXd& probabilities, int k);

/// Single concentration: some width-48 window holds >= 80% of the L1 mass.
bool localized(std::span<const double> x);
/// Two concentrations: two disjoint width-48 windows each hold >= 25% of the
/// L1 mass and together >= 80%.
bool doubly_localized(std::span<const double> x);

inline constexpr std::size_t localization_window = 48;
inline constexpr double localization_mass = 0.8;
inline constexpr double localization_min_part = 0.25;
inline constexpr double self_consistency_min_probability = 0.9;

} // namespace scatex
