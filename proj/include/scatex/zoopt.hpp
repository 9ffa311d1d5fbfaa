#pragma once

// Zeroth-order search for class-revealing signals: minimize
//
//     1 / p_k(x) + mu * ||x||_1 + nu * ||D x||_2
//
// over signals x, where p_k is the trained classifier's probability of class
// k on scatter2(x) and D takes non-circular forward differences. The search
// runs Differential Evolution (rand/1/bin) over orthonormal DCT coefficients
// of x, starting from pink-noise candidates.

#include "scatex/mlr.hpp"
#include "scatex/scattering.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace scatex {

/// Zero-mean noise with power spectrum ~ 1/f (white Gaussian spectrum shaped
/// by |f|^-1/2, DC removed), scaled to unit RMS.
Signal pink_noise(std::size_t d, std::uint64_t seed);
/// Zero-mean white Gaussian noise scaled to unit RMS.
Signal white_noise(std::size_t d, std::uint64_t seed);

/// Euclidean norm of the forward differences x[i+1] - x[i], i = 0..d-2.
double grad_norm(std::span<const double> x);

struct ObjectiveSpec {
    std::shared_ptr<const MlrModel> model;
    std::shared_ptr<const FilterBank> bank;
    int target_class = 1; // 1..K
    double mu = 0.0;
    double nu = 0.0;

    /// Throws ConfigError on dimension or parameter mismatch.
    void validate() const;
};

struct ObjectiveTerms {
    Eigen::VectorXd probabilities;
    double inverse_probability = 0.0;
    double l1 = 0.0;
    double grad = 0.0;
    double value = 0.0;
};

double objective_eval(std::span<const double> x, const ObjectiveSpec& spec);
ObjectiveTerms objective_terms(std::span<const double> x, const ObjectiveSpec& spec);

enum class InitKind { pink, white };
enum class Parameterization { dct, identity };

std::string to_string(InitKind k);
std::string to_string(Parameterization p);

struct DeConfig {
    int pop_size = 0; // 0: 8 * search dimension, capped at 512
    // Number of lowest-frequency DCT slots searched (0 = all d). Higher slots
    // stay zero. Ignored by the identity parameterization.
    int search_dim = 0;
    double F = 0.8;
    double CR = 0.9;
    long max_evals = 200000;
    std::uint64_t seed = 0;
    InitKind init = InitKind::pink;
    Parameterization parameterization = Parameterization::dct;
    // Initial candidates are init_scale times unit-RMS noise.
    double init_scale = 1.0;
    // Per-slot box half-width in search space; a single value applies to all
    // slots. Out-of-box mutants are clipped.
    std::vector<double> bounds{100.0};
    int stall_generations = 50;
    double stall_tol = 1e-8;
    unsigned threads = 0; // objective evaluations per generation; 0 = all cores

    int effective_pop_size(std::size_t dim) const;
    double bound(std::size_t slot) const { return bounds.size() == 1 ? bounds[0] : bounds[slot]; }
    std::size_t effective_search_dim(std::size_t d) const;
    void validate(std::size_t dim) const;
};

enum class StopReason { max_evals, stalled };
std::string to_string(StopReason r);

struct DeResult {
    std::vector<double> best; // search-space vector
    double best_value = 0.0;
    std::vector<double> history; // best value after init and after each generation
    long evals_used = 0;
    StopReason stop_reason = StopReason::max_evals;
};

using SearchObjective = std::function<double(std::span<const double>)>;

/// DE/rand/1/bin with greedy selection over search vectors of length dim.
/// Candidates of one generation are drawn serially, evaluated (possibly in
/// parallel), then selected in index order, so results depend only on seed.
/// Initial members are unit-RMS noise of signal_length samples (0 = dim),
/// DCT-transformed for the dct parameterization and cut to the first dim slots.
DeResult de_minimize(const SearchObjective& objective, std::size_t dim, const DeConfig& config,
                     std::size_t signal_length = 0);

struct ZoRun {
    ObjectiveSpec spec;
    DeConfig config;
    Signal best_x; // time domain
    std::vector<double> best_coeffs; // searched slots only
    double best_value = 0.0;
    std::vector<double> history;
    long evals_used = 0;
    StopReason stop_reason = StopReason::max_evals;
    Eigen::VectorXd probabilities; // classifier output at best_x
};

/// Minimizes the objective for spec.target_class.
ZoRun de_extract(const ObjectiveSpec& spec, const DeConfig& config);

/// One run per class k = 1..K with seed config.seed + k; spec.target_class is
/// overwritten per run.
std::vector<ZoRun> extract_all_classes(const ObjectiveSpec& spec, const DeConfig& config);

/// Per-slot DCT box: factor * max over signals of |dct_forward(x)_k|.
std::vector<double> dct_bounds(const std::vector<Signal>& signals, double factor = 10.0);

/// max over circular shifts s of <x, roll(t, s)> / (|x| |t|); 0 if either is zero.
double max_normalized_xcorr(std::span<const double> x, std::span<const double> t);

/// Assigns each signal the class whose template has the highest normalized
/// circular cross-correlation (ties to the smallest class) and returns the
/// accuracy. templates[k] belongs to class k + 1.
double template_classify(const std::vector<Signal>& templates, const LabeledDataset& dataset);

/// Largest fraction of sum |x_i| inside any window of `width` consecutive
/// samples (non-circular), together with the window start.
struct WindowMass {
    double fraction = 0.0;
    std::size_t start = 0;
};
WindowMass max_window_mass(std::span<const double> x, std::size_t width);

/// Best pair of disjoint width-`width` windows by combined L1 mass.
struct WindowPair {
    WindowMass first;
    WindowMass second;
    double combined() const { return first.fraction + second.fraction; }
};
WindowPair best_disjoint_window_pair(std::span<const double> x, std::size_t width);

/// Fraction of samples with |x_i| > 1% of max |x|.
double support_fraction(std::span<const double> x);

/// One (mu, nu) combination of a penalty sweep; vectors are indexed by class-1.
struct SweepPoint {
    double mu = 0.0;
    double nu = 0.0;
    std::vector<double> target_probability;
    std::vector<double> support;
    std::vector<Signal> best_x;

    double min_probability() const;
    double max_support() const;
    double mean_support() const;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    std::size_t selected = 0;
    bool sparsity_feasible = false; // some point met the support limit for every class
};

inline constexpr double sweep_max_support = 0.5;
inline constexpr double sweep_min_probability = 0.9;

/// Selection rule: among points whose support fraction is <= 0.5 for every
/// class, the largest minimum target probability. If no point qualifies,
/// among points whose minimum target probability is >= 0.9, the smallest
/// mean support; failing that, the largest minimum target probability.
/// Ties keep the earlier point.
std::size_t select_penalties(const std::vector<SweepPoint>& points, bool* sparsity_feasible = nullptr);

/// Runs extract_all_classes for every (mu, nu) on the grid, mu-major.
SweepResult sweep_penalties(const ObjectiveSpec& spec, const DeConfig& config, const std::vector<double>& mus,
                            const std::vector<double>& nus);

/// Logarithmic grid 1e-3, 1e-2, ..., 1e1.
std::vector<double> default_penalty_grid();

nlohmann::json to_json(const SweepResult& result);

nlohmann::json to_json(const DeConfig& config);
DeConfig de_config_from_json(const nlohmann::json& j);
/// ZoRun record; spec references (model/bank files and hashes) are attached
/// by the caller.
nlohmann::json to_json(const ZoRun& run);

} // namespace scatex
