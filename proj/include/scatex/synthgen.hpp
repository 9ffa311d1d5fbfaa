#pragma once

// Seeded generators for the Cylinder-Bell-Funnel and triangular-waveform
// classification problems.
//
// Formulas use 1-based time indices i = 1..128; stored arrays are 0-based,
// so sample i lives at signal[i - 1]. Randomness comes from std::mt19937_64
// seeded with the dataset seed; draws are consumed class by class, signal by
// signal, in storage order.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace scatex {

using Signal = std::vector<double>;

enum class Generator { cbf, triangle };

std::string to_string(Generator g);
Generator generator_from_string(const std::string& name);

struct LabeledDataset {
    std::vector<Signal> signals;
    std::vector<int> labels; // 1..K
    int K = 0;
    std::uint64_t seed = 0;
    std::optional<Generator> generator;

    std::size_t size() const { return signals.size(); }
    std::size_t length() const { return signals.empty() ? 0 : signals.front().size(); }
};

/// Throws InputError unless every signal has equal length >= 2, every entry is
/// finite and every label lies in 1..K.
void validate(const LabeledDataset& ds);

namespace cbf {

inline constexpr int length = 128;
enum Class : int { cylinder = 1, bell = 2, funnel = 3 };

/// Noise-free shape for onset a and end b (1-based, inclusive), scaled by
/// amplitude (6 + eta in the generator).
Signal shape(int cls, int a, int b, double amplitude = 6.0);

/// Random parameters behind one generated signal.
struct Draw {
    int a = 0;
    int b = 0;
    double eta = 0.0;
};

} // namespace cbf

namespace triangle {

inline constexpr int length = 128;

/// Base triangle h_k(i) for k in 1..3 and 1-based i; apexes at 43, 64, 85.
double h(int k, int i);
Signal h_vector(int k);

/// Noise-free class signal u*h_first + (1-u)*h_second.
Signal shape(int cls, double u);

/// The pair of base triangles mixed by class cls.
std::pair<int, int> components(int cls);

} // namespace triangle

/// Three classes, labels 1=cylinder 2=bell 3=funnel, class-major order.
/// `draws`, when given, receives each signal's (a, b, eta) in output order.
LabeledDataset gen_cbf(int n_per_class, std::uint64_t seed, std::vector<cbf::Draw>* draws = nullptr);
/// Three classes of noisy convex combinations of two base triangles.
LabeledDataset gen_triangle(int n_per_class, std::uint64_t seed);

LabeledDataset generate(Generator g, int n_per_class, std::uint64_t seed);

/// CSV with header `label,s0,...,s{d-1}`; values written with 17 significant
/// digits so a load reproduces them exactly.
void save_dataset_csv(const LabeledDataset& ds, const std::string& path);
/// Loads a dataset written by save_dataset_csv. Labels outside 1..K, ragged
/// rows and unparsable fields raise MalformedFileError.
LabeledDataset load_dataset_csv(const std::string& path, int K);

} // namespace scatex
