#pragma once

// Plot builders for the experiment artifacts. Each figure has a CSV sibling
// holding exactly the plotted data.

#include "scatex/mlr.hpp"
#include "scatex/svg.hpp"
#include "scatex/synthgen.hpp"

#include <string>
#include <vector>

namespace scatex {

struct ExtractedSignals {
    std::vector<Signal> raw;        // index k-1 holds class k
    std::vector<Signal> normalized; // raw / max |raw|
};

/// Reads the extract stage's signal table (t, class<k>_raw, class<k>_normalized).
ExtractedSignals load_extracted_signals(const std::string& path, int K);

namespace plot_files {
inline constexpr const char* samples_svg = "samples.svg";
inline constexpr const char* samples_csv = "samples.csv";
inline constexpr const char* betas_svg = "betas.svg";
inline constexpr const char* betas_csv = "betas.csv";
inline constexpr const char* extracted_svg = "extracted.svg";
inline constexpr const char* extracted_csv = "extracted.csv";
} // namespace plot_files

inline constexpr int samples_per_class = 5;

/// First `per_class` signals of each class, one panel per class.
svg::Figure samples_figure(const LabeledDataset& dataset, int per_class = samples_per_class);
/// Stem plot of each class's nonzero standardized coefficients.
svg::Figure beta_figure(const MlrModel& model);
/// Normalized extracted signals. For the triangle dataset every panel also
/// carries the three base triangles scaled to unit apex, as polylines with
/// classes "overlay h1", "overlay h2", "overlay h3".
svg::Figure extracted_figure(Generator dataset, const std::vector<Signal>& normalized);

/// Writes the three SVGs and their CSVs into `dir`; returns the file names.
std::vector<std::string> write_plots(const std::string& dir, Generator dataset, const LabeledDataset& train,
                                     const MlrModel& model, const ExtractedSignals& extracted);

} // namespace scatex
