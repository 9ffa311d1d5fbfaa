#pragma once

// Second-order 1-D scattering transform with Mexican-hat filter banks.
//
// Each stage is a circular convolution done in the Fourier domain followed by
// band-limited resampling to floor(n / r) points: the spectrum is truncated to
// the lowest floor(n / r) frequencies (symmetric about DC; for an even output
// length the Nyquist bin takes the mean of the +/- bins) and inverse
// transformed. Integer and fractional rates share this definition.

#include "scatex/fft.hpp"
#include "scatex/synthgen.hpp"

#include <json.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace scatex {

enum class Wavelet { mexican_hat };

struct ScatteringConfig {
    std::size_t d = 128;
    int n_filters_1 = 14;
    int n_filters_2 = 11;
    double r1 = 1.5;
    double r2 = 1.5;
    double ra = 8.0;
    // Lowpass is a Gaussian with time-domain standard deviation 2^J samples
    // on the layer-2 grid, tapered to the output band.
    int J = 3;
    Wavelet wavelet = Wavelet::mexican_hat;
    // Wavelet centre frequencies (radians/sample on each layer's own grid)
    // are geometrically spaced from highest_center down to lowest_center.
    double lowest_center = 0.04908738521234052; // pi / 64
    double highest_center = 2.5132741228718345; // 0.8 pi

    std::size_t layer1_length() const; // floor(d / r1)
    std::size_t layer2_length() const; // floor(layer1_length / r2)
    std::size_t t_out() const;         // floor(layer2_length / ra)
    std::size_t n_paths() const { return static_cast<std::size_t>(n_filters_1) * n_filters_2; }
    std::size_t output_size() const { return n_paths() * t_out(); }

    /// Throws ConfigError describing the first violated invariant.
    void validate() const;
};

/// floor(n / r) with a small guard against representation error in r.
std::size_t subsampled_length(std::size_t n, double r);

/// J with 2^J closest to the averaging rate ra (at least 1).
int default_averaging_scale(double ra);

/// Lowpass responses vanish from this signed bin outwards: ceil(t_out / 2).
std::size_t lowpass_cutoff_bin(std::size_t t_out);

/// Mexican-hat profile dilated to peak value 1 at `center`:
/// (w/c)^2 exp(1 - (w/c)^2).
double mexican_hat_hat(double omega, double center);

/// Frequency responses sampled on each layer's DFT grid. All responses are
/// real and even in frequency (real, symmetric filters in time).
struct FilterBank {
    ScatteringConfig config;
    std::vector<std::vector<double>> layer1; // n_filters_1 x d
    std::vector<std::vector<double>> layer2; // n_filters_2 x layer1_length
    std::vector<double> lowpass;             // layer2_length
    std::vector<double> centers1;
    std::vector<double> centers2;

    // Averaging followed by resampling to t_out points is a fixed real linear
    // map; row t holds its kernel (t_out x layer2_length). Derived from lowpass.
    std::vector<double> averaging_kernel;
};

FilterBank build_filter_bank(const ScatteringConfig& config);

/// Sum over filters of |psi_hat(omega_k)|^2 for every bin k of one layer.
std::vector<double> littlewood_paley(const std::vector<std::vector<double>>& layer);

/// x (*)_r filter: circular convolution with a frequency-domain filter,
/// then band-limited resampling to floor(len(x) / r) points.
std::vector<double> circ_conv_subsample(std::span<const double> x, std::span<const double> filter_hat,
                                        double r);

/// Resamples the spectrum of a length-n signal to the lowest m frequencies and
/// returns the (real part of the) time-domain result, scaled so r=1 is identity.
std::vector<double> band_limited_resample(std::span<const fft::complex> spectrum, std::size_t m);

/// Flat layout: coefficient (l1, l2, t) sits at (l1 * n_filters_2 + l2) * t_out + t.
struct ScatteringVector {
    std::vector<double> coeffs;
    int n_filters_1 = 0;
    int n_filters_2 = 0;
    std::size_t t_out = 0;

    std::size_t index(int l1, int l2, std::size_t t) const
    {
        return (static_cast<std::size_t>(l1) * n_filters_2 + l2) * t_out + t;
    }
    double at(int l1, int l2, std::size_t t) const { return coeffs[index(l1, l2, t)]; }
};

/// Numerical residue observed during one transform.
struct ScatterDiagnostics {
    double min_before_clamp = 0.0; // most negative averaged output (0 if none)
};

ScatteringVector scatter2(std::span<const double> x, const FilterBank& bank,
                          ScatterDiagnostics* diagnostics = nullptr);

using FeatureMatrix = std::vector<std::vector<double>>;

/// Row i is scatter2(dataset.signals[i]). Rows are computed on `threads`
/// workers (0 = hardware concurrency) with order preserved.
FeatureMatrix scatter_batch(const LabeledDataset& dataset, const FilterBank& bank,
                            unsigned threads = 0);

void save_features_csv(const FeatureMatrix& features, const std::vector<int>& labels,
                       const std::string& path);
struct LabeledFeatures {
    FeatureMatrix features;
    std::vector<int> labels;
};
LabeledFeatures load_features_csv(const std::string& path, int K);

nlohmann::json to_json(const ScatteringConfig& config);
ScatteringConfig scattering_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FilterBank& bank);
/// Rebuilds the bank from its config and checks the stored filters match.
FilterBank filter_bank_from_json(const nlohmann::json& j);

} // namespace scatex
