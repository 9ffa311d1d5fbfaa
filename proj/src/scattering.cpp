#include "scatex/scattering.hpp"

#include "scatex/csv.hpp"
#include "scatex/errors.hpp"
#include "scatex/parallel.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>

namespace scatex {

using fft::complex;
using fft::cvec;

std::size_t subsampled_length(std::size_t n, double r)
{
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) / r + 1e-9));
}

std::size_t ScatteringConfig::layer1_length() const { return subsampled_length(d, r1); }
std::size_t ScatteringConfig::layer2_length() const { return subsampled_length(layer1_length(), r2); }
std::size_t ScatteringConfig::t_out() const { return subsampled_length(layer2_length(), ra); }

void ScatteringConfig::validate() const
{
    if (d < 2)
        throw ConfigError("scattering.d must be >= 2");
    if (n_filters_1 < 1 || n_filters_2 < 1)
        throw ConfigError("scattering.n_filters_1 and n_filters_2 must be >= 1");
    if (!(r1 >= 1.0) || !(r2 >= 1.0) || !(ra >= 1.0))
        throw ConfigError("scattering rates r1, r2, ra must be >= 1");
    if (J < 1)
        throw ConfigError("scattering.J must be a positive integer");
    if (!(lowest_center > 0.0) || !(highest_center >= lowest_center)
        || highest_center > std::numbers::pi)
        throw ConfigError("scattering centre frequencies need 0 < lowest <= highest <= pi");
    if (t_out() < 1)
        throw ConfigError("scattering config yields t_out = floor(floor(floor(d/r1)/r2)/ra) < 1");
}

int default_averaging_scale(double ra)
{
    return std::max(1, static_cast<int>(std::lround(std::log2(ra))));
}

std::size_t lowpass_cutoff_bin(std::size_t t_out)
{
    return (t_out + 1) / 2;
}

double mexican_hat_hat(double omega, double center)
{
    const double u = omega / center;
    return u * u * std::exp(1.0 - u * u);
}

namespace {

double bin_omega(std::size_t k, std::size_t n)
{
    return 2.0 * std::numbers::pi * static_cast<double>(fft::signed_bin(k, n)) / static_cast<double>(n);
}

std::vector<double> geometric_centers(int count, double lowest, double highest)
{
    std::vector<double> c(count);
    if (count == 1) {
        c[0] = highest;
        return c;
    }
    const double ratio = std::pow(lowest / highest, 1.0 / (count - 1));
    for (int i = 0; i < count; ++i)
        c[i] = highest * std::pow(ratio, i);
    c.back() = lowest;
    return c;
}

std::vector<std::vector<double>> build_layer(const std::vector<double>& centers, std::size_t n)
{
    std::vector<std::vector<double>> layer(centers.size(), std::vector<double>(n));
    for (std::size_t f = 0; f < centers.size(); ++f)
        for (std::size_t k = 0; k < n; ++k)
            layer[f][k] = mexican_hat_hat(std::abs(bin_omega(k, n)), centers[f]);
    // Scale so the Littlewood-Paley sum peaks at exactly 1.
    const auto lp = littlewood_paley(layer);
    const double peak = *std::max_element(lp.begin(), lp.end());
    const double scale = 1.0 / std::sqrt(peak);
    for (auto& filt : layer)
        for (double& v : filt)
            v *= scale;
    return layer;
}

} // namespace

std::vector<double> littlewood_paley(const std::vector<std::vector<double>>& layer)
{
    std::vector<double> sum(layer.empty() ? 0 : layer.front().size(), 0.0);
    for (const auto& filt : layer)
        for (std::size_t k = 0; k < filt.size(); ++k)
            sum[k] += filt[k] * filt[k];
    return sum;
}

FilterBank build_filter_bank(const ScatteringConfig& config)
{
    config.validate();
    FilterBank bank;
    bank.config = config;
    bank.centers1 = geometric_centers(config.n_filters_1, config.lowest_center, config.highest_center);
    bank.centers2 = geometric_centers(config.n_filters_2, config.lowest_center, config.highest_center);
    bank.layer1 = build_layer(bank.centers1, config.d);
    bank.layer2 = build_layer(bank.centers2, config.layer1_length());

    const std::size_t n2 = config.layer2_length();
    const double sigma = std::ldexp(1.0, config.J);
    const std::size_t cutoff = lowpass_cutoff_bin(config.t_out());
    bank.lowpass.resize(n2);
    for (std::size_t k = 0; k < n2; ++k) {
        const double w = bin_omega(k, n2);
        // Gaussian times a triangular taper vanishing at the first bin the
        // final resampling would drop. Both factors have non-negative time
        // kernels, and nothing is left above the kept band to ring.
        const double taper = std::max(0.0, 1.0 - std::abs(static_cast<double>(fft::signed_bin(k, n2)))
                                                     / static_cast<double>(cutoff));
        bank.lowpass[k] = std::exp(-0.5 * w * w * sigma * sigma) * taper;
    }

    // Kernel of (filter with lowpass, keep lowest n3 bins, inverse DFT of
    // length n3), obtained by pushing unit impulses through the spectral path.
    const std::size_t n3 = config.t_out();
    bank.averaging_kernel.assign(n3 * n2, 0.0);
    std::vector<double> impulse(n2, 0.0);
    for (std::size_t i = 0; i < n2; ++i) {
        impulse[i] = 1.0;
        auto spec = fft::forward(impulse);
        for (std::size_t k = 0; k < n2; ++k)
            spec[k] *= bank.lowpass[k];
        const auto column = band_limited_resample(spec, n3);
        for (std::size_t t = 0; t < n3; ++t)
            bank.averaging_kernel[t * n2 + i] = column[t];
        impulse[i] = 0.0;
    }
    return bank;
}

namespace {

// Truncates a length-n spectrum to its lowest m frequencies (m <= n).
void truncate_spectrum(const complex* spectrum, std::size_t n, std::size_t m, complex* out)
{
    if (m == n) {
        std::copy(spectrum, spectrum + n, out);
        return;
    }
    const std::size_t half = (m - 1) / 2; // bins +-1..half kept in full
    out[0] = spectrum[0];
    for (std::size_t k = 1; k <= half; ++k) {
        out[k] = spectrum[k];
        out[m - k] = spectrum[n - k];
    }
    if (m % 2 == 0)
        out[m / 2] = 0.5 * (spectrum[m / 2] + spectrum[n - m / 2]);
}

// Per-thread scratch space for the hot transform loop.
struct Workspace {
    cvec half_a, half_b, u1_hat;
    std::vector<double> real;
    void reserve(std::size_t n)
    {
        if (real.size() < n) {
            half_a.resize(n / 2 + 1);
            half_b.resize(n / 2 + 1);
            u1_hat.resize(n / 2 + 1);
            real.resize(n);
        }
    }
};

Workspace& workspace(std::size_t n)
{
    thread_local Workspace ws;
    ws.reserve(n);
    return ws;
}

// Half-spectrum version of filter-then-truncate: `spectrum` holds bins
// 0..n/2 of a real signal, `filter` the even response on the full grid; writes
// bins 0..m/2 of the length-m truncated spectrum. An even m takes the real
// part at its Nyquist bin, matching the mean of the +/- bins.
void filter_truncate_half(const complex* spectrum, const double* filter, std::size_t n, std::size_t m,
                          complex* out)
{
    const std::size_t top = m / 2;
    for (std::size_t k = 0; k <= top; ++k)
        out[k] = spectrum[k] * filter[k];
    if (m % 2 == 0 && m < n)
        out[top] = out[top].real();
}

} // namespace

std::vector<double> band_limited_resample(std::span<const complex> spectrum, std::size_t m)
{
    const std::size_t n = spectrum.size();
    if (m < 1 || m > n)
        throw InputError("band_limited_resample: need 1 <= m <= n");
    cvec trunc(m), time(m);
    truncate_spectrum(spectrum.data(), n, m, trunc.data());
    fft::c2c_plan(m, fft::Direction::backward).execute(trunc.data(), time.data());
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i)
        out[i] = time[i].real() / static_cast<double>(n);
    return out;
}

std::vector<double> circ_conv_subsample(std::span<const double> x, std::span<const double> filter_hat,
                                        double r)
{
    if (x.size() != filter_hat.size())
        throw InputError("circ_conv_subsample: signal length " + std::to_string(x.size())
                         + " != filter length " + std::to_string(filter_hat.size()));
    if (!(r >= 1.0))
        throw InputError("circ_conv_subsample: rate must be >= 1");
    auto spec = fft::forward(x);
    for (std::size_t k = 0; k < spec.size(); ++k)
        spec[k] *= filter_hat[k];
    return band_limited_resample(spec, subsampled_length(x.size(), r));
}

ScatteringVector scatter2(std::span<const double> x, const FilterBank& bank, ScatterDiagnostics* diagnostics)
{
    const auto& cfg = bank.config;
    if (x.size() != cfg.d)
        throw InputError("scatter2: signal length " + std::to_string(x.size()) + " != "
                         + std::to_string(cfg.d));
    const std::size_t n0 = cfg.d;
    const std::size_t n1 = cfg.layer1_length();
    const std::size_t n2 = cfg.layer2_length();
    const std::size_t n3 = cfg.t_out();

    const auto& fwd0 = fft::r2c_plan(n0);
    const auto& fwd1 = fft::r2c_plan(n1);
    const auto& inv1 = fft::c2r_plan(n1);
    const auto& inv2 = fft::c2r_plan(n2);

    ScatteringVector out;
    out.n_filters_1 = cfg.n_filters_1;
    out.n_filters_2 = cfg.n_filters_2;
    out.t_out = n3;
    out.coeffs.assign(cfg.output_size(), 0.0);

    Workspace& ws = workspace(n0);
    cvec x_hat(n0 / 2 + 1);
    fwd0.execute_r2c(x.data(), x_hat.data());

    double min_before = 0.0;
    const double inv_n0 = 1.0 / static_cast<double>(n0);
    const double inv_n1 = 1.0 / static_cast<double>(n1);

    for (int l1 = 0; l1 < cfg.n_filters_1; ++l1) {
        // Layer 1: |x (*)_{r1} psi1|
        filter_truncate_half(x_hat.data(), bank.layer1[l1].data(), n0, n1, ws.half_a.data());
        inv1.execute_c2r(ws.half_a.data(), ws.real.data());
        for (std::size_t i = 0; i < n1; ++i)
            ws.real[i] = std::abs(ws.real[i]) * inv_n0;
        fwd1.execute_r2c(ws.real.data(), ws.u1_hat.data());

        for (int l2 = 0; l2 < cfg.n_filters_2; ++l2) {
            // Layer 2: |U1 (*)_{r2} psi2|
            filter_truncate_half(ws.u1_hat.data(), bank.layer2[l2].data(), n1, n2, ws.half_b.data());
            inv2.execute_c2r(ws.half_b.data(), ws.real.data());
            // Averaging: U2 (*)_{ra} phi, a fixed real kernel.
            double* dst = out.coeffs.data() + out.index(l1, l2, 0);
            for (std::size_t t = 0; t < n3; ++t) {
                const double* row = bank.averaging_kernel.data() + t * n2;
                double v = 0.0;
                for (std::size_t i = 0; i < n2; ++i)
                    v += row[i] * std::abs(ws.real[i]);
                v *= inv_n1;
                min_before = std::min(min_before, v);
                dst[t] = v > 0.0 ? v : 0.0;
            }
        }
    }
    assert(min_before > -1e-8 && "averaged scattering output ringing exceeded 1e-8");
    if (diagnostics)
        diagnostics->min_before_clamp = min_before;
    return out;
}

FeatureMatrix scatter_batch(const LabeledDataset& dataset, const FilterBank& bank, unsigned threads)
{
    for (std::size_t i = 0; i < dataset.size(); ++i)
        if (dataset.signals[i].size() != bank.config.d)
            throw InputError("scatter_batch: row " + std::to_string(i) + " has length "
                             + std::to_string(dataset.signals[i].size()) + ", expected "
                             + std::to_string(bank.config.d));
    FeatureMatrix rows(dataset.size());
    parallel_for(dataset.size(), threads,
                 [&](std::size_t i) { rows[i] = scatter2(dataset.signals[i], bank).coeffs; });
    return rows;
}

void save_features_csv(const FeatureMatrix& features, const std::vector<int>& labels, const std::string& path)
{
    csv::write_labeled_rows(path, "f", labels, features);
}

LabeledFeatures load_features_csv(const std::string& path, int K)
{
    auto rows = csv::read_labeled_rows(path, "f", K);
    return {std::move(rows.rows), std::move(rows.labels)};
}

nlohmann::json to_json(const ScatteringConfig& c)
{
    return {{"d", c.d},
            {"n_filters_1", c.n_filters_1},
            {"n_filters_2", c.n_filters_2},
            {"r1", c.r1},
            {"r2", c.r2},
            {"ra", c.ra},
            {"J", c.J},
            {"wavelet", "mexican_hat"},
            {"lowest_center", c.lowest_center},
            {"highest_center", c.highest_center}};
}

ScatteringConfig scattering_config_from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw ConfigError("scattering: expected an object");
    ScatteringConfig c;
    auto get = [&](const char* key, auto& field) {
        if (!j.contains(key))
            return;
        try {
            j.at(key).get_to(field);
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(std::string("scattering.") + key + ": wrong type");
        }
    };
    get("d", c.d);
    get("n_filters_1", c.n_filters_1);
    get("n_filters_2", c.n_filters_2);
    get("r1", c.r1);
    get("r2", c.r2);
    get("ra", c.ra);
    get("J", c.J);
    get("lowest_center", c.lowest_center);
    get("highest_center", c.highest_center);
    if (j.contains("wavelet") && j.at("wavelet") != "mexican_hat")
        throw ConfigError("scattering.wavelet: only 'mexican_hat' is supported");
    for (const auto& [key, _] : j.items()) {
        static const char* known[] = {"d", "n_filters_1", "n_filters_2", "r1", "r2", "ra", "J",
                                      "wavelet", "lowest_center", "highest_center"};
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; })
            == std::end(known))
            throw ConfigError("scattering." + key + ": unknown field");
    }
    c.validate();
    return c;
}

nlohmann::json to_json(const FilterBank& bank)
{
    return {{"config", to_json(bank.config)},
            {"centers1", bank.centers1},
            {"centers2", bank.centers2},
            {"layer1", bank.layer1},
            {"layer2", bank.layer2},
            {"lowpass", bank.lowpass}};
}

FilterBank filter_bank_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("config"))
        throw InputError("filter bank JSON: missing 'config'");
    FilterBank bank = build_filter_bank(scattering_config_from_json(j.at("config")));
    try {
        if (j.at("layer1").get<std::vector<std::vector<double>>>() != bank.layer1
            || j.at("layer2").get<std::vector<std::vector<double>>>() != bank.layer2
            || j.at("lowpass").get<std::vector<double>>() != bank.lowpass)
            throw InputError("filter bank JSON: stored filters differ from those rebuilt from its config");
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("filter bank JSON: ") + e.what());
    }
    return bank;
}

} // namespace scatex
