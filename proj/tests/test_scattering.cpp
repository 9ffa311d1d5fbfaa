#include "scatex/errors.hpp"
#include "scatex/scattering.hpp"
#include "support/oracles.hpp"
#include "support/scatter_oracle.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

using namespace scatex;

namespace {

std::vector<double> random_signal(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> x(n);
    for (double& v : x)
        v = g(rng);
    return x;
}

double norm2(const std::vector<double>& v)
{
    return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_abs(const std::vector<double>& a)
{
    double m = 0.0;
    for (double v : a)
        m = std::max(m, std::abs(v));
    return m;
}

const FilterBank& paper_bank()
{
    static const FilterBank bank = build_filter_bank(ScatteringConfig{});
    return bank;
}

ScatteringConfig small_config(double r1, double r2, double ra)
{
    ScatteringConfig c;
    c.d = 32;
    c.n_filters_1 = 5;
    c.n_filters_2 = 4;
    c.r1 = r1;
    c.r2 = r2;
    c.ra = ra;
    c.J = default_averaging_scale(ra);
    return c;
}

} // namespace

TEST_CASE("reference configuration yields 14 + 11 filters and 1078 coefficients")
{
    const auto& bank = paper_bank();
    CHECK(bank.layer1.size() == 14);
    CHECK(bank.layer2.size() == 11);
    for (const auto& f : bank.layer1)
        CHECK(f.size() == 128);
    for (const auto& f : bank.layer2)
        CHECK(f.size() == 85);
    CHECK(bank.lowpass.size() == 56);
    CHECK(bank.config.layer1_length() == 85);
    CHECK(bank.config.layer2_length() == 56);
    CHECK(bank.config.t_out() == 7);
    CHECK(bank.config.output_size() == 1078);
    CHECK(scatter2(random_signal(128, 1), bank).coeffs.size() == 1078);
}

TEST_CASE("bandpass filters have no DC response and the lowpass has positive DC")
{
    const auto& bank = paper_bank();
    for (const auto& f : bank.layer1)
        CHECK(std::abs(f[0]) < 1e-10);
    for (const auto& f : bank.layer2)
        CHECK(std::abs(f[0]) < 1e-10);
    CHECK(bank.lowpass[0] > 0.0);
}

TEST_CASE("Littlewood-Paley sum is bounded by 1 and reaches at least 0.5")
{
    const auto& bank = paper_bank();
    for (const auto* layer : {&bank.layer1, &bank.layer2}) {
        std::vector<double> sum(layer->front().size(), 0.0);
        for (const auto& f : *layer)
            for (std::size_t k = 0; k < f.size(); ++k)
                sum[k] += f[k] * f[k];
        const double mx = *std::max_element(sum.begin(), sum.end());
        CHECK(mx <= 1.0 + 1e-6);
        CHECK(mx >= 0.5);
        CHECK(littlewood_paley(*layer) == sum);
    }
}

TEST_CASE("every filter entry is finite")
{
    const auto& bank = paper_bank();
    for (const auto* layer : {&bank.layer1, &bank.layer2})
        for (const auto& f : *layer)
            CHECK(std::all_of(f.begin(), f.end(), [](double v) { return std::isfinite(v); }));
}

TEST_CASE("circ_conv_subsample with an all-pass filter at rate 1 is the identity")
{
    const auto x = random_signal(128, 5);
    const std::vector<double> ones(128, 1.0);
    const auto y = circ_conv_subsample(x, ones, 1.0);
    CHECK(max_abs_diff(x, y) < 1e-10);
}

TEST_CASE("fractional rate 1.5 maps 128 samples to 85 and 85 to 56")
{
    const std::vector<double> ones(128, 1.0);
    CHECK(circ_conv_subsample(random_signal(128, 2), ones, 1.5).size() == 85);
    CHECK(subsampled_length(85, 1.5) == 56);
    CHECK(subsampled_length(56, 8) == 7);
}

TEST_CASE("an in-band sinusoid is scaled by the filter's response at its frequency")
{
    const auto& bank = paper_bank();
    const std::size_t n = 128;
    for (int f : {3, 9, 20, 40}) {
        std::vector<double> x(n);
        for (std::size_t j = 0; j < n; ++j)
            x[j] = std::cos(2.0 * std::numbers::pi * f * double(j) / double(n));
        for (const auto& psi : bank.layer1) {
            const auto y = circ_conv_subsample(x, psi, 1.0);
            const auto direct = oracle::circ_conv(x, oracle::impulse(psi));
            CHECK(max_abs_diff(y, direct) < 1e-12);
            for (std::size_t j = 0; j < n; ++j)
                CHECK(std::abs(y[j] - std::abs(psi[f]) * x[j]) < 1e-12);
        }
    }
}

TEST_CASE("integer-rate convolution and subsampling matches the time-domain oracle")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t r : {1u, 2u, 4u}) {
        const std::size_t n = 32;
        // Real even spectrum so the impulse response is real.
        std::vector<double> H(n);
        for (std::size_t k = 0; k <= n / 2; ++k)
            H[k] = H[(n - k) % n] = u(rng);
        const auto x = random_signal(n, 10 + r);
        const auto fast = circ_conv_subsample(x, H, double(r));
        const auto slow = oracle::conv_decimate(x, H, r);
        REQUIRE(fast.size() == slow.size());
        CHECK(max_abs_diff(fast, slow) <= 1e-10 * max_abs(slow));
    }
}

TEST_CASE("scatter2 on d = 32 integer-rate configs matches the naive oracle")
{
    const ScatteringConfig configs[] = {small_config(2, 2, 2), small_config(1, 2, 4), small_config(2, 1, 2),
                                        small_config(2, 2, 4)};
    for (const auto& cfg : configs) {
        const FilterBank bank = build_filter_bank(cfg);
        for (std::uint64_t s = 0; s < 5; ++s) {
            const auto x = random_signal(32, 100 + s);
            const auto fast = scatter2(x, bank).coeffs;
            const auto slow = oracle::scatter(x, bank);
            REQUIRE(fast.size() == slow.size());
            CHECK(max_abs_diff(fast, slow) <= 1e-8 * max_abs(slow));
        }
    }
}

TEST_CASE("scatter2 of zero is zero, and outputs are non-negative")
{
    const auto& bank = paper_bank();
    const auto z = scatter2(std::vector<double>(128, 0.0), bank).coeffs;
    CHECK(std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; }));
    for (std::uint64_t s = 0; s < 20; ++s) {
        ScatterDiagnostics diag;
        const auto c = scatter2(random_signal(128, s), bank, &diag).coeffs;
        CHECK(std::all_of(c.begin(), c.end(), [](double v) { return v >= 0.0; }));
        CHECK(diag.min_before_clamp > -1e-8);
    }
}

TEST_CASE("scatter2 is exactly sign invariant and positively homogeneous")
{
    const auto& bank = paper_bank();
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto x = random_signal(128, 40 + s);
        const auto base = scatter2(x, bank).coeffs;
        auto neg = x;
        for (double& v : neg)
            v = -v;
        CHECK(scatter2(neg, bank).coeffs == base);
        for (double a : {0.0, 0.25, 3.0, 1e3}) {
            auto scaled = x;
            for (double& v : scaled)
                v *= a;
            const auto sc = scatter2(scaled, bank).coeffs;
            std::vector<double> expected(base);
            for (double& v : expected)
                v *= a;
            CHECK(max_abs_diff(sc, expected) <= 1e-10 * std::max(max_abs(expected), 1e-300));
        }
    }
}

TEST_CASE("a one-sample circular shift moves scattering coefficients less than the signal")
{
    const auto& bank = paper_bank();
    const auto ds = gen_cbf(34, 77); // 102 samples; first 100 used
    int contracted = 0;
    for (std::size_t i = 0; i < 100; ++i) {
        const auto& x = ds.signals[i];
        std::vector<double> shifted(x.size());
        std::rotate_copy(x.begin(), x.end() - 1, x.end(), shifted.begin());
        const auto s0 = scatter2(x, bank).coeffs;
        const auto s1 = scatter2(shifted, bank).coeffs;
        std::vector<double> ds_diff(s0.size()), x_diff(x.size());
        for (std::size_t j = 0; j < s0.size(); ++j)
            ds_diff[j] = s1[j] - s0[j];
        for (std::size_t j = 0; j < x.size(); ++j)
            x_diff[j] = shifted[j] - x[j];
        contracted += norm2(ds_diff) / norm2(s0) < norm2(x_diff) / norm2(x);
    }
    CHECK(contracted >= 95);
}

TEST_CASE("scatter_batch rows equal independent transforms and follow row order")
{
    const auto& bank = paper_bank();
    auto ds = gen_triangle(1, 8);
    const auto rows = scatter_batch(ds, bank, 1);
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(rows[i] == scatter2(ds.signals[i], bank).coeffs);

    std::swap(ds.signals[0], ds.signals[2]);
    std::swap(ds.labels[0], ds.labels[2]);
    const auto swapped = scatter_batch(ds, bank, 3);
    CHECK(swapped[0] == rows[2]);
    CHECK(swapped[1] == rows[1]);
    CHECK(swapped[2] == rows[0]);
}

TEST_CASE("CBF training set features are 300 x 1078 regardless of thread count")
{
    const auto ds = gen_cbf(100, 1);
    const auto one = scatter_batch(ds, paper_bank(), 1);
    CHECK(one.size() == 300);
    CHECK(one.front().size() == 1078);
    CHECK(scatter_batch(ds, paper_bank(), 4) == one);
}

TEST_CASE("length mismatches are rejected")
{
    CHECK_THROWS_AS(scatter2(std::vector<double>(127, 0.0), paper_bank()), InputError);
    CHECK_THROWS_AS(circ_conv_subsample(std::vector<double>(10, 0.0), std::vector<double>(11, 1.0), 1.0),
                    InputError);
}

TEST_CASE("configurations without a positive output length are rejected")
{
    ScatteringConfig c;
    c.ra = 100;
    CHECK_THROWS_AS(build_filter_bank(c), ConfigError);
    ScatteringConfig c2;
    c2.r1 = 0.5;
    CHECK_THROWS_AS(c2.validate(), ConfigError);
    ScatteringConfig c3;
    c3.n_filters_2 = 0;
    CHECK_THROWS_AS(c3.validate(), ConfigError);
}

TEST_CASE("filter bank JSON round trip is exact and detects altered filters")
{
    const auto& bank = paper_bank();
    const auto j = to_json(bank);
    const auto back = filter_bank_from_json(j);
    CHECK(back.layer1 == bank.layer1);
    CHECK(back.layer2 == bank.layer2);
    CHECK(back.lowpass == bank.lowpass);

    auto tampered = j;
    tampered["layer1"][0][5] = tampered["layer1"][0][5].get<double>() * 1.01;
    CHECK_THROWS_AS(filter_bank_from_json(tampered), InputError);

    auto unknown = to_json(bank.config);
    unknown["sigma"] = 1.0;
    CHECK_THROWS_AS(scattering_config_from_json(unknown), ConfigError);
}

TEST_CASE("feature CSV round trip is exact")
{
    const auto ds = gen_cbf(2, 3);
    const auto rows = scatter_batch(ds, paper_bank(), 1);
    const auto path = (std::filesystem::temp_directory_path() / "scatex_features.csv").string();
    save_features_csv(rows, ds.labels, path);
    const auto back = load_features_csv(path, 3);
    CHECK(back.features == rows);
    CHECK(back.labels == ds.labels);
}
