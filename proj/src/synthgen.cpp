#include "scatex/synthgen.hpp"

#include "scatex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace scatex {

std::string to_string(Generator g)
{
    return g == Generator::cbf ? "cbf" : "triangle";
}

Generator generator_from_string(const std::string& name)
{
    if (name == "cbf")
        return Generator::cbf;
    if (name == "triangle")
        return Generator::triangle;
    throw ConfigError("unknown dataset generator '" + name + "' (expected cbf or triangle)");
}

void validate(const LabeledDataset& ds)
{
    if (ds.signals.size() != ds.labels.size())
        throw InputError("dataset: signal and label counts differ");
    if (ds.K < 1)
        throw InputError("dataset: class count must be positive");
    const std::size_t d = ds.length();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.signals[i].size() != d || d < 2)
            throw InputError("dataset: signal " + std::to_string(i) + " has length "
                             + std::to_string(ds.signals[i].size()) + ", expected "
                             + std::to_string(d) + " (>= 2)");
        if (!std::all_of(ds.signals[i].begin(), ds.signals[i].end(),
                         [](double v) { return std::isfinite(v); }))
            throw InputError("dataset: signal " + std::to_string(i) + " has non-finite samples");
        if (ds.labels[i] < 1 || ds.labels[i] > ds.K)
            throw InputError("dataset: label " + std::to_string(ds.labels[i]) + " outside 1.."
                             + std::to_string(ds.K));
    }
}

namespace cbf {

Signal shape(int cls, int a, int b, double amplitude)
{
    if (cls < 1 || cls > 3)
        throw InputError("cbf: class must be 1, 2 or 3");
    if (a < 1 || b > length || b <= a)
        throw InputError("cbf: need 1 <= a < b <= 128");
    Signal x(length, 0.0);
    const double span = b - a;
    for (int i = a; i <= b; ++i) {
        double w = 1.0;
        if (cls == bell)
            w = (i - a) / span;
        else if (cls == funnel)
            w = (b - i) / span;
        x[i - 1] = amplitude * w;
    }
    return x;
}

} // namespace cbf

namespace triangle {

double h(int k, int i)
{
    if (k < 1 || k > 3)
        throw InputError("triangle: base index must be 1, 2 or 3");
    const int shift = 21 * (k - 1);
    const double apex = 43 + shift;
    return std::max(6.0 - std::abs(i - apex) / 7.0, 0.0);
}

Signal h_vector(int k)
{
    Signal v(length);
    for (int i = 1; i <= length; ++i)
        v[i - 1] = h(k, i);
    return v;
}

std::pair<int, int> components(int cls)
{
    switch (cls) {
    case 1: return {1, 2};
    case 2: return {1, 3};
    case 3: return {2, 3};
    default: throw InputError("triangle: class must be 1, 2 or 3");
    }
}

Signal shape(int cls, double u)
{
    const auto [first, second] = components(cls);
    Signal x(length);
    for (int i = 1; i <= length; ++i)
        x[i - 1] = u * h(first, i) + (1.0 - u) * h(second, i);
    return x;
}

} // namespace triangle

namespace {

void check_count(int n_per_class)
{
    if (n_per_class < 1)
        throw ConfigError("n_per_class must be >= 1");
}

void add_white_noise(Signal& x, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : x)
        v += normal(rng);
}

} // namespace

LabeledDataset gen_cbf(int n_per_class, std::uint64_t seed, std::vector<cbf::Draw>* draws)
{
    check_count(n_per_class);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> onset(16, 32);
    std::uniform_int_distribution<int> duration(32, 96);
    std::normal_distribution<double> normal(0.0, 1.0);

    LabeledDataset ds;
    ds.K = 3;
    ds.seed = seed;
    ds.generator = Generator::cbf;
    ds.signals.reserve(3 * n_per_class);
    for (int cls = 1; cls <= 3; ++cls) {
        for (int n = 0; n < n_per_class; ++n) {
            const int a = onset(rng);
            const int b = a + duration(rng);
            // One amplitude perturbation per signal.
            const double eta = normal(rng);
            if (draws)
                draws->push_back({a, b, eta});
            Signal x = cbf::shape(cls, a, b, 6.0 + eta);
            add_white_noise(x, rng);
            ds.signals.push_back(std::move(x));
            ds.labels.push_back(cls);
        }
    }
    return ds;
}

LabeledDataset gen_triangle(int n_per_class, std::uint64_t seed)
{
    check_count(n_per_class);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    LabeledDataset ds;
    ds.K = 3;
    ds.seed = seed;
    ds.generator = Generator::triangle;
    ds.signals.reserve(3 * n_per_class);
    for (int cls = 1; cls <= 3; ++cls) {
        for (int n = 0; n < n_per_class; ++n) {
            Signal x = triangle::shape(cls, uniform(rng));
            add_white_noise(x, rng);
            ds.signals.push_back(std::move(x));
            ds.labels.push_back(cls);
        }
    }
    return ds;
}

LabeledDataset generate(Generator g, int n_per_class, std::uint64_t seed)
{
    return g == Generator::cbf ? gen_cbf(n_per_class, seed) : gen_triangle(n_per_class, seed);
}

} // namespace scatex
