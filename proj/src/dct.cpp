#include "scatex/dct.hpp"

#include "scatex/errors.hpp"
#include "scatex/fft.hpp"

#include <cmath>

namespace scatex {

void dct_forward(std::span<const double> x, std::span<double> out)
{
    const std::size_t n = x.size();
    if (n == 0 || out.size() != n)
        throw InputError("dct_forward: need matching non-empty buffers");
    if (n == 1) {
        out[0] = x[0];
        return;
    }
    // FFTW's REDFT10 is 2 * sum_j x_j cos(...).
    fft::dct2_plan(n).execute_r2r(x.data(), out.data());
    const double s0 = std::sqrt(1.0 / n) / 2.0;
    const double sk = std::sqrt(2.0 / n) / 2.0;
    out[0] *= s0;
    for (std::size_t k = 1; k < n; ++k)
        out[k] *= sk;
}

void dct_inverse(std::span<const double> c, std::span<double> out)
{
    const std::size_t n = c.size();
    if (n == 0 || out.size() != n)
        throw InputError("dct_inverse: need matching non-empty buffers");
    if (n == 1) {
        out[0] = c[0];
        return;
    }
    // REDFT01 is X_0 + 2 * sum_{k>=1} X_k cos(...).
    std::vector<double> scaled(c.begin(), c.end());
    scaled[0] *= std::sqrt(1.0 / n);
    const double sk = std::sqrt(2.0 / n) / 2.0;
    for (std::size_t k = 1; k < n; ++k)
        scaled[k] *= sk;
    fft::dct3_plan(n).execute_r2r(scaled.data(), out.data());
}

std::vector<double> dct_forward(std::span<const double> x)
{
    std::vector<double> out(x.size());
    dct_forward(x, out);
    return out;
}

std::vector<double> dct_inverse(std::span<const double> c)
{
    std::vector<double> out(c.size());
    dct_inverse(c, out);
    return out;
}

} // namespace scatex
