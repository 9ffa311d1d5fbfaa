#pragma once

// Straight-line reference implementations used as test oracles. Everything
// here is O(n^2) direct summation with no FFT.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

using cd = std::complex<double>;

inline std::vector<cd> dft(const std::vector<double>& x)
{
    const std::size_t n = x.size();
    std::vector<cd> X(n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j)
            X[k] += x[j] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * j % n) / double(n));
    return X;
}

/// Real impulse response of a real, even frequency response.
inline std::vector<double> impulse(const std::vector<double>& H)
{
    const std::size_t n = H.size();
    std::vector<double> h(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        cd s = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            s += H[k] * std::polar(1.0, 2.0 * std::numbers::pi * double(k * j % n) / double(n));
        h[j] = s.real() / double(n);
    }
    return h;
}

inline std::vector<double> circ_conv(const std::vector<double>& x, const std::vector<double>& h)
{
    const std::size_t n = x.size();
    std::vector<double> y(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t m = 0; m < n; ++m)
            y[j] += x[m] * h[(j + n - m) % n];
    return y;
}

/// Ideal lowpass kernel keeping the lowest m of n bins (half weight on the
/// two edge bins when m is even and m < n).
inline std::vector<double> ideal_lowpass(std::size_t n, std::size_t m)
{
    std::vector<double> G(n, 0.0);
    if (m == n) {
        std::fill(G.begin(), G.end(), 1.0);
    } else {
        for (std::size_t k = 0; k < n; ++k) {
            const long s = k <= n / 2 ? long(k) : long(k) - long(n);
            const double a = std::abs(double(s));
            if (2 * a < double(m))
                G[k] = 1.0;
            else if (m % 2 == 0 && 2 * a == double(m))
                G[k] = 0.5;
        }
    }
    return impulse(G);
}

/// Circular convolution with filter_hat followed by decimation by the
/// integer rate r (n must be a multiple of r).
inline std::vector<double> conv_decimate(const std::vector<double>& x, const std::vector<double>& filter_hat,
                                         std::size_t r)
{
    const std::size_t n = x.size();
    const std::size_t m = n / r;
    const auto y = circ_conv(circ_conv(x, impulse(filter_hat)), ideal_lowpass(n, m));
    std::vector<double> out(m);
    for (std::size_t t = 0; t < m; ++t)
        out[t] = y[r * t];
    return out;
}

/// Orthonormal DCT-II by direct summation.
inline std::vector<double> dct2(const std::vector<double>& x)
{
    const std::size_t n = x.size();
    std::vector<double> c(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < n; ++j)
            c[k] += x[j] * std::cos(std::numbers::pi * (double(j) + 0.5) * double(k) / double(n));
        c[k] *= std::sqrt((k == 0 ? 1.0 : 2.0) / double(n));
    }
    return c;
}

} // namespace oracle
