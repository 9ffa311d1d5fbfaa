#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace scatex::fft {

using complex = std::complex<double>;
using cvec = std::vector<complex>;

enum class Direction { forward, backward };

/// Cached FFTW plan for one transform length. Plans are created once per
/// (length, kind) and shared; execute() is safe to call concurrently.
class Plan {
public:
    Plan(void* handle, std::size_t n) : handle_(handle), n_(n) {}
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;

    std::size_t size() const { return n_; }

    // Unnormalized complex DFT, out-of-place (in and out must not alias).
    void execute(const complex* in, complex* out) const;
    // Real input of length n to n/2+1 complex bins.
    void execute_r2c(const double* in, complex* out) const;
    // n/2+1 Hermitian half-spectrum bins to n real samples; `in` is clobbered.
    void execute_c2r(complex* in, double* out) const;
    // Unnormalized real-to-real transform (DCT kinds only).
    void execute_r2r(const double* in, double* out) const;

private:
    void* handle_ = nullptr;
    std::size_t n_ = 0;
};

const Plan& c2c_plan(std::size_t n, Direction dir);
const Plan& r2c_plan(std::size_t n);
const Plan& c2r_plan(std::size_t n);
// FFTW REDFT10 (unnormalized DCT-II) and REDFT01 (unnormalized DCT-III).
const Plan& dct2_plan(std::size_t n);
const Plan& dct3_plan(std::size_t n);

cvec forward(std::span<const double> x);
cvec forward(std::span<const complex> x);
// Unnormalized inverse: backward(forward(x)) == n * x.
cvec backward(std::span<const complex> x);

/// Signed frequency index of DFT bin k for length n: k for k <= n/2, k - n above.
inline long signed_bin(std::size_t k, std::size_t n)
{
    return 2 * k <= n ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

} // namespace scatex::fft
