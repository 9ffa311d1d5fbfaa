#include "scatex/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace scatex::fft {

namespace {

enum class Kind { c2c_forward, c2c_backward, r2c, c2r, dct2, dct3 };

// FFTW's planner is not thread-safe; execution with the new-array API is.
std::mutex planner_mutex;
std::map<std::pair<Kind, std::size_t>, std::unique_ptr<Plan>> plans;

void* make_handle(Kind kind, std::size_t n)
{
    const int len = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    if (kind == Kind::c2c_forward || kind == Kind::c2c_backward) {
        cvec a(n), b(n);
        return fftw_plan_dft_1d(len, reinterpret_cast<fftw_complex*>(a.data()),
                                reinterpret_cast<fftw_complex*>(b.data()),
                                kind == Kind::c2c_forward ? FFTW_FORWARD : FFTW_BACKWARD, flags);
    }
    if (kind == Kind::r2c || kind == Kind::c2r) {
        std::vector<double> r(n);
        cvec c(n / 2 + 1);
        auto* cp = reinterpret_cast<fftw_complex*>(c.data());
        return kind == Kind::r2c ? fftw_plan_dft_r2c_1d(len, r.data(), cp, flags)
                                 : fftw_plan_dft_c2r_1d(len, cp, r.data(), flags);
    }
    std::vector<double> a(n), b(n);
    return fftw_plan_r2r_1d(len, a.data(), b.data(), kind == Kind::dct2 ? FFTW_REDFT10 : FFTW_REDFT01,
                            flags | FFTW_PRESERVE_INPUT);
}

const Plan& cached(Kind kind, std::size_t n)
{
    if (n == 0)
        throw std::invalid_argument("fft: zero-length transform");
    std::lock_guard lock(planner_mutex);
    auto& slot = plans[{kind, n}];
    if (!slot) {
        void* handle = make_handle(kind, n);
        if (handle == nullptr)
            throw std::runtime_error("fft: FFTW failed to create a plan");
        slot = std::make_unique<Plan>(handle, n);
    }
    return *slot;
}

} // namespace

void Plan::execute(const complex* in, complex* out) const
{
    // Out-of-place c2c transforms leave the input untouched.
    fftw_execute_dft(static_cast<fftw_plan>(handle_),
                     reinterpret_cast<fftw_complex*>(const_cast<complex*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

void Plan::execute_r2c(const double* in, complex* out) const
{
    fftw_execute_dft_r2c(static_cast<fftw_plan>(handle_), const_cast<double*>(in),
                         reinterpret_cast<fftw_complex*>(out));
}

void Plan::execute_c2r(complex* in, double* out) const
{
    fftw_execute_dft_c2r(static_cast<fftw_plan>(handle_), reinterpret_cast<fftw_complex*>(in), out);
}

void Plan::execute_r2r(const double* in, double* out) const
{
    fftw_execute_r2r(static_cast<fftw_plan>(handle_), const_cast<double*>(in), out);
}

const Plan& c2c_plan(std::size_t n, Direction dir)
{
    return cached(dir == Direction::forward ? Kind::c2c_forward : Kind::c2c_backward, n);
}

const Plan& r2c_plan(std::size_t n) { return cached(Kind::r2c, n); }
const Plan& c2r_plan(std::size_t n) { return cached(Kind::c2r, n); }
const Plan& dct2_plan(std::size_t n) { return cached(Kind::dct2, n); }
const Plan& dct3_plan(std::size_t n) { return cached(Kind::dct3, n); }

cvec forward(std::span<const double> x)
{
    cvec in(x.begin(), x.end());
    return forward(std::span<const complex>(in));
}

cvec forward(std::span<const complex> x)
{
    cvec out(x.size());
    c2c_plan(x.size(), Direction::forward).execute(x.data(), out.data());
    return out;
}

cvec backward(std::span<const complex> x)
{
    cvec out(x.size());
    c2c_plan(x.size(), Direction::backward).execute(x.data(), out.data());
    return out;
}

} // namespace scatex::fft
