#pragma once

#include <span>
#include <vector>

namespace scatex {

/// Orthonormal DCT-II: c_k = s_k sum_j x_j cos(pi (j + 1/2) k / n),
/// s_0 = sqrt(1/n), s_k = sqrt(2/n).
std::vector<double> dct_forward(std::span<const double> x);
/// Orthonormal DCT-III, the inverse of dct_forward.
std::vector<double> dct_inverse(std::span<const double> c);

void dct_forward(std::span<const double> x, std::span<double> out);
void dct_inverse(std::span<const double> c, std::span<double> out);

} // namespace scatex
