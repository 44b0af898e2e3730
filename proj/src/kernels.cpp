// Elementwise activation kernels. This translation unit is built with
// -ffast-math so the loops below vectorize through the libmvec sin/cos
// variants; nothing here inspects NaN or infinity.

#include <cmath>
#include <cstddef>

#include "pinr/autodiff.hpp"

namespace pinr::kernels {

void sine(double* __restrict z, double* __restrict d, std::size_t n, double omega) {
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) z[i] *= omega;
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) d[i] = omega * std::cos(z[i]);
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) z[i] = std::sin(z[i]);
}

void sine_inplace(double* __restrict z, std::size_t n, double omega) {
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) z[i] = std::sin(omega * z[i]);
}

void relu(double* __restrict z, double* __restrict d, std::size_t n) {
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = z[i] > 0.0 ? 1.0 : 0.0;
        z[i] = z[i] > 0.0 ? z[i] : 0.0;
    }
}

}  // namespace pinr::kernels
