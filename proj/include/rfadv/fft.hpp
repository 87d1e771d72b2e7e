#pragma once

#include <complex>
#include <span>
#include <vector>

namespace rfadv {

// Forward DFT, unnormalized: X[k] = sum_n x[n] exp(-j 2 pi k n / N).
// Radix-2 iterative FFT for power-of-two lengths, direct O(n^2) DFT
// otherwise (window lengths here are small, so the fallback is acceptable).
std::vector<std::complex<double>> fft_forward(std::span<const std::complex<double>> x);

bool is_pow2(std::size_t n);

} // namespace rfadv
